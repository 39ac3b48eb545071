#include "cpa/stats.hpp"

#include <gtest/gtest.h>

#include <random>

#include "cpa/errors.hpp"
#include "cpa/parallel.hpp"

namespace cpa {
namespace {

TEST(Wilson, KnownIntervals) {
  const Proportion half = wilson(5, 10);
  EXPECT_DOUBLE_EQ(half.p, 0.5);
  EXPECT_NEAR(half.lo, 0.236593090512564, 1e-12);
  EXPECT_NEAR(half.hi, 0.7634069094874361, 1e-12);
  EXPECT_NEAR(half.se, std::sqrt(0.025), 1e-15);

  const Proportion none = wilson(0, 20);
  EXPECT_EQ(none.lo, 0.0);
  EXPECT_NEAR(none.hi, 0.16112515805281938, 1e-12);

  const Proportion most = wilson(97, 100);
  EXPECT_NEAR(most.lo, 0.9154806357094724, 1e-12);
  EXPECT_NEAR(most.hi, 0.9897454759759611, 1e-12);
}

TEST(Wilson, ShrinksWithTrials) {
  const Proportion small = wilson(30, 100);
  const Proportion large = wilson(3000, 10000);
  EXPECT_NEAR((small.hi - small.lo) / (large.hi - large.lo), 10.0, 0.3);
  const Proportion empty = wilson(0, 0);
  EXPECT_EQ(empty.lo, 0.0);
  EXPECT_EQ(empty.hi, 1.0);
}

TEST(Kolmogorov, TailValues) {
  EXPECT_NEAR(kolmogorov_tail(1.358), 0.05002679733444698, 1e-9);
  EXPECT_NEAR(kolmogorov_tail(1.0), 0.26999967167735456, 1e-9);
  EXPECT_EQ(kolmogorov_tail(0.0), 1.0);
  EXPECT_LT(kolmogorov_tail(3.0), 1e-6);
}

TEST(Ks, UniformSampleIsAccepted) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(2000);
  for (double& v : s) v = u(rng);
  const KsResult r = ks_one_sample(s, [](double x) { return std::clamp(x, 0.0, 1.0); });
  EXPECT_GT(r.p_value, 0.01);
  const KsResult shifted = ks_one_sample(s, [](double x) { return std::clamp(x * x, 0.0, 1.0); });
  EXPECT_LT(shifted.p_value, 1e-6);
}

TEST(Ks, TwoSample) {
  std::mt19937_64 rng(13);
  std::exponential_distribution<double> e1(1.0);
  std::exponential_distribution<double> e2(2.0);
  std::vector<double> a(1500);
  std::vector<double> b(1500);
  std::vector<double> c(1500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = e1(rng);
    b[i] = e1(rng);
    c[i] = e2(rng);
  }
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
  EXPECT_LT(ks_two_sample(a, c).p_value, 1e-6);
  EXPECT_DOUBLE_EQ(ks_two_sample(a, a).statistic, 0.0);
}

TEST(FitLine, ExactLine) {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> y{1, -1, -3, -5, -7};
  const LinearFit f = fit_line(x, y);
  EXPECT_DOUBLE_EQ(f.slope, -2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);
  EXPECT_DOUBLE_EQ(f.r2, 1.0);
  EXPECT_EQ(f.points, 5u);
  EXPECT_THROW(fit_line(std::vector<double>{1.0}, std::vector<double>{2.0}), InsufficientData);
  EXPECT_THROW(fit_line(std::vector<double>{1.0, 1.0}, std::vector<double>{2.0, 3.0}), InsufficientData);
}

TEST(Summary, QuantilesAndCorrelation) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.9), 9.0);
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{2, 4, 6, 8};
  const std::vector<double> z{8, 6, 4, 2};
  EXPECT_DOUBLE_EQ(pearson(x, y), 1.0);
  EXPECT_DOUBLE_EQ(pearson(x, z), -1.0);
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_THROW(mean(std::vector<double>{}), InsufficientData);
}

TEST(Parallel, ResultsAreIndexedAndSeedsDistinct) {
  const auto out = parallel_map(50, 4, [](std::size_t i) { return trial_seed(9, i); });
  ASSERT_EQ(out.size(), 50u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], trial_seed(9, i));
  EXPECT_NE(out[0], out[1]);
  EXPECT_THROW(parallel_map(10, 2,
                            [](std::size_t i) {
                              if (i == 7) throw InvalidArgument("boom");
                              return 0;
                            }),
               InvalidArgument);
}

}  // namespace
}  // namespace cpa
