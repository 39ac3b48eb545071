#include "cpa/experiments.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cpa/errors.hpp"
#include "cpa/parallel.hpp"

namespace cpa {
namespace {

using nlohmann::json;

json fixture() {
  std::ifstream in(std::string(CPA_FIXTURE_DIR) + "/oracle.json");
  return json::parse(in);
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

RunSettings settings(std::uint64_t seed, std::uint64_t trials, double t_max) {
  RunSettings s;
  s.seed = seed;
  s.trials = trials;
  s.t_max = t_max;
  return s;
}

OracleSpec path_spec(const json& j) {
  OracleSpec spec;
  AgeProfile profile{j["profile_head"].get<std::vector<double>>(), j["profile_tail"].get<double>()};
  spec.params = ModelParams::make(1, profile, j["gamma"].get<double>());
  for (const auto& x : j["sites"]) spec.sites.push_back(Site{x[0].get<int>()});
  spec.age_cap = j["age_cap"].get<Age>();
  return spec;
}

TEST(Oracle, MatchesFrozenPathValue) {
  const json j = fixture()["three_site_path"];
  const OracleSpec spec = path_spec(j);
  const Config f = Config::single(Site{j["initial"]["site"][0].get<int>()}, j["initial"]["age"].get<Age>());
  const OracleResult r = exact_small_oracle(spec, f, j["t"].get<double>());
  EXPECT_EQ(r.states, 27u);
  EXPECT_NEAR(r.p_nonempty, j["p_nonempty"].get<double>(), j["error_bound"].get<double>());
  EXPECT_LT(r.error_bound, 1e-9);
  double total = 0.0;
  for (double p : r.distribution) {
    EXPECT_GE(p, -1e-15);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_NEAR(r.marginals[0], r.marginals[2], 1e-12);
}

TEST(Oracle, SterileSiteDecaysAtUnitRate) {
  const json j = fixture()["single_sterile_site"];
  OracleSpec spec;
  spec.params = ModelParams::make(1, AgeProfile::zero(), 1.0);
  spec.sites = {Site{0}};
  const auto ts = j["t"].get<std::vector<double>>();
  const auto ps = j["p_alive"].get<std::vector<double>>();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const OracleResult r = exact_small_oracle(spec, Config::single(Site{0}), ts[i]);
    EXPECT_NEAR(r.p_nonempty, ps[i], 1e-12);
    EXPECT_NEAR(r.marginals[0], ps[i], 1e-12);
  }
}

TEST(Oracle, TimeZeroIsPointMass) {
  const OracleSpec spec = path_spec(fixture()["three_site_path"]);
  const Config f{{Site{-1}, 2}, {Site{1}, 1}};
  const OracleResult r = exact_small_oracle(spec, f, 0.0);
  const std::size_t s0 = oracle_state(spec, f);
  EXPECT_EQ(s0, 2u + 1u * 9u);
  EXPECT_DOUBLE_EQ(r.distribution[s0], 1.0);
  EXPECT_DOUBLE_EQ(r.p_nonempty, 1.0);
  EXPECT_EQ(r.error_bound, 0.0);
}

TEST(Oracle, LongRunsSplitIntoPieces) {
  OracleSpec spec = path_spec(fixture()["three_site_path"]);
  const Config f = Config::single(Site{0});
  const double a = exact_small_oracle(spec, f, 40.0, 1e-12).p_nonempty;
  const OracleResult half = exact_small_oracle(spec, f, 20.0, 1e-12);
  double b = 0.0;
  for (std::size_t s = 1; s < half.states; ++s) {
    if (half.distribution[s] == 0.0) continue;
    Config g;
    for (std::size_t i = 0; i < spec.sites.size(); ++i) {
      std::size_t digit = s;
      for (std::size_t k = 0; k < i; ++k) digit /= spec.age_cap + 1;
      if (digit % (spec.age_cap + 1)) g.set(spec.sites[i], static_cast<Age>(digit % (spec.age_cap + 1)));
    }
    b += half.distribution[s] * exact_small_oracle(spec, g, 20.0, 1e-12).p_nonempty;
  }
  EXPECT_NEAR(a, b, 1e-9);
  EXPECT_GT(a, 0.0);
}

TEST(Oracle, RejectsBadInput) {
  OracleSpec spec = path_spec(fixture()["three_site_path"]);
  EXPECT_THROW(exact_small_oracle(spec, Config::single(Site{0}, 3), 1.0), InvalidArgument);
  EXPECT_THROW(exact_small_oracle(spec, Config::single(Site{5}), 1.0), InvalidArgument);
  EXPECT_THROW(exact_small_oracle(spec, Config::single(Site{0}), -1.0), InvalidArgument);
  EXPECT_THROW(exact_small_oracle(spec, Config::single(Site{0}), 1.0, 1e-10, 26), StateSpaceOverflow);
  spec.age_cap = 1;
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec.age_cap = 2;
  spec.sites.push_back(Site{0});
  EXPECT_THROW(spec.validate(), InvalidArgument);
}

TEST(Oracle, MonteCarloAgreesForBothEngines) {
  const json j = fixture()["three_site_path"];
  const OracleSpec spec = path_spec(j);
  const double t = j["t"].get<double>();
  const double exact = j["p_nonempty"].get<double>();
  const Region region(Box::centered(Site{0}, 2));
  const int n = 20000;
  int harris = 0;
  int direct = 0;
  for (int i = 0; i < n; ++i) {
    const Omega om(trial_seed(101, i), spec.params, t);
    harris += !evolve_final(om, Config::single(Site{0}), t, region).empty();
    direct += !evolve_direct(spec.params, Config::single(Site{0}), t, trial_seed(202, i), region).final_config().empty();
  }
  const double se = std::sqrt(exact * (1.0 - exact) / n);
  EXPECT_NEAR(harris / static_cast<double>(n), exact, 4.0 * se);
  EXPECT_NEAR(direct / static_cast<double>(n), exact, 4.0 * se);
}

TEST(Oracle, CsvSchema) {
  const OracleSpec spec = path_spec(fixture()["three_site_path"]);
  const OracleResult r = exact_small_oracle(spec, Config::single(Site{0}), 1.0);
  std::ostringstream out;
  write_oracle_csv(out, spec, r);
  EXPECT_EQ(first_line(out.str()), "kind,x0,p");
  EXPECT_EQ(line_count(out.str()), 5u);
}

TEST(Survival, ZeroProfileNeverSurvives) {
  const ModelParams p = ModelParams::make(1, AgeProfile::zero(), 1.0);
  const SurvivalEstimate est = estimate_survival(p, Config::single(Site{0}), settings(3, 200, 10.0));
  EXPECT_EQ(est.rho.successes, 0u);
  EXPECT_EQ(est.aborted, 0u);
  for (const auto& tr : est.trials) EXPECT_LT(tr.lifetime, 10.0);
}

TEST(Survival, MonotoneInProfileUnderSharedBase) {
  const ModelParams lo = ModelParams::make(1, AgeProfile::constant(1.5), 1.0, 4.0);
  const ModelParams hi = ModelParams::make(1, AgeProfile::constant(3.0), 1.0, 4.0);
  const RunSettings s = settings(5, 300, 20.0);
  const SurvivalEstimate a = estimate_survival(lo, Config::single(Site{0}), s);
  const SurvivalEstimate b = estimate_survival(hi, Config::single(Site{0}), s);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_LE(a.trials[i].alive, b.trials[i].alive);
    EXPECT_LE(a.trials[i].lifetime, b.trials[i].lifetime);
  }
  EXPECT_LT(a.rho.p, b.rho.p);
}

TEST(Survival, ThreadCountDoesNotChangeResults) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  RunSettings s = settings(9, 64, 15.0);
  std::ostringstream one;
  write_survival_csv(one, estimate_survival(p, Config::single(Site{0}), s));
  s.threads = 3;
  std::ostringstream three;
  write_survival_csv(three, estimate_survival(p, Config::single(Site{0}), s));
  EXPECT_EQ(one.str(), three.str());
  EXPECT_EQ(first_line(one.str()), "trial,seed,alive_at_Tmax");
  EXPECT_EQ(line_count(one.str()), 65u);
}

TEST(Survival, AbortedTrialsAreExcluded) {
  const ModelParams p = ModelParams::make(1, AgeProfile::constant(6.0), 1.0);
  RunSettings s = settings(2, 50, 20.0);
  s.m_conf = 0.05;
  s.margin = 1;
  const SurvivalEstimate est = estimate_survival(p, Config::single(Site{0}), s);
  EXPECT_GT(est.aborted, 0u);
  EXPECT_EQ(est.rho.trials, 50u - est.aborted);
  std::ostringstream out;
  write_survival_csv(out, est);
  EXPECT_NE(out.str().find(",\n"), std::string::npos);
}

TEST(Tails, SterileLifetimeIsExponential) {
  const ModelParams p = ModelParams::make(1, AgeProfile::zero(), 1.0);
  const TailFit fit =
      fit_conditioned_extinction_tail(p, Config::single(Site{0}), {0.5, 1.0, 1.5, 2.0}, settings(17, 4000, 50.0));
  for (std::size_t i = 0; i < fit.grid.size(); ++i) {
    const double q = std::exp(-fit.grid[i]);
    EXPECT_NEAR(fit.survival_freq[i], q, 4.0 * std::sqrt(q * (1.0 - q) / 4000.0));
  }
  EXPECT_NEAR(fit.rate_B, 1.0, 0.1);
  EXPECT_GT(fit.r_squared, 0.99);
  EXPECT_TRUE(fit.diagnostic.empty());
}

TEST(Tails, FitRecoversExactExponential) {
  std::vector<double> grid;
  std::vector<std::uint64_t> counts;
  for (int i = 0; i < 6; ++i) {
    grid.push_back(i);
    counts.push_back(static_cast<std::uint64_t>(std::llround(8000.0 * std::exp(-0.5 * i))));
  }
  const TailFit fit = fit_tail(grid, counts, 10000);
  EXPECT_NEAR(fit.rate_B, 0.5, 1e-3);
  EXPECT_NEAR(fit.prefactor_A, 0.8, 1e-3);
  EXPECT_TRUE(exponential_fit(fit));
  const TailFit sparse = fit_tail({0, 1}, {100, 3}, 1000);
  EXPECT_NE(sparse.diagnostic.find("too few events"), std::string::npos);
  EXPECT_FALSE(exponential_fit(sparse));
  std::ostringstream a;
  std::ostringstream b;
  write_tail_csv(a, fit);
  write_tail_fit_csv(b, fit);
  EXPECT_EQ(first_line(a.str()), "t,count,trials,freq");
  EXPECT_EQ(first_line(b.str()), "rate_B,prefactor_A,r_squared,points,diagnostic");
}

TEST(Tails, HittingTailDecreasesInConstant) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  const HittingSample sample = sample_hitting(p, {Site{5}, Site{-8}}, settings(21, 300, 40.0));
  std::vector<double> grid{0, 2, 4, 6, 8};
  double prev = 2.0;
  for (double C : {1.0, 2.0, 4.0}) {
    const TailFit f = hitting_tail(sample, C, grid);
    EXPECT_EQ(f.trials, 600u);
    EXPECT_LE(f.survival_freq.front(), prev);
    prev = f.survival_freq.front();
    for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LE(f.counts[i], f.counts[i - 1]);
  }
  std::ostringstream out;
  write_hitting_csv(out, sample);
  EXPECT_EQ(first_line(out.str()), "trial,seed,x0,t_x,alive_at_Tmax,aborted");
  EXPECT_EQ(line_count(out.str()), 601u);
}

TEST(Tails, SterileProcessHasNoHittingConstant) {
  const ModelParams p = ModelParams::make(1, AgeProfile::zero(), 1.0);
  const HittingSample sample = sample_hitting(p, {Site{3}}, settings(1, 50, 10.0));
  const HittingConstant hc = choose_hitting_constant(sample, {1.0, 2.0}, {0, 1, 2, 3, 4});
  EXPECT_FALSE(hc.C.has_value());
  EXPECT_TRUE(hc.fits.empty());
  EXPECT_THROW(inverse_speed(sample), InsufficientData);
}

TEST(Tails, HittingConstantRespectsSpeedAndHorizon) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  const HittingSample sample = sample_hitting(p, {Site{4}, Site{8}}, settings(23, 300, 60.0));
  const std::vector<double> grid{0, 2, 4, 6, 8};
  EXPECT_THROW(hitting_tail(sample, 7.0, grid), InvalidArgument);
  const double v = inverse_speed(sample);
  EXPECT_GT(v, 0.0);
  const HittingConstant hc = choose_hitting_constant(sample, {0.1, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0}, grid);
  EXPECT_DOUBLE_EQ(hc.inverse_speed, v);
  ASSERT_FALSE(hc.tried.empty());
  for (double c : hc.tried) {
    EXPECT_GE(c, v);
    EXPECT_LE(hitting_horizon(sample, c, grid), 60.0);
  }
  EXPECT_EQ(hc.tried.size(), hc.fits.size());
  if (hc.C) EXPECT_TRUE(exponential_fit(hc.fits[static_cast<std::size_t>(
                std::find(hc.tried.begin(), hc.tried.end(), *hc.C) - hc.tried.begin())]));
}

TEST(Sigma, KTailIsNonincreasingAndMatchesCounts) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  const SigmaSample sample = sample_sigma(p, {Site{3}, Site{6}}, settings(31, 200, 40.0));
  const auto rows = k_tail(sample, 1, 4, 0.35);
  ASSERT_EQ(rows.size(), 4u);
  std::uint64_t survivors = 0;
  std::uint64_t above2 = 0;
  for (const auto& tr : sample.trials) {
    if (tr.aborted || !tr.survived) continue;
    ++survivors;
    above2 += tr.traces[1].K > 2;
  }
  EXPECT_EQ(rows[1].exceed.trials, survivors);
  EXPECT_EQ(rows[1].exceed.successes, above2);
  EXPECT_NEAR(rows[2].bound, std::pow(0.65, 3), 1e-15);
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_LE(rows[k].exceed.successes, rows[k - 1].exceed.successes);
  std::ostringstream out;
  write_k_tail_csv(out, rows);
  EXPECT_EQ(first_line(out.str()), "k,exceed,trials,freq,se,bound");
}

TEST(Sigma, GapStatisticsFollowTraces) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  const std::vector<int> ns{2, 4};
  const SigmaSample sample = sample_sigma(p, {Site{2}, Site{4}}, settings(41, 150, 40.0));
  const auto rows = sigma_t_gap(sample, ns);
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::vector<double> v;
    for (const auto& tr : sample.trials) {
      if (!usable(tr, j)) continue;
      EXPECT_GE(tr.traces[j].sigma, *tr.traces[j].t_x);
      v.push_back((tr.traces[j].sigma - *tr.traces[j].t_x) / ns[j]);
    }
    EXPECT_EQ(rows[j].count, v.size());
    EXPECT_NEAR(rows[j].mean, mean(v), 1e-12);
    EXPECT_LE(rows[j].lo, rows[j].mean);
    EXPECT_LE(rows[j].median, rows[j].q90);
  }
  std::ostringstream out;
  write_scaled_csv(out, rows);
  EXPECT_EQ(first_line(out.str()), "n,count,mean,lo,hi,median,q90");
  std::ostringstream sig;
  write_sigma_csv(sig, sample);
  EXPECT_EQ(first_line(sig.str()), "trial,seed,x0,K,sigma,t_x,censored,degenerate");
}

TEST(Sigma, SampleIsThreadIndependent) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  RunSettings s = settings(43, 40, 30.0);
  std::ostringstream one;
  write_sigma_csv(one, sample_sigma(p, {Site{4}}, s));
  s.threads = 4;
  std::ostringstream four;
  write_sigma_csv(four, sample_sigma(p, {Site{4}}, s));
  EXPECT_EQ(one.str(), four.str());
}

TEST(Mu, ForwardAndReverseAreConsistent) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  const MuEstimate mu = estimate_mu(p, Site{1}, {4, 8, 12}, settings(51, 200, 60.0));
  EXPECT_GT(mu.mu, 0.0);
  EXPECT_LE(mu.mu_lo, mu.mu);
  EXPECT_GE(mu.mu_hi, mu.mu);
  EXPECT_LT(mu.mu_reverse_lo, mu.mu_hi + 1.0);
  EXPECT_GE(mu.hit_spread, 0.0);
  for (std::size_t j = 0; j < mu.n_list.size(); ++j) EXPECT_GE(mu.sigma[j].mean, mu.hit[j].mean - 1e-12);
  std::ostringstream out;
  write_mu_csv(out, mu);
  EXPECT_EQ(first_line(out.str()),
            "n,count,sigma_mean,sigma_lo,sigma_hi,t_count,t_mean,t_lo,t_hi,reverse_count,reverse_mean");
  EXPECT_EQ(line_count(out.str()), 4u);
  EXPECT_THROW(estimate_mu(p, Site{1}, {4}, settings(51, 10, 10.0)), InvalidArgument);
}

TEST(Residual, DefinitionHoldsPerTrial) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  const ResidualResult r = measure_subadditivity_residual(p, Site{3}, Site{4}, {0.0, 1.0, 5.0}, settings(61, 150, 60.0));
  EXPECT_GT(r.used, 20u);
  double sum = 0.0;
  for (const auto& tr : r.trials) {
    if (!tr.used) continue;
    EXPECT_GE(tr.r, 0.0);
    EXPECT_DOUBLE_EQ(tr.r, std::max(0.0, tr.sigma_xy - tr.sigma_x - tr.sigma_y_shifted));
    EXPECT_GE(tr.sigma_y_shifted, 0.0);
    sum += tr.r;
  }
  EXPECT_NEAR(r.mean_r, sum / r.used, 1e-12);
  EXPECT_EQ(r.tail[0].successes, r.used);
  EXPECT_LE(r.tail[2].successes, r.tail[1].successes);
  std::ostringstream a;
  std::ostringstream b;
  write_residual_csv(a, r);
  write_residual_tail_csv(b, r);
  EXPECT_EQ(first_line(a.str()), "trial,seed,used,sigma_x,sigma_y_shifted,sigma_xy,r");
  EXPECT_EQ(first_line(b.str()), "t,count,trials,freq,lo,hi");
}

TEST(Shape, DirectionsAreSixteenPrimitiveVectors) {
  const auto dirs = shape_directions();
  ASSERT_EQ(dirs.size(), 16u);
  EXPECT_EQ(dirs.front(), (Site{1, 0}));
  EXPECT_EQ(dirs[1], (Site{2, 1}));
  EXPECT_EQ(dirs[4], (Site{0, 1}));
  for (const Site& u : dirs) EXPECT_NE(std::find(dirs.begin(), dirs.end(), u * -1), dirs.end());
}

TEST(Shape, BallRadiusInterpolatesInAngle) {
  std::vector<DirectionalSpeed> mu;
  for (const Site& u : shape_directions()) mu.push_back({u, 1, 2.0, 2.0, 2.0});
  for (double th : {0.0, 0.3, 2.0, 5.9, -1.0}) EXPECT_NEAR(ball_radius(mu, th), 0.5, 1e-15);
  mu[0].mu = 1.0;
  EXPECT_NEAR(ball_radius(mu, 0.0), 1.0, 1e-15);
  const double half = std::atan2(1.0, 2.0) / 2.0;
  EXPECT_NEAR(ball_radius(mu, half), 0.75, 1e-12);
  EXPECT_NEAR(ball_radius(mu, 2.0 * std::numbers::pi - 1e-9), 1.0, 1e-6);
}

TEST(Shape, SnapshotInclusionsWidenWithEps) {
  const ModelParams p = krone_params(2.0, 2.0, 2);
  ShapeSettings sh;
  sh.t = 8.0;
  sh.eps = {0.1, 0.5, 0.9};
  sh.cloud_trials = 2;
  const ShapeEstimate e = shape_snapshot(p, sh, settings(71, 40, 8.0));
  EXPECT_GT(e.survivors, 5u);
  ASSERT_EQ(e.mu.size(), 16u);
  for (std::size_t i = 1; i < e.eps.size(); ++i) {
    EXPECT_GE(e.inner[i].successes, e.inner[i - 1].successes);
    EXPECT_GE(e.outer[i].successes, e.outer[i - 1].successes);
  }
  EXPECT_EQ(e.cloud.size(), 2u);
  std::ostringstream a;
  std::ostringstream b;
  std::ostringstream c;
  write_shape_mu_csv(a, e);
  write_shape_inclusion_csv(b, e);
  write_shape_cloud_csv(c, e);
  EXPECT_EQ(first_line(a.str()), "u0,u1,count,mu,lo,hi");
  EXPECT_EQ(first_line(b.str()), "eps,survivors,inner,inner_lo,outer,outer_lo");
  EXPECT_EQ(first_line(c.str()), "seed,z0,z1");
  EXPECT_THROW(shape_snapshot(krone_params(2.0, 2.0, 1), sh, settings(1, 5, 8.0)), InvalidArgument);
}

TEST(Fkg, AliveIndicatorsArePositivelyCorrelated) {
  const ModelParams p = ModelParams::make(1, AgeProfile::constant(2.0), 1.0);
  const FkgResult r =
      fkg_spot_check(p, Box::centered(Site{0}, 5), Config::single(Site{0}), 2.0, Site{-1}, Site{1}, settings(81, 2000, 2.0));
  EXPECT_EQ(r.trials, 2000u);
  EXPECT_TRUE(r.passes());
  EXPECT_GT(r.covariance, 0.0);
  EXPECT_GT(r.mean_u, 0.0);
}

TEST(Calibration, PicksFirstCandidateAboveThreshold) {
  const Calibration c = calibrate(1, settings(91, 300, 30.0));
  ASSERT_TRUE(c.found);
  for (std::size_t i = 0; i + 1 < c.tried.size(); ++i) EXPECT_LT(c.tried[i].rho.p, 0.3);
  EXPECT_GE(c.rho.p, 0.3);
  EXPECT_EQ(c.params, krone_params(c.lambda, c.gamma, 1));
  EXPECT_EQ(c.tried.back().lambda, c.lambda);
  std::ostringstream out;
  write_calibration_csv(out, c);
  EXPECT_EQ(first_line(out.str()), "lambda,gamma,rho,lo,hi,chosen");
  EXPECT_EQ(line_count(out.str()), c.tried.size() + 1);
}

TEST(Confinement, CalibratedSpeedBoundsGrowth) {
  const ModelParams p = krone_params(4.0, 2.0, 1);
  const double m = calibrate_confinement(p, 10.0, 20, 3);
  EXPECT_GT(m, 0.0);
  RunSettings s = settings(4, 100, 10.0);
  s.m_conf = m;
  EXPECT_EQ(estimate_survival(p, Config::single(Site{0}), s).aborted, 0u);
  EXPECT_FALSE(confinement(1, 10.0, settings(1, 1, 1.0)).has_value());
}

}  // namespace
}  // namespace cpa
