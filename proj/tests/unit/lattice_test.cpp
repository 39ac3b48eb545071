#include "cpa/lattice.hpp"

#include <gtest/gtest.h>

#include <random>

#include "cpa/errors.hpp"

namespace cpa {
namespace {

TEST(Neighbors, OneDimensionalOrder) {
  EXPECT_EQ(neighbors(Site{0}), (std::vector<Site>{Site{-1}, Site{1}}));
}

TEST(Neighbors, TwoDimensionalOrder) {
  EXPECT_EQ(neighbors(Site{0, 0}), (std::vector<Site>{Site{-1, 0}, Site{1, 0}, Site{0, -1}, Site{0, 1}}));
}

TEST(Neighbors, CountAndSymmetry) {
  for (const Site& x : {Site{3, -7}, Site{0, 0}, Site{-100, 42}}) {
    const auto ns = neighbors(x);
    ASSERT_EQ(ns.size(), 4u);
    for (const Site& y : ns) {
      EXPECT_EQ((y - x).l1_norm(), 1);
      const Site mirrored = x - (y - x);
      EXPECT_NE(std::find(ns.begin(), ns.end(), mirrored), ns.end());
    }
  }
}

TEST(Site, KeyRoundTripAndOrder) {
  const std::vector<Site> sites{Site{-5, 2}, Site{-5, 3}, Site{0, -1}, Site{4, 0}};
  for (std::size_t i = 0; i < sites.size(); ++i) {
    EXPECT_EQ(Site::from_key(sites[i].key(), 2), sites[i]);
    if (i > 0) EXPECT_LT(sites[i - 1].key(), sites[i].key());
  }
  EXPECT_THROW(Site({1 << 20}).key(), InvalidArgument);
}

TEST(Edge, CanonicalIdentity) {
  const Edge a(Site{1, 2}, Site{1, 3});
  const Edge b(Site{1, 3}, Site{1, 2});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.key(), b.key());
  EXPECT_EQ(a.low(), (Site{1, 2}));
  EXPECT_EQ(a.high(), (Site{1, 3}));
  EXPECT_EQ(Edge::from_key(a.key(), 2), a);
  EXPECT_EQ(a.other(Site{1, 2}), (Site{1, 3}));
  EXPECT_THROW(Edge(Site{0, 0}, Site{1, 1}), InvalidArgument);
}

TEST(Config, DeadIsAbsent) {
  Config c;
  c.set(Site{0}, 2);
  c.set(Site{1}, 0);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(c.at(Site{1}), 0u);
  c.set(Site{0}, 0);
  EXPECT_TRUE(c.empty());
}

TEST(Join, Examples) {
  const Config g{{Site{0}, 1}, {Site{2}, 5}};
  EXPECT_EQ(join(Config{}, g), g);
  EXPECT_EQ(join(Config{{Site{0}, 2}}, Config{{Site{0}, 3}}), (Config{{Site{0}, 3}}));
  EXPECT_EQ(join(g, g), g);
}

TEST(Leq, Examples) {
  const Config g{{Site{0}, 1}};
  EXPECT_TRUE(leq(Config{}, g));
  EXPECT_FALSE(leq(Config{{Site{0}, 2}}, Config{{Site{0}, 1}}));
  EXPECT_TRUE(leq(g, join(g, Config{{Site{4}, 7}})));
}

Config random_config(std::mt19937_64& rng) {
  Config c;
  std::uniform_int_distribution<int> pos(-3, 3);
  std::uniform_int_distribution<int> age(0, 3);
  for (int i = 0; i < 5; ++i) c.set(Site{pos(rng), pos(rng)}, static_cast<Age>(age(rng)));
  return c;
}

TEST(Join, LatticeLaws) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Config f = random_config(rng);
    const Config g = random_config(rng);
    const Config h = random_config(rng);
    EXPECT_EQ(join(f, g), join(g, f));
    EXPECT_EQ(join(join(f, g), h), join(f, join(g, h)));
    EXPECT_EQ(join(f, f), f);
    EXPECT_TRUE(leq(f, join(f, g)));
    EXPECT_TRUE(leq(f, f));
    if (leq(f, g) && leq(g, f)) EXPECT_EQ(f, g);
    if (leq(f, g) && leq(g, h)) EXPECT_TRUE(leq(f, h));
  }
}

TEST(Box, InteriorAndSites) {
  const Box b = Box::centered(Site{0, 0}, 1);
  EXPECT_EQ(b.volume(), 9u);
  EXPECT_TRUE(b.contains(Site{1, -1}));
  EXPECT_FALSE(b.interior_contains(Site{1, 0}));
  EXPECT_TRUE(b.interior_contains(Site{0, 0}));
  const auto s = b.sites();
  EXPECT_EQ(s.front(), (Site{-1, -1}));
  EXPECT_EQ(s[1], (Site{-1, 0}));
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(Config::cube(Site{0, 0}, 1).size(), 9u);
}

}  // namespace
}  // namespace cpa
