#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "apw/marking.hpp"
#include "oracles.hpp"

using apw::FreqIndex;
using apw::PairContribution;

namespace {

FreqIndex f1(int a) { return FreqIndex::of({a}); }

std::vector<PairContribution> abc() { return {{f1(1), 0.30}, {f1(2), 0.20}, {f1(3), 0.50}}; }

std::vector<PairContribution> random_pairs(std::mt19937_64& gen, int count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PairContribution> out;
  for (int k = 1; k <= count; ++k) out.push_back({f1(k), u(gen) * u(gen)});
  return out;
}

}  // namespace

TEST(DorflerMark, SingleLargestPairSuffices) {
  const auto m = apw::dorfler_mark(abc(), 0.7, 1.0, 1);
  EXPECT_EQ(m.pairs_marked, 1u);
  EXPECT_EQ(m.marked, apw::IndexSet(1, {f1(3), f1(-3)}));
  EXPECT_NEAR(m.achieved_fraction, std::sqrt(0.5), 1e-15);
  EXPECT_EQ(m.pairs_considered, 3u);
}

TEST(DorflerMark, HighThetaNeedsAllThree) {
  const auto m = apw::dorfler_mark(abc(), 0.9, 1.0, 1);
  EXPECT_EQ(m.pairs_marked, 3u);
  std::vector<double> c;
  for (const auto& p : abc()) c.push_back(p.value);
  EXPECT_EQ(oracle::min_cover_bruteforce(c, 0.81), 3);
}

TEST(DorflerMark, TinyThetaTakesOnePair) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_pairs(gen, 8);
    double total = 0.0;
    for (const auto& x : p) total += x.value;
    EXPECT_EQ(apw::dorfler_mark(p, 1e-6, total, 1).pairs_marked, 1u);
  }
}

TEST(DorflerMark, GreedyIsMinimal) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> theta(0.05, 0.95);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_pairs(gen, 1 + trial % 12);
    double total = 0.0;
    std::vector<double> c;
    for (const auto& x : p) {
      total += x.value;
      c.push_back(x.value);
    }
    const double th = theta(gen);
    const auto m = apw::dorfler_mark(p, th, total, 1);
    EXPECT_EQ(static_cast<int>(m.pairs_marked), oracle::min_cover_bruteforce(c, th * th * total));
    EXPECT_GE(m.achieved_fraction, th);
  }
}

TEST(DorflerMark, SymmetricMonotoneDeterministic) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PairContribution> p;
    std::uniform_int_distribution<int> comp(-4, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double total = 0.0;
    std::vector<FreqIndex> seen;
    while (p.size() < 10) {
      const FreqIndex g = apw::pair_representative(FreqIndex::of({comp(gen), comp(gen)}));
      if (g == FreqIndex{} || std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
      seen.push_back(g);
      p.push_back({g, u(gen)});
      total += p.back().value;
    }
    std::size_t prev = 0;
    for (double th : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto m = apw::dorfler_mark(p, th, total, 2);
      EXPECT_TRUE(apw::validate_symmetric(m.marked));
      EXPECT_GE(m.pairs_marked, prev);
      prev = m.pairs_marked;
      const auto again = apw::dorfler_mark(p, th, total, 2);
      EXPECT_EQ(again.marked, m.marked);
    }
  }
}

TEST(DorflerMark, TieBreakPrefersLowFrequency) {
  const std::vector<PairContribution> p{{f1(3), 0.25}, {f1(1), 0.25}, {f1(2), 0.5}};
  const auto m = apw::dorfler_mark(p, std::sqrt(0.7), 1.0, 1);
  EXPECT_EQ(m.marked, apw::IndexSet(1, {f1(2), f1(-2), f1(1), f1(-1)}));
}

TEST(DorflerMark, Errors) {
  EXPECT_THROW(apw::dorfler_mark(abc(), 0.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(apw::dorfler_mark(abc(), 1.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(apw::dorfler_mark({}, 0.5, 1.0, 1), std::domain_error);
  // candidates carry only 0.1 of a total of 1: the bulk criterion is unreachable
  EXPECT_THROW(apw::dorfler_mark(std::vector<PairContribution>{{f1(1), 0.1}}, 0.9, 1.0, 1), std::domain_error);
}

TEST(DorflerMark, ZeroFrequencyIsSingleton) {
  const std::vector<PairContribution> p{{FreqIndex{}, 0.9}, {f1(1), 0.1}};
  const auto m = apw::dorfler_mark(p, 0.5, 1.0, 1);
  EXPECT_EQ(m.marked, apw::IndexSet(1, {FreqIndex{}}));
}
