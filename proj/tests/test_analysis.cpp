#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include "radapt/analysis.hpp"
#include "radapt/designs.hpp"

using namespace radapt;

namespace {
// P(W >= w_obs) by enumerating every labeling of the pooled sample.
double brute_force_p(const std::vector<double>& t, const std::vector<double>& c) {
  std::vector<double> all(t);
  all.insert(all.end(), c.begin(), c.end());
  const std::size_t n = all.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      less += all[j] < all[i];
      equal += all[j] == all[i];
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double obs = 0;
  for (std::size_t i = 0; i < t.size(); ++i) obs += rank[i];
  long hit = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != static_cast<int>(t.size())) continue;
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) w += rank[i];
    ++total;
    hit += w >= obs - 1e-9;
  }
  return static_cast<double>(hit) / total;
}

TrialTrajectory make_traj(const std::vector<std::vector<double>>& by_arm) {
  TrialTrajectory t;
  t.arm_labels = {"C", "T1", "T2"};
  int id = 0;
  for (std::size_t k = 0; k < by_arm.size(); ++k)
    for (double y : by_arm[k]) t.patients.push_back({++id, 1, k, y});
  return t;
}
}  // namespace

TEST(Wilcoxon, Examples) {
  const std::vector<double> hi{5, 6, 7, 8}, lo{1, 2, 3, 4};
  EXPECT_NEAR(wilcoxon_one_sided(hi, lo), 1.0 / 70.0, 1e-15);
  // The observed statistic is the minimum, so P(W >= w) = 1 and the strict
  // upper tail is 1 - 1/70.
  EXPECT_DOUBLE_EQ(wilcoxon_one_sided(lo, hi), 1.0);
  EXPECT_NEAR(1.0 - detail::tie_free_tail(4, 8)[11], 1.0 / 70.0, 1e-15);
  EXPECT_NEAR(detail::tie_free_tail(4, 8)[11], 1.0 - 1.0 / 70.0, 1e-15);
  const std::vector<double> a{1.5, 3.5, 2.25, 9.0};
  EXPECT_GE(wilcoxon_one_sided(a, a), 0.5);
  const std::vector<double> b{1.5, 3.5, 2.25, 9.0, 0.1}, c{0.1, 9.0, 3.5, 1.5, 2.25};
  EXPECT_GE(wilcoxon_one_sided(b, c), 0.5);
}

TEST(Wilcoxon, Errors) {
  const std::vector<double> none, one{1.0}, bad{NAN};
  EXPECT_THROW(wilcoxon_one_sided(none, one), InvalidInput);
  EXPECT_THROW(wilcoxon_one_sided(one, none), InvalidInput);
  EXPECT_THROW(wilcoxon_one_sided(bad, one), InvalidInput);
}

TEST(Wilcoxon, MatchesEnumerationTieFree) {
  Rng rng(31);
  for (std::size_t n = 2; n <= 10; ++n)
    for (std::size_t n1 = 1; n1 < n; ++n1)
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> t, c;
        for (std::size_t i = 0; i < n1; ++i) t.push_back(rng.normal() + 0.3);
        for (std::size_t i = n1; i < n; ++i) c.push_back(rng.normal());
        EXPECT_NEAR(wilcoxon_one_sided(t, c), brute_force_p(t, c), 1e-12) << n1 << "/" << n;
      }
}

TEST(Wilcoxon, MatchesEnumerationWithTies) {
  Rng rng(32);
  for (std::size_t n = 3; n <= 12; ++n)
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n1 = 1 + rng.below(n - 1);
      std::vector<double> t, c;
      for (std::size_t i = 0; i < n1; ++i) t.push_back(static_cast<double>(rng.below(4)));
      for (std::size_t i = n1; i < n; ++i) c.push_back(static_cast<double>(rng.below(4)));
      EXPECT_NEAR(wilcoxon_one_sided(t, c), brute_force_p(t, c), 1e-12);
    }
}

TEST(Wilcoxon, NormalApproximationCloseForModerateSamples) {
  Rng rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> t, c;
    for (int i = 0; i < 30; ++i) t.push_back(rng.normal() + 0.4);
    for (int i = 0; i < 30; ++i) c.push_back(rng.normal());
    EXPECT_NEAR(wilcoxon_one_sided(t, c, WilcoxonMethod::NormalApprox), wilcoxon_one_sided(t, c), 0.01);
  }
}

TEST(Wilcoxon, PermutationFallbackForLargeSamples) {
  Rng rng(34);
  std::vector<double> t, c;
  for (int i = 0; i < 220; ++i) t.push_back(rng.normal() + 0.1);
  for (int i = 0; i < 220; ++i) c.push_back(rng.normal());
  const double perm = wilcoxon_one_sided(t, c, WilcoxonMethod::Exact, 5, 20000);
  EXPECT_NEAR(perm, wilcoxon_one_sided(t, c, WilcoxonMethod::NormalApprox), 0.015);
  EXPECT_EQ(perm, wilcoxon_one_sided(t, c, WilcoxonMethod::Exact, 5, 20000));
}

TEST(Wilcoxon, NullTypeOneAtSevenVersusSeven) {
  Rng rng(35);
  const int reps = 20000;
  int rejections = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> t, c;
    for (int i = 0; i < 7; ++i) t.push_back(rng.normal());
    for (int i = 0; i < 7; ++i) c.push_back(rng.normal());
    rejections += wilcoxon_one_sided(t, c) < 0.1;
  }
  // Exact level of the largest critical region below 0.1 is at most 0.1;
  // allow 3 binomial SEs of Monte Carlo noise.
  EXPECT_LE(rejections / double(reps), 0.1 + 3 * std::sqrt(0.09 / reps));
}

TEST(TestArm, RejectIffBelowAlpha) {
  const std::vector<double> hi{5, 6, 7, 8}, lo{1, 2, 3, 4};
  const auto r = test_arm(2, hi, lo, 0.1);
  EXPECT_TRUE(r.reject);
  EXPECT_EQ(r.arm, 2u);
  EXPECT_FALSE(test_arm(2, hi, lo, 1.0 / 70.0).reject);
  const std::vector<double> none;
  const auto s = test_arm(1, none, lo, 0.1);
  EXPECT_TRUE(s.skipped);
  EXPECT_FALSE(s.reject);
}

TEST(StratumDecision, DroppedArmUsesAvailableData) {
  const auto d = design_mapped_alpha();
  auto t = make_traj({{0.0, 0.1, -0.2, 0.3, -0.1, 0.05}, {0.4, 0.5}, {0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3}});
  const auto dec = stratum_decision(t, d);
  ASSERT_EQ(dec.tests.size(), 2u);
  EXPECT_EQ(dec.tests[0].n_treat, 2);
  EXPECT_FALSE(dec.tests[0].skipped);
  EXPECT_EQ(dec.recommended, 2u);
}

TEST(StratumDecision, EmptyArmSkipped) {
  const auto d = design_fixed_equal();
  auto t = make_traj({{0.0, 0.1}, {}, {0.6, 0.7}});
  const auto dec = stratum_decision(t, d);
  EXPECT_TRUE(dec.tests[0].skipped);
  EXPECT_FALSE(dec.tests[1].skipped);
}

TEST(StratumDecision, TieBreaks) {
  const auto d = design_fixed_equal();
  // Equal allocation: the arm with more successes (>= 0.3) wins.
  EXPECT_EQ(stratum_decision(make_traj({{0.0}, {0.9, 0.9}, {0.0, 0.0}}), d).recommended, 1u);
  EXPECT_EQ(stratum_decision(make_traj({{0.0}, {0.0, 0.0}, {0.9, 0.9}}), d).recommended, 2u);
  // Full tie: lower index.
  EXPECT_EQ(stratum_decision(make_traj({{0.0}, {0.0, 0.0}, {0.0, 0.0}}), d).recommended, 1u);
}

TEST(PooledAnalysis, DoublingConsistency) {
  const auto d = design_fixed_equal();
  const std::vector<std::vector<double>> data{{0.1, -0.3, 0.2, 0.05}, {0.4, 0.35, -0.1}, {0.9, 0.2, 0.6, 0.3}};
  const auto t = make_traj(data);
  const auto pooled = pooled_analysis(t, t, d);
  for (std::size_t k = 1; k < 3; ++k) {
    auto treat = data[k], control = data[0];
    treat.insert(treat.end(), data[k].begin(), data[k].end());
    control.insert(control.end(), data[0].begin(), data[0].end());
    EXPECT_DOUBLE_EQ(pooled[k - 1].p_value, wilcoxon_one_sided(treat, control));
    EXPECT_EQ(pooled[k - 1].n_treat, static_cast<int>(treat.size()));
  }
}

TEST(PooledAnalysis, MismatchedArms) {
  const auto d = design_fixed_equal();
  auto a = make_traj({{0.0}, {0.1}, {0.2}});
  auto b = a;
  b.arm_labels = {"C", "X", "T2"};
  EXPECT_THROW(pooled_analysis(a, b, d), InvalidInput);
}
