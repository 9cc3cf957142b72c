#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "radapt/core.hpp"
#include "radapt/rng.hpp"
#include "radapt/trajectory.hpp"

namespace radapt {

enum class WilcoxonMethod { Exact, NormalApprox };

struct RankSum {
  std::vector<long> scores;  // doubled midranks of the pooled sample
  long treat_score = 0;      // doubled rank sum of the treatment sample
  bool ties = false;
};

// Doubled midranks keep tied ranks integral.
inline RankSum rank_sum(std::span<const double> treatment, std::span<const double> control) {
  const std::size_t n1 = treatment.size();
  const std::size_t n = n1 + control.size();
  std::vector<std::pair<double, std::size_t>> v;
  v.reserve(n);
  for (std::size_t i = 0; i < n1; ++i) v.emplace_back(treatment[i], i);
  for (std::size_t i = 0; i < control.size(); ++i) v.emplace_back(control[i], n1 + i);
  std::sort(v.begin(), v.end());

  RankSum r;
  r.scores.assign(n, 0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[j + 1].first == v[i].first) ++j;
    if (j > i) r.ties = true;
    const long doubled = static_cast<long>(i + 1 + j + 1);  // 2 * midrank
    for (std::size_t m = i; m <= j; ++m) r.scores[v[m].second] = doubled;
    i = j + 1;
  }
  for (std::size_t i = 0; i < n1; ++i) r.treat_score += r.scores[i];
  return r;
}

namespace detail {

// counts[s] = number of size-k subsets of `scores` with score sum s.
inline std::vector<double> subset_sum_counts(std::span<const long> scores, std::size_t k) {
  const long total = std::accumulate(scores.begin(), scores.end(), 0L);
  const auto width = static_cast<std::size_t>(total + 1);
  std::vector<double> ways((k + 1) * width, 0.0);
  ways[0] = 1.0;
  std::size_t seen = 0;
  long reach = 0;
  for (long sc : scores) {
    ++seen;
    reach += sc;
    for (std::size_t j = std::min(seen, k); j >= 1; --j) {
      double* dst = &ways[j * width];
      const double* src = &ways[(j - 1) * width];
      for (long s = reach; s >= sc; --s) dst[s] += src[s - sc];
    }
  }
  return {ways.begin() + static_cast<std::ptrdiff_t>(k * width), ways.end()};
}

// Upper-tail probabilities P(S >= s) of the tie-free rank sum, cached by (k, n).
inline const std::vector<double>& tie_free_tail(std::size_t k, std::size_t n) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find({k, n});
  if (it != cache.end()) return it->second;
  std::vector<long> scores(n);
  std::iota(scores.begin(), scores.end(), 1L);
  auto counts = subset_sum_counts(scores, k);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> tail(counts.size() + 1, 0.0);
  for (std::size_t s = counts.size(); s-- > 0;) tail[s] = tail[s + 1] + counts[s];
  for (auto& t : tail) t /= total;
  return cache.emplace(std::make_pair(k, n), std::move(tail)).first->second;
}

inline double normal_upper(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

/// One-sided Wilcoxon rank-sum test, alternative: treatment stochastically
/// greater than control. Returns P(W >= w_obs) under the permutation null.
///
/// Exact computes the full permutation distribution of the (midrank) rank sum
/// by subset-sum counting, which equals exhaustive enumeration of all
/// C(n1+n2, n1) labelings. Pooled samples above 400 observations fall back to
/// `permutations` seeded relabelings.
inline double wilcoxon_one_sided(std::span<const double> treatment, std::span<const double> control,
                                 WilcoxonMethod method = WilcoxonMethod::Exact, std::uint64_t seed = 0,
                                 int permutations = 100000) {
  if (treatment.empty() || control.empty()) throw InvalidInput("wilcoxon needs two non-empty samples");
  for (double x : treatment)
    if (!std::isfinite(x)) throw InvalidInput("non-finite treatment value");
  for (double x : control)
    if (!std::isfinite(x)) throw InvalidInput("non-finite control value");

  const std::size_t n1 = treatment.size();
  const std::size_t n2 = control.size();
  const std::size_t n = n1 + n2;
  const auto rs = rank_sum(treatment, control);

  if (method == WilcoxonMethod::NormalApprox) {
    const double w = 0.5 * static_cast<double>(rs.treat_score);
    const double mean = 0.5 * static_cast<double>(n1) * static_cast<double>(n + 1);
    // Tie correction: sum over tie groups of (t^3 - t).
    std::vector<long> sorted(rs.scores);
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie_term += t * t * t - t;
      i = j;
    }
    const double nn = static_cast<double>(n);
    const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                       ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (!(var > 0.0)) return 1.0;
    const double z = (w - mean - 0.5) / std::sqrt(var);
    return std::clamp(detail::normal_upper(z), 0.0, 1.0);
  }

  if (n <= 400) {
    if (!rs.ties) {
      const auto& tail = detail::tie_free_tail(n1, n);
      const auto s = static_cast<std::size_t>(rs.treat_score / 2);
      return s < tail.size() ? std::clamp(tail[s], 0.0, 1.0) : 0.0;
    }
    const auto counts = detail::subset_sum_counts(rs.scores, n1);
    double total = 0.0, upper = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      total += counts[s];
      if (static_cast<long>(s) >= rs.treat_score) upper += counts[s];
    }
    return std::clamp(upper / total, 0.0, 1.0);
  }

  Rng rng(seed);
  std::vector<long> scores = rs.scores;
  long hits = 0;
  for (int p = 0; p < permutations; ++p) {
    shuffle(scores.begin(), scores.end(), rng);
    const long s = std::accumulate(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n1), 0L);
    if (s >= rs.treat_score) ++hits;
  }
  return (static_cast<double>(hits) + 1.0) / (static_cast<double>(permutations) + 1.0);
}

inline TestResult test_arm(std::size_t arm, std::span<const double> treatment, std::span<const double> control,
                           double alpha_level) {
  TestResult r;
  r.arm = arm;
  r.n_treat = static_cast<int>(treatment.size());
  r.n_control = static_cast<int>(control.size());
  if (treatment.empty() || control.empty()) {
    r.skipped = true;
    return r;
  }
  r.p_value = wilcoxon_one_sided(treatment, control);
  r.reject = r.p_value < alpha_level;
  return r;
}

struct StratumDecision {
  std::vector<TestResult> tests;  // one per active arm, in arm order
  std::size_t recommended = 1;
};

// Posterior for every arm from all usable (observed or imputed) outcomes.
inline std::vector<BetaPosterior> final_posteriors(const TrialTrajectory& traj, const TrialDesign& design) {
  std::vector<BetaPosterior> post(design.num_arms());
  for (std::size_t k = 0; k < post.size(); ++k) post[k] = {design.prior_alpha[k], design.prior_beta[k]};
  for (const auto& p : traj.patients) {
    if (!p.delta_y) continue;
    if (*p.delta_y >= design.delta) post[p.arm].alpha += 1.0;
    else post[p.arm].beta += 1.0;
  }
  return post;
}

/// Tests each active arm against control on the continuous outcome and picks
/// the recommended arm: largest final allocation, then larger posterior mean
/// of the adaptation endpoint, then lower index.
inline StratumDecision stratum_decision(const TrialTrajectory& traj, const TrialDesign& design) {
  StratumDecision d;
  const auto control = traj.outcomes(0);
  for (std::size_t k = 1; k < design.num_arms(); ++k) {
    const auto treat = traj.outcomes(k);
    d.tests.push_back(test_arm(k, treat, control, design.alpha_level));
  }
  const auto totals = traj.arm_totals();
  const auto post = final_posteriors(traj, design);
  std::size_t best = 1;
  for (std::size_t k = 2; k < design.num_arms(); ++k) {
    if (totals[k] > totals[best] || (totals[k] == totals[best] && post[k].mean() > post[best].mean())) best = k;
  }
  d.recommended = best;
  return d;
}

/// Pools the two strata arm by arm and tests each active arm against the
/// pooled control.
inline std::vector<TestResult> pooled_analysis(const TrialTrajectory& a, const TrialTrajectory& b,
                                               const TrialDesign& design) {
  if (a.arm_labels != b.arm_labels) throw InvalidInput("strata have different arm sets");
  if (a.num_arms() != design.num_arms()) throw InvalidInput("trajectory arms do not match design");
  auto pooled = [&](std::size_t k) {
    auto v = a.outcomes(k);
    const auto w = b.outcomes(k);
    v.insert(v.end(), w.begin(), w.end());
    return v;
  };
  const auto control = pooled(0);
  std::vector<TestResult> out;
  for (std::size_t k = 1; k < design.num_arms(); ++k) {
    const auto treat = pooled(k);
    out.push_back(test_arm(k, treat, control, design.alpha_level));
  }
  return out;
}

}  // namespace radapt
