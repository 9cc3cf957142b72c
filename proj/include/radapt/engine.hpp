#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "radapt/analysis.hpp"
#include "radapt/core.hpp"
#include "radapt/mapping.hpp"
#include "radapt/outcomes.hpp"
#include "radapt/posterior.hpp"
#include "radapt/randlist.hpp"
#include "radapt/rng.hpp"
#include "radapt/rules.hpp"
#include "radapt/trajectory.hpp"

namespace radapt {

// Interim adaptation rules under missing outcomes.
struct MissingPolicy {
  // Stage-1 missingness at interim 1 forces a balanced stage 2.
  bool no_adapt_on_stage1_missing = true;
  // Stage-2 missingness at interim 2 forbids dropping an active arm.
  bool no_drop_on_stage2_missing = true;
  // Fill stage-2 gaps with the arm's running mean before interim 2.
  bool impute_stage2_mean = false;

  static MissingPolicy off() { return {false, false, false}; }
};

inline std::string to_string(const MissingPolicy& p) {
  std::string s;
  s += p.no_adapt_on_stage1_missing ? "S1" : "-";
  s += p.no_drop_on_stage2_missing ? "S2" : "-";
  s += p.impute_stage2_mean ? "I" : "-";
  return s;
}

namespace stream {
// Child-stream tags; one per (purpose, stage) so that changing one decision
// never shifts the random numbers used by another.
inline constexpr std::uint64_t kAllocation = 100;
inline constexpr std::uint64_t kOutcome = 200;
inline constexpr std::uint64_t kMissing = 300;
inline constexpr std::uint64_t kCoin = 400;
inline constexpr std::uint64_t kProbMax = 500;
inline constexpr std::uint64_t kStratumA = 0xA;
inline constexpr std::uint64_t kStratumB = 0xB;
}  // namespace stream

// Draws n arm indices i.i.d. from pi.
inline std::vector<std::size_t> draw_iid_arms(const ProbVector& pi, int n, Rng& rng) {
  std::vector<std::size_t> out(static_cast<std::size_t>(std::max(n, 0)));
  for (auto& a : out) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t k = 0;
    for (; k + 1 < pi.size(); ++k) {
      acc += pi[k];
      if (u < acc) break;
    }
    // Never land on a zero-probability arm through rounding in the tail.
    while (k > 0 && pi[k] == 0.0) --k;
    a = k;
  }
  return out;
}

namespace detail {

inline bool any_missing(const std::vector<PatientRecord>& pts, int stage) {
  for (const auto& p : pts)
    if (p.stage == stage && p.missing()) return true;
  return false;
}

inline ProbVector rule_probabilities(const TrialDesign& d, int t, std::span<const BetaPosterior> post,
                                     const ArmCounts& counts, Rng mc_rng) {
  switch (d.rule.kind) {
    case RuleKind::FixedEqual:
      return fixed_equal(d.num_arms());
    case RuleKind::TSBRAR: {
      ProbMaxConfig m = ExactMethod{};
      if (d.rule.prob_max_method == ProbMaxMethod::MonteCarlo)
        m = MonteCarloMethod{d.rule.prob_max_draws, mc_rng.seed()};
      return ts_brar(post, d.gamma_at(t), m);
    }
    case RuleKind::TrippaBRAR:
      return trippa_brar(post, counts, d.gamma_at(t), d.eta_at(t), d.rule.control_exponent_form);
  }
  throw std::logic_error("unknown rule");
}

}  // namespace detail

/// One interim analysis, setting the allocation for stage t (t >= 2) from the
/// records of stages < t. Applies stage-2 imputation (when enabled and t == 3)
/// to `patients` in place, then the missing-data policy.
inline InterimRecord compute_interim(const TrialDesign& design, std::vector<PatientRecord>& patients, int t,
                                     const MissingPolicy& policy, Rng coin_rng, Rng mc_rng,
                                     std::vector<std::string>* warnings = nullptr) {
  if (t < 2 || t > design.num_stages()) throw InvalidInput("interim stage must be in 2..T");
  const std::size_t k = design.num_arms();

  if (policy.impute_stage2_mean && t == 3) impute_stage2_mean(patients, warnings);

  InterimRecord rec;
  rec.next_stage = t;
  rec.posteriors.resize(k);
  rec.counts.counts.assign(k, 0);
  for (std::size_t j = 0; j < k; ++j) rec.posteriors[j] = {design.prior_alpha[j], design.prior_beta[j]};
  for (const auto& p : patients) {
    if (p.stage >= t) continue;
    ++rec.counts.counts.at(p.arm);
    if (!p.delta_y) continue;
    if (dichotomise(p.delta_y, design.delta)) rec.posteriors[p.arm].alpha += 1.0;
    else rec.posteriors[p.arm].beta += 1.0;
  }
  rec.pi = detail::rule_probabilities(design, t, rec.posteriors, rec.counts, mc_rng);

  const bool force_balance = policy.no_adapt_on_stage1_missing && t == 2 && detail::any_missing(patients, 1);
  const bool forbid_drop = policy.no_drop_on_stage2_missing && t == 3 && detail::any_missing(patients, 2);

  if (design.mapping) {
    if (force_balance) {
      rec.categories = {AdaptationCategory::Balance, AdaptationCategory::Balance};
      rec.ratio = balanced_ratio(t);
      rec.overrides.push_back("stage-1 outcome missing: stage 2 kept at balanced allocation " + to_string(*rec.ratio));
    } else {
      auto dec = map_stage(*design.mapping, t, rec.pi, coin_rng, forbid_drop);
      if (forbid_drop) {
        auto plain = map_stage(*design.mapping, t, rec.pi, coin_rng, false);
        if (plain.categories != dec.categories)
          rec.overrides.push_back("stage-2 outcome missing: Drop/Keep demoted to Disfavour/Favour");
      }
      rec.categories = std::move(dec.categories);
      rec.ratio = std::move(dec.ratio);
    }
    return rec;
  }

  if (force_balance) {
    rec.pi = fixed_equal(k);
    rec.overrides.push_back("stage-1 outcome missing: stage 2 kept at equal randomisation");
  }
  if (design.stage(t).arm_dropping_allowed && !force_balance) {
    std::vector<std::size_t> below;
    for (std::size_t j = 1; j < k; ++j)
      if (rec.pi[j] < design.tau) below.push_back(j);
    // At least one active arm always stays open.
    if (!below.empty() && below.size() < k - 1) {
      if (forbid_drop) {
        rec.overrides.push_back("stage-2 outcome missing: arm dropping suppressed");
      } else {
        auto w = rec.pi.probs;
        for (auto j : below) w[j] = 0.0;
        rec.pi = normalise(std::move(w));
      }
    }
  }
  return rec;
}

/// Simulates one complete trial.
inline TrialTrajectory run_trial(const TrialDesign& design, const OutcomeModel& model, const MissingCase& missing,
                                 const MissingPolicy& policy, const Rng& rng) {
  const std::size_t k = design.num_arms();
  if (model.effects.size() != k) throw InvalidInput("outcome model and design have different arm counts");
  if (missing.per_stage[2] != 0) throw InvalidInput("stage-3 outcomes are never missing");

  TrialTrajectory traj;
  for (const auto& a : design.arms) traj.arm_labels.push_back(a.label);
  traj.patients.reserve(static_cast<std::size_t>(design.total_size()));
  int next_id = 1;

  for (int t = 1; t <= design.num_stages(); ++t) {
    const auto ut = static_cast<std::uint64_t>(t);
    const StagePlan& plan = design.stage(t);
    Rng alloc_rng = rng.split(stream::kAllocation + ut);

    StageRecord stage;
    stage.stage = t;
    ProbVector pi = fixed_equal(k);
    if (t >= 2) {
      auto interim = compute_interim(design, traj.patients, t, policy, rng.split(stream::kCoin + ut),
                                     rng.split(stream::kProbMax + ut), &traj.warnings);
      pi = interim.pi;
      if (interim.ratio) stage.target = interim.ratio;
      traj.interims.push_back(std::move(interim));
    } else if (design.mapping) {
      stage.target = balanced_ratio(1);
    }

    if (design.mapping && design.mapping->variant == MappingVariant::PermutedBlock) {
      stage.target = balanced_ratio(t);
    }
    if (!stage.target && plan.balanced_block) {
      stage.target = RatioVector{std::vector<int>(k, plan.size / static_cast<int>(k))};
    }

    if (stage.target) {
      stage.block = generate_block(*stage.target, alloc_rng, t, design.arms);
    } else {
      stage.block.stage_index = t;
      stage.block.seed_tag = seed_tag(alloc_rng.seed());
      std::vector<std::size_t> arms;
      if (plan.control_fix) {
        auto w = pi.probs;
        w[0] = 0.0;
        const auto active = normalise(std::move(w));
        arms = draw_iid_arms(active, plan.size - *plan.control_fix, alloc_rng);
        arms.insert(arms.end(), static_cast<std::size_t>(*plan.control_fix), 0);
        shuffle(arms.begin(), arms.end(), alloc_rng);
      } else {
        arms = draw_iid_arms(pi, plan.size, alloc_rng);
      }
      for (auto a : arms) stage.block.assignments.push_back(design.arms[a]);
    }
    stage.ratio.counts = stage.block.arm_counts(k);

    Rng outcome_rng = rng.split(stream::kOutcome + ut);
    for (const auto& a : stage.block.assignments) {
      traj.patients.push_back({next_id++, t, a.index, draw_outcome(model, a.index, outcome_rng), false});
    }
    if (t <= 3) {
      Rng miss_rng = rng.split(stream::kMissing + ut);
      apply_missingness_stage(traj.patients, t, missing.per_stage[static_cast<std::size_t>(t - 1)], miss_rng);
    }
    traj.stages.push_back(std::move(stage));
  }

  auto decision = stratum_decision(traj, design);
  traj.tests = std::move(decision.tests);
  traj.recommended = decision.recommended;
  return traj;
}

// Scenario: true effects E[dY_k] - E[dY_C] in two strata.
struct Scenario {
  std::string id;
  std::vector<double> stratum_a;
  std::vector<double> stratum_b;
};

inline Scenario scenario(const std::string& id) {
  if (id == "S1") return {id, {0, 0, 0}, {0, 0, 0}};
  if (id == "S2") return {id, {0, 0, 0.3}, {0, 0, 0.3}};
  if (id == "S3") return {id, {0, 0.2, 0.3}, {0, 0.2, 0.3}};
  if (id == "S4") return {id, {0, 0.3, 0.4}, {0, 0.3, 0.4}};
  if (id == "S5") return {id, {0, 0, 0.2}, {0, 0, 0.3}};
  if (id == "S6") return {id, {0, 0, 0.3}, {0, 0, 0.4}};
  if (id == "S7") return {id, {0, 0, 0.0}, {0, 0, 0.3}};
  if (id == "S8") return {id, {0, 0.0, 0.3}, {0, 0.3, 0.3}};
  if (id == "S9") return {id, {0, 0.3, 0.0}, {0, 0.0, 0.3}};
  throw InvalidInput("unknown scenario '" + id + "' (expected S1..S9)");
}

// Index of the active arm with the largest positive effect; 0 if none.
inline std::size_t best_arm(std::span<const double> effects) {
  std::size_t best = 0;
  double top = 0.0;
  for (std::size_t k = 1; k < effects.size(); ++k) {
    if (effects[k] > top) {
      top = effects[k];
      best = k;
    }
  }
  return best;
}

// Per-replicate summary kept for aggregation.
struct ReplicateSummary {
  std::vector<int> arm_totals;
  std::vector<char> reject;  // per arm, index 0 unused
  std::size_t recommended = 1;
  std::optional<RatioVector> stage2;
  std::optional<RatioVector> stage3;
};

inline ReplicateSummary summarise(const TrialTrajectory& traj) {
  ReplicateSummary s;
  s.arm_totals = traj.arm_totals();
  s.reject.assign(traj.num_arms(), 0);
  for (const auto& t : traj.tests) s.reject[t.arm] = t.reject ? 1 : 0;
  s.recommended = traj.recommended;
  if (const auto* st = traj.stage(2); st && st->target) s.stage2 = st->target;
  if (const auto* st = traj.stage(3); st && st->target) s.stage3 = st->target;
  return s;
}

struct OCReport {
  std::string design;
  std::string scenario;
  int case_id = 0;
  std::string policy;
  int n_reps = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::string> arm_labels;

  double power = std::numeric_limits<double>::quiet_NaN();
  double type1 = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> reject_rate;  // per arm (index 0 NaN)
  double reject_any = 0.0;
  double reject_recommended = 0.0;
  std::vector<double> recommend_rate;
  std::vector<double> alloc_mean;
  std::vector<double> alloc_sd;

  // Adaptability (fractions in [0,1]); NaN when the design has no fixed
  // stage ratios or the quantity needs a better arm and there is none.
  double stage2_deviate = std::numeric_limits<double>::quiet_NaN();
  double stage2_favour_best = std::numeric_limits<double>::quiet_NaN();
  double stage3_favour_disfavour = std::numeric_limits<double>::quiet_NaN();
  double stage3_favour_best = std::numeric_limits<double>::quiet_NaN();
  double stage3_drop_keep = std::numeric_limits<double>::quiet_NaN();
  double stage3_keep_best = std::numeric_limits<double>::quiet_NaN();
};

inline bool is_drop_keep(const RatioVector& r) { return r.size() == 3 && (r[1] == 0 || r[2] == 0); }

inline bool is_stage3_favour_disfavour(const RatioVector& r) {
  return r.size() == 3 && r[1] != 0 && r[2] != 0 && r[1] != r[2];
}

/// Reduces per-replicate summaries in index order. Allocation moments use
/// integer sums, so identical counts give an SD of exactly zero.
inline OCReport aggregate(std::span<const ReplicateSummary> reps, std::span<const double> effects,
                          const TrialDesign& design) {
  OCReport r;
  const std::size_t k = design.num_arms();
  const auto n_reps = static_cast<double>(reps.size());
  r.n_reps = static_cast<int>(reps.size());
  for (const auto& a : design.arms) r.arm_labels.push_back(a.label);
  r.design = design.name;

  std::vector<std::int64_t> sum(k, 0), sumsq(k, 0), rejects(k, 0), recs(k, 0);
  std::int64_t any = 0, rec_reject = 0;
  std::int64_t s2_total = 0, s2_dev = 0, s2_best = 0, s3_total = 0, s3_fd = 0, s3_fd_best = 0, s3_dk = 0,
               s3_dk_best = 0;
  const std::size_t best = best_arm(effects);
  std::int64_t n_total = design.total_size();

  for (const auto& s : reps) {
    bool any_rej = false;
    for (std::size_t j = 0; j < k; ++j) {
      sum[j] += s.arm_totals[j];
      sumsq[j] += static_cast<std::int64_t>(s.arm_totals[j]) * s.arm_totals[j];
      if (j > 0 && s.reject[j]) {
        ++rejects[j];
        any_rej = true;
      }
    }
    ++recs[s.recommended];
    if (any_rej) ++any;
    if (s.reject[s.recommended]) ++rec_reject;
    if (s.stage2) {
      ++s2_total;
      const auto& q = *s.stage2;
      if (q != balanced_ratio(2)) {
        ++s2_dev;
        if (best > 0 && q[best] > q[3 - best]) ++s2_best;
      }
    }
    if (s.stage3) {
      ++s3_total;
      const auto& q = *s.stage3;
      if (is_stage3_favour_disfavour(q)) {
        ++s3_fd;
        if (best > 0 && q[best] > q[3 - best]) ++s3_fd_best;
      }
      if (is_drop_keep(q)) {
        ++s3_dk;
        if (best > 0 && q[best] > q[3 - best]) ++s3_dk_best;
      }
    }
  }

  r.reject_rate.assign(k, std::numeric_limits<double>::quiet_NaN());
  r.recommend_rate.assign(k, 0.0);
  r.alloc_mean.assign(k, 0.0);
  r.alloc_sd.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    if (j > 0) r.reject_rate[j] = static_cast<double>(rejects[j]) / n_reps;
    r.recommend_rate[j] = static_cast<double>(recs[j]) / n_reps;
    const double denom = n_reps * static_cast<double>(n_total);
    r.alloc_mean[j] = static_cast<double>(sum[j]) / denom;
    // Var(n_k/n) = (R*Q - S^2) / (R^2 n^2), numerator exact in integers.
    const auto R = static_cast<std::int64_t>(reps.size());
    const __int128 num = static_cast<__int128>(R) * sumsq[j] - static_cast<__int128>(sum[j]) * sum[j];
    r.alloc_sd[j] = num <= 0 ? 0.0 : std::sqrt(static_cast<double>(num)) / denom;
  }
  r.reject_any = static_cast<double>(any) / n_reps;
  r.reject_recommended = static_cast<double>(rec_reject) / n_reps;

  if (best > 0) r.power = r.reject_rate[best];
  bool global_null = true;
  double null_sum = 0.0;
  int null_arms = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (effects[j] > 0.0) global_null = false;
    else {
      null_sum += r.reject_rate[j];
      ++null_arms;
    }
  }
  if (global_null) r.type1 = r.reject_recommended;
  else if (null_arms > 0) r.type1 = null_sum / null_arms;

  if (s2_total > 0) {
    r.stage2_deviate = static_cast<double>(s2_dev) / static_cast<double>(s2_total);
    if (best > 0) r.stage2_favour_best = static_cast<double>(s2_best) / static_cast<double>(s2_total);
  }
  if (s3_total > 0) {
    r.stage3_favour_disfavour = static_cast<double>(s3_fd) / static_cast<double>(s3_total);
    r.stage3_drop_keep = static_cast<double>(s3_dk) / static_cast<double>(s3_total);
    if (best > 0) {
      r.stage3_favour_best = static_cast<double>(s3_fd_best) / static_cast<double>(s3_total);
      r.stage3_keep_best = static_cast<double>(s3_dk_best) / static_cast<double>(s3_total);
    }
  }
  return r;
}

inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, static_cast<std::uint64_t>(index));
}

// Runs fn(i) for i in [0, n) across `workers` threads, contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto w = static_cast<std::size_t>(std::clamp(workers, 1, 256));
  if (w == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex mu;
  const std::size_t chunk = (n + w - 1) / w;
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t e = std::min(n, b + chunk);
    pool.emplace_back([&, b, e] {
      try {
        for (std::size_t i = b; i < e; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct ReplicateOptions {
  int n_reps = 10000;
  std::uint64_t master_seed = 1;
  int workers = 1;
  std::string scenario = "custom";
};

inline std::vector<ReplicateSummary> replicate_summaries(const TrialDesign& design, const OutcomeModel& model,
                                                         const MissingCase& missing, const MissingPolicy& policy,
                                                         const ReplicateOptions& opt) {
  if (opt.n_reps < 1) throw InvalidInput("n_reps must be >= 1");
  model.validate();
  std::vector<ReplicateSummary> out(static_cast<std::size_t>(opt.n_reps));
  parallel_for(out.size(), opt.workers, [&](std::size_t i) {
    const Rng rng(replicate_seed(opt.master_seed, i));
    out[i] = summarise(run_trial(design, model, missing, policy, rng));
  });
  return out;
}

/// Monte Carlo operating characteristics. Replicate i uses a seed derived
/// from (master_seed, i) only, so the report does not depend on `workers`.
inline OCReport replicate(const TrialDesign& design, const OutcomeModel& model, const MissingCase& missing,
                          const MissingPolicy& policy, const ReplicateOptions& opt) {
  const auto reps = replicate_summaries(design, model, missing, policy, opt);
  auto r = aggregate(reps, model.effects, design);
  r.scenario = opt.scenario;
  r.case_id = missing.case_id;
  r.policy = to_string(policy);
  r.master_seed = opt.master_seed;
  return r;
}

// Stand-alone (per-stratum) vs pooled rejection rates per active arm.
struct PooledReport {
  std::string design;
  std::string scenario;
  int n_reps = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::string> arm_labels;
  std::vector<double> standalone_a;  // per arm, index 0 unused
  std::vector<double> standalone_b;
  std::vector<double> pooled;
  std::vector<double> alloc_mean_a;
  std::vector<double> alloc_mean_b;

  double standalone(std::size_t arm) const { return 0.5 * (standalone_a[arm] + standalone_b[arm]); }
};

inline PooledReport replicate_pooled(const TrialDesign& design, const OutcomeModel& model_a,
                                     const OutcomeModel& model_b, const MissingCase& missing,
                                     const MissingPolicy& policy, const ReplicateOptions& opt) {
  if (opt.n_reps < 1) throw InvalidInput("n_reps must be >= 1");
  model_a.validate();
  model_b.validate();
  const std::size_t k = design.num_arms();
  struct Row {
    std::vector<char> a, b, pooled;
    std::vector<int> na, nb;
  };
  std::vector<Row> rows(static_cast<std::size_t>(opt.n_reps));
  parallel_for(rows.size(), opt.workers, [&](std::size_t i) {
    const Rng rng(replicate_seed(opt.master_seed, i));
    const auto ta = run_trial(design, model_a, missing, policy, rng.split(stream::kStratumA));
    const auto tb = run_trial(design, model_b, missing, policy, rng.split(stream::kStratumB));
    Row r;
    r.a.assign(k, 0);
    r.b.assign(k, 0);
    r.pooled.assign(k, 0);
    for (const auto& t : ta.tests) r.a[t.arm] = t.reject;
    for (const auto& t : tb.tests) r.b[t.arm] = t.reject;
    for (const auto& t : pooled_analysis(ta, tb, design)) r.pooled[t.arm] = t.reject;
    r.na = ta.arm_totals();
    r.nb = tb.arm_totals();
    rows[i] = std::move(r);
  });

  PooledReport rep;
  rep.design = design.name;
  rep.scenario = opt.scenario;
  rep.n_reps = opt.n_reps;
  rep.master_seed = opt.master_seed;
  for (const auto& a : design.arms) rep.arm_labels.push_back(a.label);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.standalone_a.assign(k, nan);
  rep.standalone_b.assign(k, nan);
  rep.pooled.assign(k, nan);
  rep.alloc_mean_a.assign(k, 0.0);
  rep.alloc_mean_b.assign(k, 0.0);
  const auto n = static_cast<double>(opt.n_reps);
  for (std::size_t j = 0; j < k; ++j) {
    std::int64_t a = 0, b = 0, p = 0, sa = 0, sb = 0;
    for (const auto& r : rows) {
      a += r.a[j];
      b += r.b[j];
      p += r.pooled[j];
      sa += r.na[j];
      sb += r.nb[j];
    }
    if (j > 0) {
      rep.standalone_a[j] = static_cast<double>(a) / n;
      rep.standalone_b[j] = static_cast<double>(b) / n;
      rep.pooled[j] = static_cast<double>(p) / n;
    }
    rep.alloc_mean_a[j] = static_cast<double>(sa) / (n * design.total_size());
    rep.alloc_mean_b[j] = static_cast<double>(sb) / (n * design.total_size());
  }
  return rep;
}

/// Allocation counts of n i.i.d. draws from pi, repeated `reps` times.
inline std::vector<std::vector<int>> simulate_iid_allocation(const ProbVector& pi, int n, int reps,
                                                             std::uint64_t seed) {
  if (n < 1 || reps < 1) throw InvalidInput("n and reps must be positive");
  if (!pi.valid(1e-9)) throw InvalidInput("pi is not a probability vector");
  std::vector<std::vector<int>> out(static_cast<std::size_t>(reps), std::vector<int>(pi.size(), 0));
  for (int r = 0; r < reps; ++r) {
    Rng rng(replicate_seed(seed, static_cast<std::size_t>(r)));
    for (auto a : draw_iid_arms(pi, n, rng)) ++out[static_cast<std::size_t>(r)][a];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Threshold calibration

enum class CalibrationCriterion { EuclideanCorner, Pareto };

struct TradeoffRow {
  double threshold = 0.0;
  double metric_h0 = 0.0;  // adaptation rate under the null (ideal 0)
  double metric_h1 = 0.0;  // adaptation towards the better arm under H1 (ideal 1)
  double distance = 0.0;   // to the (0, 1) corner
  bool pareto = false;
};

struct CalibrationResult {
  int stage = 2;
  double selected = 0.0;
  std::vector<TradeoffRow> rows;
};

// Design copy with the stage-2 (p21) or stage-3 (p33) threshold set to x.
inline TrialDesign with_threshold(TrialDesign d, int stage, double x) {
  if (!d.mapping || d.mapping->variant == MappingVariant::PermutedBlock)
    throw InvalidInput("threshold calibration needs a Mapped-alpha or Mapped-beta design");
  auto& th = d.mapping->thresholds;
  if (stage == 2) {
    th.stage2.back() = x;
    for (auto& v : th.stage2) v = std::min(v, x);
  } else if (stage == 3) {
    th.stage3.back() = x;
    for (std::size_t i = 1; i + 1 < th.stage3.size(); ++i) th.stage3[i] = std::min(th.stage3[i], x);
    th.stage3.front() = std::min(th.stage3.front(), x);
  } else {
    throw InvalidInput("calibration stage must be 2 or 3");
  }
  return d;
}

inline std::vector<double> threshold_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo <= hi) || lo < 0.0 || hi > 1.0) throw InvalidInput("grid must lie in [0,1] with step > 0");
  std::vector<double> g;
  const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) g.push_back(std::round((lo + i * step) * 1e10) / 1e10);
  return g;
}

/// Replicates the design under H0 and H1 for every grid threshold and records
/// the targeted adaptability metric: stage-2 deviation from 2:2:2 for p21,
/// stage-3 Drop/Keep for p33. Selects the threshold closest to the ideal
/// corner (0 under H0, 1 under H1); Pareto-optimal rows are flagged.
inline CalibrationResult calibrate_threshold(const TrialDesign& design, int stage, std::span<const double> grid,
                                             const OutcomeModel& h0, const OutcomeModel& h1,
                                             const ReplicateOptions& opt,
                                             CalibrationCriterion criterion = CalibrationCriterion::EuclideanCorner) {
  if (grid.empty()) throw InvalidInput("empty threshold grid");
  if (stage != 2 && stage != 3) throw InvalidInput("calibration stage must be 2 or 3");
  for (double x : grid)
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput("grid values must lie in [0,1]");

  CalibrationResult res;
  res.stage = stage;
  for (double x : grid) {
    const auto d = with_threshold(design, stage, x);
    const auto r0 = replicate(d, h0, missing_case(0), MissingPolicy{}, opt);
    const auto r1 = replicate(d, h1, missing_case(0), MissingPolicy{}, opt);
    TradeoffRow row;
    row.threshold = x;
    row.metric_h0 = stage == 2 ? r0.stage2_deviate : r0.stage3_drop_keep;
    row.metric_h1 = stage == 2 ? r1.stage2_favour_best : r1.stage3_keep_best;
    if (std::isnan(row.metric_h1)) row.metric_h1 = stage == 2 ? r1.stage2_deviate : r1.stage3_drop_keep;
    row.distance = std::hypot(row.metric_h0, 1.0 - row.metric_h1);
    res.rows.push_back(row);
  }
  for (auto& a : res.rows) {
    a.pareto = std::none_of(res.rows.begin(), res.rows.end(), [&](const TradeoffRow& b) {
      return b.metric_h0 <= a.metric_h0 && b.metric_h1 >= a.metric_h1 &&
             (b.metric_h0 < a.metric_h0 || b.metric_h1 > a.metric_h1);
    });
  }
  auto best = std::min_element(res.rows.begin(), res.rows.end(),
                               [](const TradeoffRow& a, const TradeoffRow& b) { return a.distance < b.distance; });
  if (criterion == CalibrationCriterion::Pareto) {
    // Closest-to-corner among the Pareto set (same point; kept explicit).
    best = std::min_element(res.rows.begin(), res.rows.end(), [](const TradeoffRow& a, const TradeoffRow& b) {
      if (a.pareto != b.pareto) return a.pareto;
      return a.distance < b.distance;
    });
  }
  res.selected = best->threshold;
  return res;
}

/// Constant eta (all adaptive stages) whose mean control allocation is
/// closest to `target` under `model`.
inline double calibrate_eta(TrialDesign design, const OutcomeModel& model, std::span<const double> grid,
                            double target, const ReplicateOptions& opt) {
  if (grid.empty()) throw InvalidInput("empty eta grid");
  double best = grid.front();
  double best_gap = std::numeric_limits<double>::infinity();
  for (double eta : grid) {
    design.rule.eta_schedule.assign(static_cast<std::size_t>(std::max(design.num_stages() - 1, 1)), eta);
    const auto r = replicate(design, model, missing_case(0), MissingPolicy{}, opt);
    const double gap = std::abs(r.alloc_mean[0] - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = eta;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Conduct-time interim

struct InterimRecommendation {
  InterimRecord interim;
  std::vector<std::string> log;
};

/// Reads accrued trial data: CSV `patient_id,stage,arm_label,delta_y` with NA
/// for a missing outcome.
inline std::vector<PatientRecord> load_accrued(const std::string& path, const TrialDesign& design) {
  const auto t = read_csv(path);
  t.require_columns({"patient_id", "stage", "arm_label", "delta_y"});
  std::vector<PatientRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = r + 2;
    PatientRecord p;
    p.patient_id = static_cast<int>(t.get_long(r, "patient_id", line));
    p.stage = static_cast<int>(t.get_long(r, "stage", line));
    if (p.stage < 1 || p.stage > design.num_stages()) throw ParseError(path, line, "stage out of range");
    const auto& label = t.get(r, "arm_label");
    bool found = false;
    for (const auto& a : design.arms)
      if (a.label == label) {
        p.arm = a.index;
        found = true;
      }
    if (!found) throw ParseError(path, line, "unknown arm label '" + label + "'");
    const auto& y = t.get(r, "delta_y");
    if (y != "NA") {
      const double v = CsvTable::parse_double(y, path, line);
      if (!std::isfinite(v)) throw ParseError(path, line, "non-finite delta_y");
      p.delta_y = v;
    }
    out.push_back(p);
  }
  if (out.empty()) throw ParseError(path, 1, "no data rows");
  return out;
}

/// Same interim code path as run_trial, applied to real accrued data.
inline InterimRecommendation interim_recommendation(const TrialDesign& design, std::vector<PatientRecord> data,
                                                    int stage, const MissingPolicy& policy, std::uint64_t seed) {
  if (stage < 2 || stage > design.num_stages()) throw InvalidInput("interim stage must be in 2..T");
  if (data.empty()) throw InvalidInput("no accrued data");
  for (const auto& p : data)
    if (p.stage >= stage) throw InvalidInput("data contains stage " + std::to_string(p.stage) + " rows");
  std::sort(data.begin(), data.end(), [](const auto& a, const auto& b) { return a.patient_id < b.patient_id; });

  const Rng rng(seed);
  InterimRecommendation out;
  out.interim = compute_interim(design, data, stage, policy, rng.split(stream::kCoin + stage),
                                rng.split(stream::kProbMax + stage), &out.log);
  return out;
}

}  // namespace radapt
