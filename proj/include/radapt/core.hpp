#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "radapt/error.hpp"

namespace radapt {

enum class ArmRole { Control, Active };

struct ArmId {
  std::size_t index = 0;
  ArmRole role = ArmRole::Active;
  std::string label;

  bool operator==(const ArmId&) const = default;
};

// C, T1, ..., T{K-1}; arm 0 is the control.
inline std::vector<ArmId> default_arms(std::size_t k = 3) {
  std::vector<ArmId> arms;
  arms.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    arms.push_back({i, i == 0 ? ArmRole::Control : ArmRole::Active,
                    i == 0 ? std::string("C") : "T" + std::to_string(i)});
  }
  return arms;
}

struct StagePlan {
  int stage_index = 1;
  int size = 0;
  // Exact number of controls this stage (mapped designs).
  std::optional<int> control_fix;
  bool arm_dropping_allowed = false;
  // Unmapped designs only: allocate this stage as a restricted balanced block
  // (size/K per arm) instead of i.i.d. draws from pi.
  bool balanced_block = false;
};

enum class RuleKind { FixedEqual, TSBRAR, TrippaBRAR };
enum class ControlExponentForm { ProductForm, PowerForm };
enum class ProbMaxMethod { Quadrature, MonteCarlo };

struct RuleConfig {
  RuleKind kind = RuleKind::FixedEqual;
  // One entry per adaptive stage (stages 2..T). TS-BRAR reads a single gamma
  // but accepts a schedule for symmetry.
  std::vector<double> gamma_schedule;
  std::vector<double> eta_schedule;
  ControlExponentForm control_exponent_form = ControlExponentForm::ProductForm;
  ProbMaxMethod prob_max_method = ProbMaxMethod::Quadrature;
  int prob_max_draws = 100000;
};

enum class MappingVariant { MappedAlpha, MappedBeta, PermutedBlock };

// Mapped-alpha: stage2 = {p21}, stage3 = {p31, p32, p33}.
// Mapped-beta:  stage2 = {p21', p21''}, stage3 = {p31, p32', p32'', p33}.
struct ThresholdSet {
  std::vector<double> stage2;
  std::vector<double> stage3;
};

struct MappingConfig {
  MappingVariant variant = MappingVariant::MappedAlpha;
  ThresholdSet thresholds;
  int control_fix = 2;
};

inline constexpr double kDefaultP21 = 0.45;
inline constexpr double kDefaultP32 = 0.45;
inline constexpr double kDefaultP33 = 0.55;
inline constexpr double kDefaultTau = 0.1;
inline constexpr double kDefaultDelta = 0.3;
inline constexpr double kDefaultAlphaLevel = 0.1;

inline ThresholdSet default_thresholds(MappingVariant variant, double tau = kDefaultTau) {
  const double lower = 1.0 / 3.0;
  switch (variant) {
    case MappingVariant::MappedAlpha:
      return {{kDefaultP21}, {tau, kDefaultP32, kDefaultP33}};
    case MappingVariant::MappedBeta:
      return {{lower, kDefaultP21}, {tau, lower, kDefaultP32, kDefaultP33}};
    case MappingVariant::PermutedBlock:
      return {};
  }
  return {};
}

struct TrialDesign {
  std::string name = "design";
  std::vector<ArmId> arms = default_arms();
  std::vector<StagePlan> stages;
  RuleConfig rule;
  std::optional<MappingConfig> mapping;
  std::vector<double> prior_alpha{1.0, 1.0, 1.0};
  std::vector<double> prior_beta{1.0, 1.0, 1.0};
  double delta = kDefaultDelta;
  double tau = kDefaultTau;
  double alpha_level = kDefaultAlphaLevel;
  std::string stratum_label = "A";
  // Declared stratum size; must equal the sum of stage sizes.
  int planned_n = 20;

  std::size_t num_arms() const noexcept { return arms.size(); }
  int num_stages() const noexcept { return static_cast<int>(stages.size()); }

  int total_size() const noexcept {
    int n = 0;
    for (const auto& s : stages) n += s.size;
    return n;
  }

  const StagePlan& stage(int t) const {
    if (t < 1 || t > num_stages()) throw InvalidInput("stage index out of range");
    return stages[static_cast<std::size_t>(t - 1)];
  }

  // Patients accrued before stage t starts.
  int accrued_before(int t) const {
    int n = 0;
    for (int s = 1; s < t; ++s) n += stage(s).size;
    return n;
  }

  bool is_mapped() const noexcept { return mapping.has_value(); }

  // Rule hyper-parameter for adaptive stage t (t >= 2).
  double gamma_at(int t) const {
    return schedule_at(rule.gamma_schedule, t, "gamma_schedule");
  }
  double eta_at(int t) const { return schedule_at(rule.eta_schedule, t, "eta_schedule"); }

 private:
  static double schedule_at(const std::vector<double>& s, int t, const char* what) {
    if (s.empty()) throw InvalidInput(std::string(what) + " is empty");
    const auto i = static_cast<std::size_t>(std::max(t - 2, 0));
    if (i >= s.size()) return s.back();
    return s[i];
  }
};

struct Violation {
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

namespace detail {

inline bool sorted_in_unit(const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0 || v[i] > 1.0) return false;
    if (i > 0 && v[i] < v[i - 1]) return false;
  }
  return true;
}

}  // namespace detail

/// Checks every structural invariant of a design. Returns an empty list for a
/// valid design; never throws.
inline std::vector<Violation> validate_design(const TrialDesign& d) {
  std::vector<Violation> out;
  auto add = [&](std::string field, std::string msg) {
    out.push_back({std::move(field), std::move(msg)});
  };

  const std::size_t k = d.arms.size();
  if (k < 2) add("arms", "at least two arms are required");
  {
    std::size_t controls = 0;
    std::set<std::string> labels;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& a = d.arms[i];
      if (a.role == ArmRole::Control) ++controls;
      if (a.index != i) add("arms", "arm index " + std::to_string(a.index) + " out of order");
      if (a.label.empty()) add("arms", "empty arm label");
      if (!labels.insert(a.label).second) add("arms", "duplicate arm label '" + a.label + "'");
    }
    if (controls != 1) add("arms", "exactly one control arm is required");
    else if (k > 0 && d.arms[0].role != ArmRole::Control) add("arms", "control must be arm 0");
  }

  if (d.stages.empty()) add("stages", "no stages");
  for (std::size_t i = 0; i < d.stages.size(); ++i) {
    const auto& s = d.stages[i];
    const std::string f = "stages[" + std::to_string(i) + "]";
    if (s.stage_index != static_cast<int>(i) + 1) add(f, "stage_index must be " + std::to_string(i + 1));
    if (s.size <= 0) add(f, "size must be positive");
    if (!s.control_fix && s.size < static_cast<int>(k)) add(f, "size smaller than number of arms");
    if (s.control_fix && (*s.control_fix < 0 || *s.control_fix > s.size))
      add(f, "control_fix outside [0, size]");
    if (i == 0 && s.arm_dropping_allowed) add(f, "stage 1 cannot allow arm dropping");
    if (s.balanced_block && k > 0 && s.size % static_cast<int>(k) != 0)
      add(f, "balanced_block requires size divisible by the number of arms");
  }
  if (d.total_size() != d.planned_n) {
    add("planned_n", "stage sizes sum to " + std::to_string(d.total_size()) +
                         " but planned_n is " + std::to_string(d.planned_n));
  }

  if (!std::isfinite(d.tau) || d.tau < 0.0 || d.tau > 0.2) add("tau", "tau outside [0,0.2]");
  if (!std::isfinite(d.delta)) add("delta", "delta must be finite");
  if (!(d.alpha_level > 0.0 && d.alpha_level < 1.0)) add("alpha_level", "alpha_level outside (0,1)");

  if (d.prior_alpha.size() != k || d.prior_beta.size() != k) {
    add("prior", "prior_alpha/prior_beta must have one entry per arm");
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      if (!(d.prior_alpha[i] > 0.0) || !(d.prior_beta[i] > 0.0) ||
          !std::isfinite(d.prior_alpha[i]) || !std::isfinite(d.prior_beta[i]))
        add("prior", "prior parameters must be positive and finite");
    }
  }

  const std::size_t adaptive = d.stages.size() > 0 ? d.stages.size() - 1 : 0;
  auto check_schedule = [&](const std::vector<double>& s, const char* name) {
    if (s.size() < adaptive) add(std::string("rule.") + name, "schedule must cover every adaptive stage");
    for (double v : s)
      if (!std::isfinite(v) || v < 0.0) add(std::string("rule.") + name, "entries must be finite and >= 0");
  };
  switch (d.rule.kind) {
    case RuleKind::FixedEqual:
      break;
    case RuleKind::TSBRAR:
      check_schedule(d.rule.gamma_schedule, "gamma_schedule");
      break;
    case RuleKind::TrippaBRAR:
      check_schedule(d.rule.gamma_schedule, "gamma_schedule");
      check_schedule(d.rule.eta_schedule, "eta_schedule");
      if (k != 3) add("rule", "Trippa-BRAR requires exactly three arms");
      break;
  }
  if (d.rule.prob_max_method == ProbMaxMethod::MonteCarlo && d.rule.prob_max_draws < 1)
    add("rule.prob_max_draws", "must be >= 1");

  if (d.mapping) {
    const auto& m = *d.mapping;
    if (k != 3) add("mapping", "mapping requires exactly three arms (one control, two actives)");
    if (d.stages.size() != 3 || d.stages[0].size != 6 || d.stages[1].size != 6 || d.stages[2].size != 8)
      add("mapping", "mapping requires stage sizes 6/6/8");
    if (m.control_fix != 2) add("mapping.control_fix", "mapped stages fix exactly 2 controls");
    const auto& th = m.thresholds;
    switch (m.variant) {
      case MappingVariant::MappedAlpha:
        if (th.stage2.size() != 1 || th.stage3.size() != 3)
          add("mapping.thresholds", "Mapped-alpha needs 1 stage-2 and 3 stage-3 thresholds");
        break;
      case MappingVariant::MappedBeta:
        if (th.stage2.size() != 2 || th.stage3.size() != 4)
          add("mapping.thresholds", "Mapped-beta needs 2 stage-2 and 4 stage-3 thresholds");
        break;
      case MappingVariant::PermutedBlock:
        break;
    }
    if (m.variant != MappingVariant::PermutedBlock) {
      if (!detail::sorted_in_unit(th.stage2) || !detail::sorted_in_unit(th.stage3))
        add("mapping.thresholds", "thresholds must lie in [0,1] and be non-decreasing");
      if (!th.stage3.empty() && th.stage3.front() != d.tau)
        add("mapping.thresholds", "first stage-3 threshold must equal tau");
    }
  }
  return out;
}

inline std::string to_string(const std::vector<Violation>& vs) {
  std::ostringstream os;
  for (const auto& v : vs) os << v.field << ": " << v.message << '\n';
  return os.str();
}

inline const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::FixedEqual: return "FixedEqual";
    case RuleKind::TSBRAR: return "TSBRAR";
    case RuleKind::TrippaBRAR: return "TrippaBRAR";
  }
  return "?";
}

inline const char* to_string(ControlExponentForm f) {
  return f == ControlExponentForm::ProductForm ? "ProductForm" : "PowerForm";
}

inline const char* to_string(ProbMaxMethod m) {
  return m == ProbMaxMethod::Quadrature ? "Quadrature" : "MonteCarlo";
}

inline const char* to_string(MappingVariant v) {
  switch (v) {
    case MappingVariant::MappedAlpha: return "MappedAlpha";
    case MappingVariant::MappedBeta: return "MappedBeta";
    case MappingVariant::PermutedBlock: return "PermutedBlock";
  }
  return "?";
}

}  // namespace radapt
