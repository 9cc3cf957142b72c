#pragma once

#include <string>
#include <vector>

#include "radapt/core.hpp"

namespace radapt {

// Constant eta used by the Trippa-based presets. Chosen with calibrate_eta so
// that Control Protected keeps its mean control allocation near 1/3 under the
// global null of the default outcome model (docs/calibration.md).
inline constexpr double kCalibratedEta = 0.30;

// gamma_t = patients accrued before stage t / n, for every adaptive stage.
inline std::vector<double> information_gamma(const std::vector<StagePlan>& stages) {
  int n = 0;
  for (const auto& s : stages) n += s.size;
  std::vector<double> g;
  int before = 0;
  for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
    before += stages[i].size;
    g.push_back(static_cast<double>(before) / n);
  }
  return g;
}

inline std::vector<StagePlan> reference_stages() {
  return {StagePlan{1, 6, {}, false, false}, StagePlan{2, 6, {}, false, false}, StagePlan{3, 8, {}, false, false}};
}

inline TrialDesign design_fixed_equal() {
  TrialDesign d;
  d.name = "FixedEqual";
  d.stages = reference_stages();
  d.rule.kind = RuleKind::FixedEqual;
  return d;
}

inline TrialDesign design_unrestricted() {
  TrialDesign d;
  d.name = "Unrestricted";
  d.stages = reference_stages();
  d.rule.kind = RuleKind::TSBRAR;
  d.rule.gamma_schedule = {1.0, 1.0};
  return d;
}

inline TrialDesign design_control_protected() {
  TrialDesign d;
  d.name = "ControlProtected";
  d.stages = reference_stages();
  d.rule.kind = RuleKind::TrippaBRAR;
  d.rule.gamma_schedule = information_gamma(d.stages);
  d.rule.eta_schedule = {kCalibratedEta, kCalibratedEta};
  return d;
}

inline TrialDesign design_stratosphere2() {
  auto d = design_control_protected();
  d.name = "StratosPHere2";
  d.stages[0].balanced_block = true;
  d.stages[2].arm_dropping_allowed = true;
  return d;
}

inline TrialDesign mapped_from_baseline(std::string name, MappingVariant v) {
  auto d = design_control_protected();
  d.name = std::move(name);
  for (auto& s : d.stages) s.control_fix = 2;
  d.stages[2].arm_dropping_allowed = v != MappingVariant::PermutedBlock;
  d.mapping = MappingConfig{v, default_thresholds(v, d.tau), 2};
  return d;
}

inline TrialDesign design_permuted_block() {
  auto d = mapped_from_baseline("PermutedBlock", MappingVariant::PermutedBlock);
  d.rule = RuleConfig{};
  return d;
}

inline TrialDesign design_mapped_alpha() { return mapped_from_baseline("MappedAlpha", MappingVariant::MappedAlpha); }
inline TrialDesign design_mapped_beta() { return mapped_from_baseline("MappedBeta", MappingVariant::MappedBeta); }

inline std::vector<std::string> preset_names() {
  return {"FixedEqual", "Unrestricted", "ControlProtected", "StratosPHere2", "PermutedBlock", "MappedAlpha",
          "MappedBeta"};
}

inline TrialDesign preset(const std::string& name) {
  if (name == "FixedEqual") return design_fixed_equal();
  if (name == "Unrestricted") return design_unrestricted();
  if (name == "ControlProtected") return design_control_protected();
  if (name == "StratosPHere2") return design_stratosphere2();
  if (name == "PermutedBlock") return design_permuted_block();
  if (name == "MappedAlpha") return design_mapped_alpha();
  if (name == "MappedBeta") return design_mapped_beta();
  throw InvalidInput("unknown preset '" + name + "'");
}

inline std::vector<TrialDesign> all_presets() {
  std::vector<TrialDesign> v;
  for (const auto& n : preset_names()) v.push_back(preset(n));
  return v;
}

}  // namespace radapt
