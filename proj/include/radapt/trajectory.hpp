#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radapt/core.hpp"
#include "radapt/mapping.hpp"
#include "radapt/outcomes.hpp"
#include "radapt/posterior.hpp"
#include "radapt/randlist.hpp"
#include "radapt/rules.hpp"

namespace radapt {

struct TestResult {
  std::size_t arm = 1;  // active arm compared against control
  double p_value = 1.0;
  bool reject = false;
  int n_treat = 0;
  int n_control = 0;
  bool skipped = false;  // an arm had no usable outcomes
};

struct StageRecord {
  int stage = 1;
  RatioVector ratio;                  // realised per-arm counts
  std::optional<RatioVector> target;  // planned ratio when the stage used a fixed block
  RandomisationBlock block;
};

struct InterimRecord {
  int next_stage = 2;  // stage whose allocation this interim sets
  std::vector<BetaPosterior> posteriors;
  ArmCounts counts;
  ProbVector pi;
  std::vector<AdaptationCategory> categories;  // mapped designs only
  std::optional<RatioVector> ratio;            // mapped designs only
  std::vector<std::string> overrides;          // missing-data policy actions
};

struct TrialTrajectory {
  std::vector<std::string> arm_labels;
  std::vector<StageRecord> stages;
  std::vector<InterimRecord> interims;
  std::vector<PatientRecord> patients;
  std::vector<TestResult> tests;
  std::size_t recommended = 1;
  std::vector<std::string> warnings;

  std::size_t num_arms() const noexcept { return arm_labels.size(); }

  std::vector<int> arm_totals() const {
    std::vector<int> n(num_arms(), 0);
    for (const auto& p : patients) ++n.at(p.arm);
    return n;
  }

  // Outcomes usable in the final analysis: observed plus imputed.
  std::vector<double> outcomes(std::size_t arm) const {
    std::vector<double> v;
    for (const auto& p : patients)
      if (p.arm == arm && p.delta_y) v.push_back(*p.delta_y);
    return v;
  }

  const StageRecord* stage(int t) const {
    for (const auto& s : stages)
      if (s.stage == t) return &s;
    return nullptr;
  }
};

}  // namespace radapt
