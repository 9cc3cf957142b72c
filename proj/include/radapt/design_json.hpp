#pragma once

#include <algorithm>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "radapt/core.hpp"
#include "radapt/csv.hpp"
#include "radapt/designs.hpp"
#include "radapt/error.hpp"

// JSON design files. The schema is documented in docs/design-format.md.
namespace radapt {

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw InvalidInput(where + ": unknown key '" + key + "'");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(where + "." + key + ": wrong type");
  }
}

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<E> values, const std::string& where) {
  for (E v : values)
    if (s == to_string(v)) return v;
  throw InvalidInput(where + ": unknown value '" + s + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const TrialDesign& d) {
  using nlohmann::json;
  json j;
  j["name"] = d.name;
  json arms = json::array();
  for (const auto& a : d.arms) arms.push_back(a.label);
  j["arms"] = arms;
  json stages = json::array();
  for (const auto& s : d.stages) {
    json st;
    st["size"] = s.size;
    st["control_fix"] = s.control_fix ? json(*s.control_fix) : json(nullptr);
    st["arm_dropping_allowed"] = s.arm_dropping_allowed;
    st["balanced_block"] = s.balanced_block;
    stages.push_back(st);
  }
  j["stages"] = stages;
  j["rule"] = {{"kind", to_string(d.rule.kind)},
               {"gamma_schedule", d.rule.gamma_schedule},
               {"eta_schedule", d.rule.eta_schedule},
               {"control_exponent_form", to_string(d.rule.control_exponent_form)},
               {"prob_max_method", to_string(d.rule.prob_max_method)},
               {"prob_max_draws", d.rule.prob_max_draws}};
  if (d.mapping) {
    j["mapping"] = {{"variant", to_string(d.mapping->variant)},
                    {"thresholds",
                     {{"stage2", d.mapping->thresholds.stage2}, {"stage3", d.mapping->thresholds.stage3}}},
                    {"control_fix", d.mapping->control_fix}};
  } else {
    j["mapping"] = nullptr;
  }
  j["prior_alpha"] = d.prior_alpha;
  j["prior_beta"] = d.prior_beta;
  j["delta"] = d.delta;
  j["tau"] = d.tau;
  j["alpha_level"] = d.alpha_level;
  j["stratum_label"] = d.stratum_label;
  j["planned_n"] = d.planned_n;
  return j;
}

// Structural parse only; call validate_design on the result.
inline TrialDesign design_from_json(const nlohmann::json& j) {
  using detail::get_or;
  using nlohmann::json;
  detail::reject_unknown_keys(j,
                              {"name", "arms", "stages", "rule", "mapping", "prior_alpha", "prior_beta", "delta", "tau",
                               "alpha_level", "stratum_label", "planned_n"},
                              "design");
  TrialDesign d;
  d.name = get_or<std::string>(j, "name", d.name, "design");

  if (j.contains("arms")) {
    const auto labels = get_or<std::vector<std::string>>(j, "arms", {}, "design");
    d.arms.clear();
    for (std::size_t i = 0; i < labels.size(); ++i)
      d.arms.push_back({i, i == 0 ? ArmRole::Control : ArmRole::Active, labels[i]});
  }
  const std::size_t k = d.arms.size();

  if (!j.contains("stages") || !j.at("stages").is_array()) throw InvalidInput("design.stages: required array");
  int idx = 0;
  for (const auto& s : j.at("stages")) {
    const std::string where = "design.stages[" + std::to_string(idx) + "]";
    detail::reject_unknown_keys(s, {"size", "control_fix", "arm_dropping_allowed", "balanced_block"}, where);
    StagePlan p;
    p.stage_index = ++idx;
    if (!s.contains("size")) throw InvalidInput(where + ".size: required");
    p.size = get_or<int>(s, "size", 0, where);
    if (s.contains("control_fix") && !s.at("control_fix").is_null()) p.control_fix = get_or<int>(s, "control_fix", 0, where);
    p.arm_dropping_allowed = get_or<bool>(s, "arm_dropping_allowed", false, where);
    p.balanced_block = get_or<bool>(s, "balanced_block", false, where);
    d.stages.push_back(p);
  }
  d.planned_n = get_or<int>(j, "planned_n", d.total_size(), "design");

  if (j.contains("rule")) {
    const auto& r = j.at("rule");
    detail::reject_unknown_keys(
        r, {"kind", "gamma_schedule", "eta_schedule", "control_exponent_form", "prob_max_method", "prob_max_draws"},
        "design.rule");
    d.rule.kind = detail::parse_enum(get_or<std::string>(r, "kind", "FixedEqual", "design.rule"),
                                     {RuleKind::FixedEqual, RuleKind::TSBRAR, RuleKind::TrippaBRAR}, "design.rule.kind");
    d.rule.gamma_schedule = get_or<std::vector<double>>(r, "gamma_schedule", {}, "design.rule");
    d.rule.eta_schedule = get_or<std::vector<double>>(r, "eta_schedule", {}, "design.rule");
    d.rule.control_exponent_form =
        detail::parse_enum(get_or<std::string>(r, "control_exponent_form", "ProductForm", "design.rule"),
                           {ControlExponentForm::ProductForm, ControlExponentForm::PowerForm},
                           "design.rule.control_exponent_form");
    d.rule.prob_max_method = detail::parse_enum(get_or<std::string>(r, "prob_max_method", "Quadrature", "design.rule"),
                                                {ProbMaxMethod::Quadrature, ProbMaxMethod::MonteCarlo},
                                                "design.rule.prob_max_method");
    d.rule.prob_max_draws = get_or<int>(r, "prob_max_draws", d.rule.prob_max_draws, "design.rule");
  }

  d.tau = get_or<double>(j, "tau", d.tau, "design");
  if (j.contains("mapping") && !j.at("mapping").is_null()) {
    const auto& m = j.at("mapping");
    detail::reject_unknown_keys(m, {"variant", "thresholds", "control_fix"}, "design.mapping");
    MappingConfig mc;
    mc.variant = detail::parse_enum(
        get_or<std::string>(m, "variant", "MappedAlpha", "design.mapping"),
        {MappingVariant::MappedAlpha, MappingVariant::MappedBeta, MappingVariant::PermutedBlock},
        "design.mapping.variant");
    mc.thresholds = default_thresholds(mc.variant, d.tau);
    if (m.contains("thresholds")) {
      const auto& th = m.at("thresholds");
      detail::reject_unknown_keys(th, {"stage2", "stage3"}, "design.mapping.thresholds");
      mc.thresholds.stage2 = get_or<std::vector<double>>(th, "stage2", mc.thresholds.stage2, "design.mapping.thresholds");
      mc.thresholds.stage3 = get_or<std::vector<double>>(th, "stage3", mc.thresholds.stage3, "design.mapping.thresholds");
    }
    mc.control_fix = get_or<int>(m, "control_fix", 2, "design.mapping");
    d.mapping = mc;
  }

  d.prior_alpha = get_or<std::vector<double>>(j, "prior_alpha", std::vector<double>(k, 1.0), "design");
  d.prior_beta = get_or<std::vector<double>>(j, "prior_beta", std::vector<double>(k, 1.0), "design");
  d.delta = get_or<double>(j, "delta", d.delta, "design");
  d.alpha_level = get_or<double>(j, "alpha_level", d.alpha_level, "design");
  d.stratum_label = get_or<std::string>(j, "stratum_label", d.stratum_label, "design");
  return d;
}

inline std::string design_to_string(const TrialDesign& d) { return to_json(d).dump(2) + "\n"; }

inline TrialDesign design_from_string(const std::string& text, const std::string& path = "<string>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ParseError(path, line, "invalid JSON");
  }
  return design_from_json(j);
}

/// Loads and validates a design. `source` is a JSON file path or
/// `preset:<Name>`.
inline TrialDesign load_design(const std::string& source) {
  TrialDesign d;
  if (source.rfind("preset:", 0) == 0) {
    d = preset(source.substr(7));
  } else {
    d = design_from_string(read_text_file(source), source);
  }
  if (const auto v = validate_design(d); !v.empty()) throw InvalidInput("invalid design " + source + ":\n" + to_string(v));
  return d;
}

inline void save_design(const TrialDesign& d, const std::string& path) { write_text_file(path, design_to_string(d)); }

}  // namespace radapt
