#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "radapt/core.hpp"
#include "radapt/csv.hpp"
#include "radapt/rng.hpp"

namespace radapt {

// Noise scale of the default parametric model. Chosen with tools/calibrate_sigma
// so that Fixed Equal randomisation at a 0.4 effect (n = 20, one-sided
// Wilcoxon, alpha = 0.1) has power close to 0.75. See docs/calibration.md.
inline constexpr double kCalibratedScale = 0.37;
// Log-scale standard deviation of the centred log-normal noise shape.
inline constexpr double kDefaultShape = 0.5;

enum class OutcomeKind { Parametric, Bootstrap };

struct OutcomeModel {
  OutcomeKind kind = OutcomeKind::Parametric;
  // E[dY_k] - E[dY_C] per arm; effects[0] is the control and normally 0.
  std::vector<double> effects{0.0, 0.0, 0.0};
  double location = 0.0;  // control mean (parametric)
  double scale = kCalibratedScale;
  double shape = kDefaultShape;
  std::vector<double> pilot;  // bootstrap source

  static OutcomeModel parametric(std::vector<double> effects, double scale = kCalibratedScale,
                                 double shape = kDefaultShape) {
    OutcomeModel m;
    m.effects = std::move(effects);
    m.scale = scale;
    m.shape = shape;
    return m;
  }

  static OutcomeModel bootstrap(std::vector<double> pilot, std::vector<double> effects) {
    OutcomeModel m;
    m.kind = OutcomeKind::Bootstrap;
    m.pilot = std::move(pilot);
    m.effects = std::move(effects);
    return m;
  }

  void validate() const {
    if (effects.empty()) throw InvalidInput("outcome model has no arms");
    for (double e : effects)
      if (!std::isfinite(e)) throw InvalidInput("effects must be finite");
    if (kind == OutcomeKind::Bootstrap) {
      if (pilot.empty()) throw InvalidInput("bootstrap pilot sample is empty");
    } else {
      if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidInput("scale must be positive");
      if (!(shape >= 0.0) || !std::isfinite(shape)) throw InvalidInput("shape must be non-negative");
    }
  }
};

// Centred, unit-variance log-normal variate with log-scale sd `shape`
// (shape == 0 gives a standard normal).
inline double skewed_noise(double shape, Rng& rng) {
  const double z = rng.normal();
  if (shape == 0.0) return z;
  const double s2 = shape * shape;
  const double mean = std::exp(0.5 * s2);
  const double sd = std::sqrt(std::expm1(s2) * std::exp(s2));
  return (std::exp(shape * z) - mean) / sd;
}

inline double draw_outcome(const OutcomeModel& model, std::size_t arm, Rng& rng) {
  if (arm >= model.effects.size()) throw InvalidInput("arm outside outcome model");
  if (model.kind == OutcomeKind::Bootstrap) {
    if (model.pilot.empty()) throw InvalidInput("bootstrap pilot sample is empty");
    return model.pilot[rng.below(model.pilot.size())] + model.effects[arm];
  }
  return model.location + model.effects[arm] + model.scale * skewed_noise(model.shape, rng);
}

// Adaptation endpoint: success iff dY >= delta.
inline bool dichotomise(std::optional<double> delta_y, double delta) {
  if (!delta_y) throw InvalidInput("cannot dichotomise a missing outcome");
  if (!std::isfinite(*delta_y) || !std::isfinite(delta)) throw InvalidInput("non-finite outcome or cutoff");
  return *delta_y >= delta;
}

struct PatientRecord {
  int patient_id = 0;
  int stage = 1;
  std::size_t arm = 0;
  std::optional<double> delta_y;  // nullopt = MISSING
  bool imputed = false;

  bool missing() const noexcept { return !delta_y.has_value(); }
  bool operator==(const PatientRecord&) const = default;
};

struct MissingCase {
  int case_id = 0;
  std::array<int, 3> per_stage{0, 0, 0};

  int total() const noexcept { return per_stage[0] + per_stage[1] + per_stage[2]; }
  bool operator==(const MissingCase&) const = default;
};

inline MissingCase missing_case(int id) {
  switch (id) {
    case 0: return {0, {0, 0, 0}};
    case 1: return {1, {1, 0, 0}};
    case 2: return {2, {2, 0, 0}};
    case 3: return {3, {0, 1, 0}};
    case 4: return {4, {0, 2, 0}};
    case 5: return {5, {1, 1, 0}};
    default: throw InvalidInput("missing-data case must be 0-5");
  }
}

/// Marks `count` uniformly chosen patients of `stage` as MISSING.
inline void apply_missingness_stage(std::vector<PatientRecord>& records, int stage, int count, Rng& rng) {
  if (count <= 0) return;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].stage == stage) idx.push_back(i);
  if (static_cast<std::size_t>(count) > idx.size())
    throw InvalidInput("missing count exceeds stage " + std::to_string(stage) + " size");
  // Partial Fisher-Yates: the first `count` slots are a uniform subset.
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    const auto j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
    auto& rec = records[idx[i]];
    rec.delta_y.reset();
    rec.imputed = false;
  }
}

inline void apply_missingness(std::vector<PatientRecord>& records, const MissingCase& c, Rng& rng) {
  for (int t = 1; t <= 3; ++t) {
    Rng stage_rng = rng.split(static_cast<std::uint64_t>(t));
    apply_missingness_stage(records, t, c.per_stage[static_cast<std::size_t>(t - 1)], stage_rng);
  }
}

/// Replaces each MISSING stage-2 outcome by the mean of the observed outcomes
/// in the same arm from patients enrolled before it. Records with no such
/// history stay MISSING and produce a warning. Returns the number imputed.
inline int impute_stage2_mean(std::vector<PatientRecord>& records, std::vector<std::string>* warnings = nullptr) {
  int imputed = 0;
  for (auto& rec : records) {
    if (rec.stage != 2 || !rec.missing()) continue;
    double sum = 0.0;
    int n = 0;
    for (const auto& other : records) {
      if (other.arm == rec.arm && other.patient_id < rec.patient_id && !other.missing() && !other.imputed) {
        sum += *other.delta_y;
        ++n;
      }
    }
    if (n == 0) {
      if (warnings)
        warnings->push_back("patient " + std::to_string(rec.patient_id) +
                            ": no observed outcomes in arm to impute from; left missing");
      continue;
    }
    rec.delta_y = sum / n;
    rec.imputed = true;
    ++imputed;
  }
  return imputed;
}

// Pilot data: CSV with a single `delta_y` column and a header row.
inline std::vector<double> load_pilot(const std::string& path) {
  const auto t = read_csv(path);
  t.require_columns({"delta_y"});
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double x = t.get_double(r, "delta_y", r + 2);
    if (!std::isfinite(x)) throw ParseError(path, r + 2, "non-finite delta_y");
    v.push_back(x);
  }
  if (v.empty()) throw ParseError(path, 1, "pilot file has no data rows");
  return v;
}

}  // namespace radapt
