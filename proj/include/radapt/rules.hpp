#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <variant>
#include <vector>

#include "radapt/core.hpp"
#include "radapt/posterior.hpp"

namespace radapt {

struct ProbVector {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  double sum() const noexcept { return std::accumulate(probs.begin(), probs.end(), 0.0); }

  bool valid(double tol = 1e-12) const noexcept {
    for (double p : probs)
      if (!(p >= 0.0 && p <= 1.0)) return false;
    return std::abs(sum() - 1.0) <= tol;
  }
};

// Accrued allocations per arm before the interim.
struct ArmCounts {
  std::vector<std::int64_t> counts;
};

// Normalises non-negative weights to a probability vector.
inline ProbVector normalise(std::vector<double> w) {
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidInput("weights must be finite and non-negative");
    total += x;
  }
  if (!(total > 0.0)) throw std::logic_error("all allocation weights are zero");
  for (double& x : w) x /= total;
  return {std::move(w)};
}

inline ProbVector fixed_equal(std::size_t k) {
  if (k < 2) throw InvalidInput("fixed_equal needs K >= 2");
  return {std::vector<double>(k, 1.0 / static_cast<double>(k))};
}

/// Thompson-style weights pi_k proportional to prob_max_k^gamma.
inline ProbVector ts_from_prob_max(std::span<const double> prob_max, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidInput("gamma must be >= 0");
  if (gamma == 0.0) return fixed_equal(prob_max.size());
  std::vector<double> w(prob_max.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(prob_max[i], gamma);
  return normalise(std::move(w));
}

using ProbMaxConfig = std::variant<ExactMethod, MonteCarloMethod>;

inline ProbVector ts_brar(std::span<const BetaPosterior> posteriors, double gamma, ProbMaxConfig method = ExactMethod{}) {
  if (posteriors.size() < 2) throw InvalidInput("ts_brar needs at least two arms");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidInput("gamma must be >= 0");
  if (gamma == 0.0) return fixed_equal(posteriors.size());
  const auto pm = std::visit([&](auto m) { return prob_max_all(posteriors, m); }, method);
  return ts_from_prob_max(pm, gamma);
}

// Control weight multiplier g(dn, eta).
inline double control_boost(double dn, double eta, ControlExponentForm form) {
  if (form == ControlExponentForm::ProductForm) return std::exp(eta * dn);
  if (dn == 0.0) return 1.0;
  const double s = dn > 0.0 ? 1.0 : -1.0;
  return std::exp(s * std::pow(std::abs(dn), eta));
}

/// Trippa-style control-protected rule for one control (arm 0) and two
/// actives. Active raw weights are the normalised powered superiority
/// probabilities; the control raw weight is (1/K) g(max_active_n - n_C, eta).
/// The joint raw vector is normalised to sum to one.
inline ProbVector trippa_brar(std::span<const BetaPosterior> posteriors, const ArmCounts& counts,
                              double gamma_t, double eta_t,
                              ControlExponentForm form = ControlExponentForm::ProductForm) {
  if (posteriors.size() != 3 || counts.counts.size() != 3)
    throw InvalidInput("trippa_brar needs exactly three arms (control first)");
  if (!(gamma_t >= 0.0) || !std::isfinite(gamma_t)) throw InvalidInput("gamma_t must be >= 0");
  if (!(eta_t >= 0.0) || !std::isfinite(eta_t)) throw InvalidInput("eta_t must be >= 0");
  const std::size_t k = posteriors.size();

  std::vector<double> raw(k, 0.0);
  double active_total = 0.0;
  for (std::size_t j = 1; j < k; ++j) {
    const double sup = prob_greater(posteriors[j], posteriors[0]);
    raw[j] = gamma_t == 0.0 ? 1.0 : std::pow(sup, gamma_t);
    active_total += raw[j];
  }
  if (active_total > 0.0) {
    for (std::size_t j = 1; j < k; ++j) raw[j] /= active_total;
  } else {
    for (std::size_t j = 1; j < k; ++j) raw[j] = 1.0 / static_cast<double>(k - 1);
  }

  std::int64_t max_active = 0;
  for (std::size_t j = 1; j < k; ++j) max_active = std::max(max_active, counts.counts[j]);
  const double dn = static_cast<double>(max_active - counts.counts[0]);
  raw[0] = control_boost(dn, eta_t, form) / static_cast<double>(k);
  return normalise(std::move(raw));
}

}  // namespace radapt
