#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "radapt/error.hpp"
#include "radapt/rng.hpp"

namespace radapt {

struct BetaPosterior {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const noexcept { return alpha / (alpha + beta); }
  bool operator==(const BetaPosterior&) const = default;
};

struct SuccessCount {
  std::int64_t successes = 0;
  std::int64_t failures = 0;
};

inline BetaPosterior update(const BetaPosterior& prior, const SuccessCount& counts) {
  return {prior.alpha + static_cast<double>(counts.successes),
          prior.beta + static_cast<double>(counts.failures)};
}

struct ExactMethod {};

struct MonteCarloMethod {
  int draws = 100000;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_posterior(const BetaPosterior& p) {
  if (!std::isfinite(p.alpha) || !std::isfinite(p.beta))
    throw InvalidInput("posterior parameters must be finite");
  if (!(p.alpha > 0.0) || !(p.beta > 0.0))
    throw InvalidInput("posterior parameters must be positive");
}

inline bool is_integer(double x) { return x == std::floor(x) && x < 1e7; }

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) {
    if (x == 0.0 && a == 1.0) return 1.0 / std::exp(log_beta(a, b));
    if (x == 1.0 && b == 1.0) return 1.0 / std::exp(log_beta(a, b));
    return 0.0;
  }
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

inline double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

// P(X > Y) for X ~ Beta(ax, bx), Y ~ Beta(ay, by), ax integer:
//   sum_{i=0}^{ax-1} B(ay+i, by+bx) / ((bx+i) B(1+i, bx) B(ay, by)).
inline double prob_greater_closed_form(const BetaPosterior& x, const BetaPosterior& y) {
  const auto terms = static_cast<int>(x.alpha);
  const double lby = log_beta(y.alpha, y.beta);
  double total = 0.0;
  for (int i = 0; i < terms; ++i) {
    const double di = static_cast<double>(i);
    total += std::exp(log_beta(y.alpha + di, y.beta + x.beta) - std::log(x.beta + di) -
                      log_beta(1.0 + di, x.beta) - lby);
  }
  return std::clamp(total, 0.0, 1.0);
}

// Density and CDF at t given tc = 1 - t computed without cancellation.
// Tanh-sinh passes b - x on the right half of [0,1] and a - x (negative) on
// the left half, where 1 - x is exact enough.
inline double upper_complement(double x, double xc) { return xc > 0.0 ? xc : 1.0 - x; }

inline double beta_pdf_tc(double t, double tc, double a, double b) {
  if (!(t > 0.0) || !(tc > 0.0)) return 0.0;
  return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log(tc) - log_beta(a, b));
}

inline double beta_cdf_tc(double t, double tc, double a, double b) {
  if (!(t > 0.0)) return 0.0;
  if (!(tc > 0.0)) return 1.0;
  return t <= 0.5 ? boost::math::ibeta(a, b, t) : boost::math::ibetac(b, a, tc);
}

// P(X > Y) = integral over y of f_Y(y) * (1 - F_X(y)). Tanh-sinh copes with
// the endpoint singularities of non-integer Beta densities.
inline double prob_greater_quadrature(const BetaPosterior& x, const BetaPosterior& y) {
  auto f = [&](double t, double xc) {
    const double tc = upper_complement(t, xc);
    const double sf = t <= 0.5 ? boost::math::ibetac(x.alpha, x.beta, t) : boost::math::ibeta(x.beta, x.alpha, tc);
    return beta_pdf_tc(t, tc, y.alpha, y.beta) * sf;
  };
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return std::clamp(integrator.integrate(f, 0.0, 1.0, 1e-13), 0.0, 1.0);
}

inline bool all_integer(std::span<const BetaPosterior> ps) {
  for (const auto& p : ps)
    if (!is_integer(p.alpha) || !is_integer(p.beta)) return false;
  return true;
}

}  // namespace detail

/// P(theta_a > theta_b) for independent Beta posteriors, evaluated
/// deterministically. Integer first parameters use the closed-form finite sum
/// (by reflection when only b's parameters are integral); everything else
/// falls back to adaptive Gauss-Kronrod quadrature.
inline double prob_greater(const BetaPosterior& a, const BetaPosterior& b, ExactMethod = {}) {
  detail::check_posterior(a);
  detail::check_posterior(b);
  if (detail::is_integer(a.alpha) && a.alpha <= 2000.0)
    return detail::prob_greater_closed_form(a, b);
  // P(A > B) = 1 - P(B > A) = P(1-B > 1-A); 1-B ~ Beta(b.beta, b.alpha).
  if (detail::is_integer(b.beta) && b.beta <= 2000.0)
    return detail::prob_greater_closed_form({b.beta, b.alpha}, {a.beta, a.alpha});
  return detail::prob_greater_quadrature(a, b);
}

// Seeded Monte Carlo estimate of P(theta_a > theta_b).
inline double prob_greater(const BetaPosterior& a, const BetaPosterior& b, MonteCarloMethod mc) {
  detail::check_posterior(a);
  detail::check_posterior(b);
  if (mc.draws < 1) throw InvalidInput("draws must be >= 1");
  Rng rng(mc.seed);
  std::int64_t wins = 0;
  for (int i = 0; i < mc.draws; ++i) {
    const double x = rng.beta(a.alpha, a.beta);
    const double y = rng.beta(b.alpha, b.beta);
    if (x > y) ++wins;
  }
  return static_cast<double>(wins) / mc.draws;
}

/// P(theta_arm is the largest) by common-random-number joint sampling.
/// Ties among the sampled maxima are split uniformly, so the estimates over
/// all arms sum to exactly one.
inline std::vector<double> prob_max_all(std::span<const BetaPosterior> posteriors, MonteCarloMethod mc) {
  if (posteriors.size() < 2) throw InvalidInput("prob_max needs at least two posteriors");
  if (mc.draws < 1) throw InvalidInput("draws must be >= 1");
  for (const auto& p : posteriors) detail::check_posterior(p);
  const std::size_t k = posteriors.size();
  Rng rng(mc.seed);
  std::vector<std::int64_t> wins(k, 0);
  std::vector<double> draw(k);
  std::vector<std::size_t> argmax;
  argmax.reserve(k);
  for (int i = 0; i < mc.draws; ++i) {
    for (std::size_t j = 0; j < k; ++j) draw[j] = rng.beta(posteriors[j].alpha, posteriors[j].beta);
    const double best = *std::max_element(draw.begin(), draw.end());
    argmax.clear();
    for (std::size_t j = 0; j < k; ++j)
      if (draw[j] == best) argmax.push_back(j);
    const std::size_t pick = argmax.size() == 1 ? argmax[0] : argmax[rng.below(argmax.size())];
    ++wins[pick];
  }
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = static_cast<double>(wins[j]) / mc.draws;
  return out;
}

/// Deterministic P(theta_arm is the largest) = int f_arm(x) prod_{j != arm} F_j(x) dx
/// for every arm. The last arm is taken as the complement so the vector sums
/// to one exactly.
inline std::vector<double> prob_max_all(std::span<const BetaPosterior> posteriors, ExactMethod = {}) {
  if (posteriors.size() < 2) throw InvalidInput("prob_max needs at least two posteriors");
  for (const auto& p : posteriors) detail::check_posterior(p);
  using boost::math::quadrature::gauss_kronrod;
  const std::size_t k = posteriors.size();
  const bool integer = detail::all_integer(posteriors);
  std::vector<double> out(k, 0.0);
  double acc = 0.0;
  for (std::size_t arm = 0; arm + 1 < k; ++arm) {
    auto f = [&](double x) {
      double v = detail::beta_pdf(x, posteriors[arm].alpha, posteriors[arm].beta);
      for (std::size_t j = 0; j < k && v != 0.0; ++j)
        if (j != arm) v *= detail::beta_cdf(x, posteriors[j].alpha, posteriors[j].beta);
      return v;
    };
    double v = 0.0;
    if (integer) {
      double err = 0.0;
      v = gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-12, &err);
    } else {
      auto g = [&](double x, double raw_xc) {
        const double xc = detail::upper_complement(x, raw_xc);
        double w = detail::beta_pdf_tc(x, xc, posteriors[arm].alpha, posteriors[arm].beta);
        for (std::size_t j = 0; j < k && w != 0.0; ++j)
          if (j != arm) w *= detail::beta_cdf_tc(x, xc, posteriors[j].alpha, posteriors[j].beta);
        return w;
      };
      thread_local boost::math::quadrature::tanh_sinh<double> integrator;
      v = integrator.integrate(g, 0.0, 1.0, 1e-12);
    }
    out[arm] = std::clamp(v, 0.0, 1.0);
    acc += out[arm];
  }
  out[k - 1] = std::max(0.0, 1.0 - acc);
  return out;
}

inline double prob_max(std::span<const BetaPosterior> posteriors, std::size_t arm, MonteCarloMethod mc) {
  if (arm >= posteriors.size()) throw InvalidInput("arm index out of range");
  return prob_max_all(posteriors, mc)[arm];
}

inline double prob_max(std::span<const BetaPosterior> posteriors, std::size_t arm, ExactMethod m = {}) {
  if (arm >= posteriors.size()) throw InvalidInput("arm index out of range");
  return prob_max_all(posteriors, m)[arm];
}

}  // namespace radapt
