#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radapt/core.hpp"
#include "radapt/rng.hpp"
#include "radapt/rules.hpp"

namespace radapt {

enum class AdaptationCategory { Drop, Disfavour, Balance, Favour, Keep };

inline const char* to_string(AdaptationCategory c) {
  switch (c) {
    case AdaptationCategory::Drop: return "Drop";
    case AdaptationCategory::Disfavour: return "Disfavour";
    case AdaptationCategory::Balance: return "Balance";
    case AdaptationCategory::Favour: return "Favour";
    case AdaptationCategory::Keep: return "Keep";
  }
  return "?";
}

// Per-arm patient counts for one stage, ordered C:T1:T2.
struct RatioVector {
  std::vector<int> counts;

  int total() const noexcept {
    int n = 0;
    for (int c : counts) n += c;
    return n;
  }
  std::size_t size() const noexcept { return counts.size(); }
  int operator[](std::size_t i) const { return counts[i]; }

  bool operator==(const RatioVector&) const = default;
  auto operator<=>(const RatioVector&) const = default;
};

inline std::string to_string(const RatioVector& r) {
  std::string s;
  for (std::size_t i = 0; i < r.counts.size(); ++i) {
    if (i) s += ':';
    s += std::to_string(r.counts[i]);
  }
  return s;
}

inline RatioVector parse_ratio(std::string_view text) {
  RatioVector r;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = std::min(text.find(':', pos), text.size());
    const auto field = text.substr(pos, next - pos);
    int v = 0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size() || v < 0 || field.empty())
      throw InvalidInput("malformed ratio '" + std::string(text) + "'");
    r.counts.push_back(v);
    pos = next + 1;
  }
  if (r.counts.empty() || r.total() == 0) throw InvalidInput("empty ratio '" + std::string(text) + "'");
  return r;
}

// Allowed stage ratios for the three-arm 6/6/8 layout.
inline std::vector<RatioVector> ratio_menu(int stage) {
  switch (stage) {
    case 1: return {{{2, 2, 2}}};
    case 2: return {{{2, 1, 3}}, {{2, 2, 2}}, {{2, 3, 1}}};
    case 3:
      return {{{2, 0, 6}}, {{2, 1, 5}}, {{2, 2, 4}}, {{2, 3, 3}},
              {{2, 4, 2}}, {{2, 5, 1}}, {{2, 6, 0}}};
    default: throw InvalidInput("ratio menu defined for stages 1-3 only");
  }
}

inline bool in_menu(const RatioVector& r, int stage) {
  const auto menu = ratio_menu(stage);
  return std::find(menu.begin(), menu.end(), r) != menu.end();
}

inline RatioVector balanced_ratio(int stage) {
  if (stage == 3) return {{2, 3, 3}};
  return {{2, 2, 2}};
}

namespace detail {

// Categories in threshold order for a variant/stage.
inline std::vector<AdaptationCategory> category_domain(MappingVariant v, int stage) {
  using C = AdaptationCategory;
  if (stage == 2) {
    if (v == MappingVariant::MappedAlpha) return {C::Disfavour, C::Favour};
    return {C::Disfavour, C::Balance, C::Favour};
  }
  if (v == MappingVariant::MappedAlpha) return {C::Drop, C::Disfavour, C::Favour, C::Keep};
  return {C::Drop, C::Disfavour, C::Balance, C::Favour, C::Keep};
}

}  // namespace detail

/// Category of an active arm with probability pi_k: the j-th category when
/// pi_k lies in [p_{j-1}, p_j), with p_0 = 0 and the top interval closed at 1.
/// Stage 1 and the permuted-block variant always balance.
inline AdaptationCategory decide_category(double pi_k, int stage, const MappingConfig& config) {
  if (!(pi_k >= 0.0 && pi_k <= 1.0)) throw InvalidInput("pi_k outside [0,1]");
  if (stage < 1 || stage > 3) throw InvalidInput("mapping stage must be 1, 2 or 3");
  if (stage == 1 || config.variant == MappingVariant::PermutedBlock) return AdaptationCategory::Balance;

  const auto& th = stage == 2 ? config.thresholds.stage2 : config.thresholds.stage3;
  const auto domain = detail::category_domain(config.variant, stage);
  if (th.size() + 1 != domain.size()) throw InvalidInput("threshold count does not match mapping variant");
  std::size_t j = 0;
  while (j < th.size() && th[j] <= pi_k) ++j;
  return domain[j];
}

/// Turns the two active arms' categories into a C:T1:T2 stage ratio.
///
/// Stage 2 clauses, first match wins: one Disfavour -> 2:1:3 (that arm gets
/// 1), two Balance -> 2:2:2, one Favour -> 2:3:1 (that arm gets 3),
/// otherwise 2:2:2.
///
/// Stage 3 clauses, first match wins: one Drop -> that arm gets 0 and the
/// other 6; one Keep -> that arm gets 6 and the other 0; one Disfavour ->
/// that arm gets 1 or 2 (fair coin); one Favour -> that arm gets 5 or 4 (fair
/// coin); otherwise 2:3:3. Keep is checked right after Drop: every pair with a
/// single Keep also matches one of the other single-category clauses, so Keep
/// would otherwise never fire.
inline RatioVector resolve_allocation(std::span<const AdaptationCategory> categories, int stage, Rng& rng) {
  using C = AdaptationCategory;
  if (categories.size() != 2) throw InvalidInput("resolve_allocation needs exactly two active arms");
  if (stage != 2 && stage != 3) throw InvalidInput("resolve_allocation is defined for stages 2 and 3");
  if (stage == 2) {
    for (auto c : categories)
      if (c == C::Drop || c == C::Keep) throw InvalidInput(std::string(to_string(c)) + " is not allowed at stage 2");
  }

  auto count = [&](C c) { return std::count(categories.begin(), categories.end(), c); };
  auto index_of = [&](C c) -> std::size_t { return categories[0] == c ? 0 : 1; };
  // Gives `mine` to the arm with category c, `other` to the remaining active.
  auto assign = [&](C c, int mine, int other) {
    RatioVector r{{2, 0, 0}};
    const std::size_t i = index_of(c);
    r.counts[1 + i] = mine;
    r.counts[2 - i] = other;
    return r;
  };

  const int n = stage == 2 ? 6 : 8;
  const int active_total = n - 2;

  if (stage == 2) {
    if (count(C::Disfavour) == 1) return assign(C::Disfavour, 1, active_total - 1);
    if (count(C::Balance) == 2) return {{2, 2, 2}};
    if (count(C::Favour) == 1) return assign(C::Favour, 3, active_total - 3);
    return {{2, 2, 2}};
  }

  if (count(C::Drop) == 1) return assign(C::Drop, 0, active_total);
  if (count(C::Keep) == 1) return assign(C::Keep, active_total, 0);
  if (count(C::Disfavour) == 1) {
    const int mine = rng.coin() ? 2 : 1;
    return assign(C::Disfavour, mine, active_total - mine);
  }
  if (count(C::Favour) == 1) {
    const int mine = rng.coin() ? 4 : 5;
    return assign(C::Favour, mine, active_total - mine);
  }
  return {{2, 3, 3}};
}

struct MappingDecision {
  std::vector<AdaptationCategory> categories;  // one per active arm
  RatioVector ratio;
};

// Categories for the active arms (pi[1], pi[2]) and the resulting ratio.
// `demote_extremes` turns Drop into Disfavour and Keep into Favour before
// resolving (used when arm dropping is suppressed).
inline MappingDecision map_stage(const MappingConfig& config, int stage, const ProbVector& pi, Rng& rng,
                                 bool demote_extremes = false) {
  if (pi.size() != 3) throw InvalidInput("mapping requires exactly three arms");
  if (stage < 1 || stage > 3) throw InvalidInput("mapping stage must be 1, 2 or 3");
  MappingDecision d;
  if (config.variant == MappingVariant::PermutedBlock || stage == 1) {
    d.categories = {AdaptationCategory::Balance, AdaptationCategory::Balance};
    d.ratio = balanced_ratio(stage);
    return d;
  }
  for (std::size_t k = 1; k < 3; ++k) {
    auto c = decide_category(pi[k], stage, config);
    if (demote_extremes) {
      if (c == AdaptationCategory::Drop) c = AdaptationCategory::Disfavour;
      if (c == AdaptationCategory::Keep) c = AdaptationCategory::Favour;
    }
    d.categories.push_back(c);
  }
  d.ratio = resolve_allocation(d.categories, stage, rng);
  return d;
}

inline RatioVector stage_ratio(const TrialDesign& design, int stage, const ProbVector& pi, Rng& rng) {
  if (!design.mapping) throw InvalidInput("stage_ratio needs a mapped design");
  if (stage < 1 || stage > 3) throw InvalidInput("stage must be 1, 2 or 3");
  return map_stage(*design.mapping, stage, pi, rng).ratio;
}

}  // namespace radapt
