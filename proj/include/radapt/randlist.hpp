#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "radapt/core.hpp"
#include "radapt/csv.hpp"
#include "radapt/mapping.hpp"
#include "radapt/rng.hpp"

namespace radapt {

// One stage's concrete randomisation sequence. Per-arm counts always equal
// the ratio it was generated from.
struct RandomisationBlock {
  int stage_index = 0;
  std::vector<ArmId> assignments;
  std::string seed_tag;

  std::vector<int> arm_counts(std::size_t k) const {
    std::vector<int> c(k, 0);
    for (const auto& a : assignments) ++c.at(a.index);
    return c;
  }
  bool operator==(const RandomisationBlock&) const = default;
};

inline std::string seed_tag(std::uint64_t seed) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(seed));
  return buf;
}

/// Uniformly random permutation of the multiset given by the ratio.
inline RandomisationBlock generate_block(const RatioVector& ratio, Rng& rng, int stage_index = 1,
                                         std::span<const ArmId> arms = {}) {
  if (ratio.counts.empty() || ratio.total() <= 0) throw InvalidInput("ratio is empty");
  std::vector<ArmId> fallback;
  if (arms.empty()) {
    fallback = default_arms(ratio.size());
    arms = fallback;
  }
  if (arms.size() != ratio.size()) throw InvalidInput("ratio and arm list sizes differ");

  RandomisationBlock b;
  b.stage_index = stage_index;
  b.seed_tag = seed_tag(rng.seed());
  b.assignments.reserve(static_cast<std::size_t>(ratio.total()));
  for (std::size_t k = 0; k < ratio.size(); ++k) {
    if (ratio[k] < 0) throw InvalidInput("negative ratio entry");
    for (int i = 0; i < ratio[k]; ++i) b.assignments.push_back(arms[k]);
  }
  shuffle(b.assignments.begin(), b.assignments.end(), rng);
  return b;
}

inline constexpr const char* kRandListHeader = "position,stage,arm_label,block_id,seed_tag";

/// Writes blocks as CSV: position,stage,arm_label,block_id,seed_tag.
/// Positions run 1..N across all blocks; block ids are 1-based.
inline void export_list(std::span<const RandomisationBlock> blocks, const std::string& path) {
  if (blocks.empty()) throw InvalidInput("no randomisation blocks to export");
  std::ostringstream os;
  os << kRandListHeader << '\n';
  std::size_t position = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (const auto& a : blocks[b].assignments) {
      os << ++position << ',' << blocks[b].stage_index << ',' << a.label << ',' << (b + 1) << ','
         << blocks[b].seed_tag << '\n';
    }
  }
  write_text_file(path, os.str());
}

inline std::vector<RandomisationBlock> import_list(const std::string& path, std::span<const ArmId> arms) {
  const auto table = read_csv(path);
  table.require_columns({"position", "stage", "arm_label", "block_id", "seed_tag"});
  std::vector<RandomisationBlock> blocks;
  long last_block = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t line = r + 2;
    const long block_id = table.get_long(r, "block_id", line);
    const long stage = table.get_long(r, "stage", line);
    const auto& label = table.get(r, "arm_label");
    const ArmId* arm = nullptr;
    for (const auto& a : arms)
      if (a.label == label) arm = &a;
    if (!arm) throw ParseError(path, line, "unknown arm label '" + label + "'");
    if (block_id != last_block) {
      if (block_id != last_block + 1) throw ParseError(path, line, "block ids must be consecutive");
      blocks.push_back({static_cast<int>(stage), {}, table.get(r, "seed_tag")});
      last_block = block_id;
    }
    blocks.back().assignments.push_back(*arm);
  }
  if (blocks.empty()) throw ParseError(path, 1, "no rows");
  return blocks;
}

}  // namespace radapt
