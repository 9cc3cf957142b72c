#include <gtest/gtest.h>

#include <filesystem>

#include "radapt/design_json.hpp"
#include "radapt/designs.hpp"

using namespace radapt;

TEST(DesignJson, PresetsRoundTrip) {
  for (const auto& d : all_presets()) {
    const auto text = design_to_string(d);
    const auto back = design_from_string(text);
    EXPECT_EQ(design_to_string(back), text) << d.name;
    EXPECT_EQ(validate_design(back), validate_design(d));
    EXPECT_EQ(back.is_mapped(), d.is_mapped());
    EXPECT_EQ(back.rule.eta_schedule, d.rule.eta_schedule);
  }
}

TEST(DesignJson, InvalidDesignRoundTripsWithSameViolations) {
  auto d = design_mapped_beta();
  d.tau = 0.35;
  d.planned_n = 24;
  const auto back = design_from_string(design_to_string(d));
  EXPECT_EQ(validate_design(back), validate_design(d));
  EXPECT_EQ(validate_design(back).size(), validate_design(d).size());
}

TEST(DesignJson, MinimalDocumentUsesDefaults) {
  const auto d = design_from_string(R"({"stages": [{"size": 6}, {"size": 6}, {"size": 8}]})");
  EXPECT_TRUE(validate_design(d).empty());
  EXPECT_EQ(d.planned_n, 20);
  EXPECT_EQ(d.rule.kind, RuleKind::FixedEqual);
  EXPECT_FALSE(d.is_mapped());
  EXPECT_EQ(d.arms.size(), 3u);
}

TEST(DesignJson, MappingThresholdsDefaultFromTau) {
  const auto d = design_from_string(R"({"tau": 0.05, "stages": [{"size": 6, "control_fix": 2},
    {"size": 6, "control_fix": 2}, {"size": 8, "control_fix": 2, "arm_dropping_allowed": true}],
    "rule": {"kind": "TrippaBRAR", "gamma_schedule": [0.3, 0.6], "eta_schedule": [0.3, 0.3]},
    "mapping": {"variant": "MappedAlpha"}})");
  ASSERT_TRUE(d.mapping);
  EXPECT_DOUBLE_EQ(d.mapping->thresholds.stage3[0], 0.05);
  EXPECT_TRUE(validate_design(d).empty()) << to_string(validate_design(d));
}

TEST(DesignJson, Errors) {
  EXPECT_THROW(design_from_string(R"({"stages": [], "colour": 1})"), InvalidInput);
  EXPECT_THROW(design_from_string(R"({"stages": [{"size": 6, "sizes": 2}]})"), InvalidInput);
  EXPECT_THROW(design_from_string(R"({"stages": [{"size": "six"}]})"), InvalidInput);
  EXPECT_THROW(design_from_string(R"({"stages": [{"size": 6}], "rule": {"kind": "Magic"}})"), InvalidInput);
  EXPECT_THROW(design_from_string(R"({"name": "x"})"), InvalidInput);
  try {
    design_from_string("{\n\"stages\": [\n{\"size\": 6,}\n]}", "d.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_EQ(e.path(), "d.json");
  }
}

TEST(LoadDesign, PresetsFilesAndErrors) {
  EXPECT_EQ(load_design("preset:MappedAlpha").name, "MappedAlpha");
  EXPECT_THROW(load_design("preset:Nope"), InvalidInput);
  EXPECT_THROW(load_design("/nonexistent/design.json"), FileError);

  const auto path = (std::filesystem::temp_directory_path() / "radapt_design.json").string();
  save_design(design_stratosphere2(), path);
  EXPECT_EQ(design_to_string(load_design(path)), design_to_string(design_stratosphere2()));

  auto bad = design_fixed_equal();
  bad.tau = 0.9;
  save_design(bad, path);
  try {
    load_design(path);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("tau"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(ShippedDesigns, MatchPresets) {
  const std::filesystem::path dir = RADAPT_SOURCE_DIR "/designs";
  for (const auto& name : preset_names()) {
    const auto file = dir / (name + ".json");
    ASSERT_TRUE(std::filesystem::exists(file)) << file;
    EXPECT_EQ(design_to_string(load_design(file.string())), design_to_string(preset(name))) << name;
  }
}
