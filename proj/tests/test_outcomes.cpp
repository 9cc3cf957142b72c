#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "radapt/outcomes.hpp"

using namespace radapt;

namespace {
std::vector<PatientRecord> trial_records(std::uint64_t seed) {
  std::vector<PatientRecord> recs;
  Rng rng(seed);
  const int sizes[] = {6, 6, 8};
  int id = 0;
  for (int t = 1; t <= 3; ++t)
    for (int i = 0; i < sizes[t - 1]; ++i) recs.push_back({++id, t, static_cast<std::size_t>(id % 3), rng.normal()});
  return recs;
}

int missing_in(const std::vector<PatientRecord>& recs, int stage) {
  int n = 0;
  for (const auto& r : recs) n += r.stage == stage && r.missing();
  return n;
}

void mean_within_3se(const OutcomeModel& m, std::size_t arm, double target) {
  Rng rng(4242 + arm);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = draw_outcome(m, arm, rng);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, target, 3 * se);
}
}  // namespace

TEST(DrawOutcome, BootstrapSingleAtom) {
  const auto m = OutcomeModel::bootstrap({0.0}, {0.0, 0.0, 0.3});
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(draw_outcome(m, 2, rng), 0.3);
}

TEST(DrawOutcome, ParametricMeans) {
  mean_within_3se(OutcomeModel::parametric({0, 0, 0}), 0, 0.0);
  mean_within_3se(OutcomeModel::parametric({0, 0, 0.3}), 2, 0.3);
  mean_within_3se(OutcomeModel::parametric({0, 0.2, 0}, 0.5, 0.0), 1, 0.2);
}

TEST(DrawOutcome, NoiseIsSkewedAndStandardised) {
  Rng rng(8);
  const int n = 200000;
  double s = 0, s2 = 0, s3 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = skewed_noise(0.5, rng);
    s += z;
    s2 += z * z;
    s3 += z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
  EXPECT_GT(s3 / n, 1.0);
}

TEST(DrawOutcome, Errors) {
  Rng rng(1);
  EXPECT_THROW(draw_outcome(OutcomeModel::bootstrap({}, {0, 0, 0}), 0, rng), InvalidInput);
  EXPECT_THROW(draw_outcome(OutcomeModel::parametric({0, 0}), 2, rng), InvalidInput);
  EXPECT_THROW(OutcomeModel::parametric({0, 0, 0}, -1.0).validate(), InvalidInput);
  EXPECT_THROW(OutcomeModel::parametric({0, NAN, 0}).validate(), InvalidInput);
}

TEST(Dichotomise, Examples) {
  EXPECT_TRUE(dichotomise(0.30, 0.30));
  EXPECT_FALSE(dichotomise(0.29, 0.30));
  EXPECT_FALSE(dichotomise(-1.0, 0.30));
  EXPECT_THROW(dichotomise(std::nullopt, 0.3), InvalidInput);
}

TEST(Dichotomise, MonotoneInOutcome) {
  for (double d : {-0.5, 0.0, 0.3}) {
    bool seen = false;
    for (int i = -200; i <= 200; ++i) {
      const bool s = dichotomise(i / 100.0, d);
      if (seen) EXPECT_TRUE(s);
      seen = seen || s;
    }
  }
}

TEST(MissingCase, SixTuples) {
  for (int c = 0; c <= 5; ++c) {
    const auto m = missing_case(c);
    EXPECT_EQ(m.per_stage[2], 0);
    EXPECT_LE(m.per_stage[0] + m.per_stage[1], 2);
  }
  EXPECT_THROW(missing_case(6), InvalidInput);
}

TEST(ApplyMissingness, Cases) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto orig = trial_records(s);
    for (int c = 0; c <= 5; ++c) {
      auto recs = orig;
      Rng rng(s * 7 + c);
      apply_missingness(recs, missing_case(c), rng);
      ASSERT_EQ(recs.size(), orig.size());
      for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(recs[i].arm, orig[i].arm);
        EXPECT_EQ(recs[i].stage, orig[i].stage);
        if (!recs[i].missing()) EXPECT_EQ(recs[i].delta_y, orig[i].delta_y);
      }
      const auto m = missing_case(c);
      for (int t = 1; t <= 3; ++t) EXPECT_EQ(missing_in(recs, t), m.per_stage[t - 1]);
      if (c == 0) EXPECT_EQ(recs, orig);
    }
  }
}

TEST(ApplyMissingness, CountTooLarge) {
  auto recs = trial_records(1);
  Rng rng(1);
  EXPECT_THROW(apply_missingness_stage(recs, 1, 7, rng), InvalidInput);
}

TEST(Impute, MeanOfHistory) {
  std::vector<PatientRecord> recs{{1, 1, 1, 0.2}, {2, 1, 1, 0.4}, {3, 1, 2, 0.7}, {4, 2, 1, std::nullopt},
                                  {5, 2, 2, std::nullopt}, {6, 3, 1, std::nullopt}, {7, 1, 0, std::nullopt}};
  EXPECT_EQ(impute_stage2_mean(recs), 2);
  EXPECT_NEAR(*recs[3].delta_y, 0.3, 1e-15);
  EXPECT_TRUE(recs[3].imputed);
  EXPECT_DOUBLE_EQ(*recs[4].delta_y, 0.7);
  EXPECT_TRUE(recs[5].missing());
  EXPECT_TRUE(recs[6].missing());
}

TEST(Impute, NoHistoryWarns) {
  std::vector<PatientRecord> recs{{1, 1, 1, 0.2}, {2, 2, 2, std::nullopt}};
  std::vector<std::string> warnings;
  EXPECT_EQ(impute_stage2_mean(recs, &warnings), 0);
  EXPECT_TRUE(recs[1].missing());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Impute, OnlyStageTwoTouched) {
  for (std::uint64_t s = 0; s < 100; ++s)
    for (int c : {1, 2, 3, 4, 5}) {
      auto recs = trial_records(s);
      Rng rng(s);
      apply_missingness(recs, missing_case(c), rng);
      const auto before = recs;
      const int n = impute_stage2_mean(recs);
      if (c == 1 || c == 2) EXPECT_EQ(n, 0);
      for (std::size_t i = 0; i < recs.size(); ++i) {
        if (before[i].stage != 2 || !before[i].missing()) EXPECT_EQ(recs[i], before[i]);
        if (recs[i].imputed) EXPECT_TRUE(recs[i].delta_y.has_value());
      }
    }
}

TEST(LoadPilot, ReadsAndRejects) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto good = (dir / "radapt_pilot_good.csv").string();
  write_text_file(good, "delta_y\n0.1\n-0.25\n");
  EXPECT_EQ(load_pilot(good), (std::vector<double>{0.1, -0.25}));
  const auto bad = (dir / "radapt_pilot_bad.csv").string();
  write_text_file(bad, "delta_y\n0.1\nabc\n");
  try {
    load_pilot(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  const auto empty = (dir / "radapt_pilot_empty.csv").string();
  write_text_file(empty, "delta_y\n");
  EXPECT_THROW(load_pilot(empty), ParseError);
  EXPECT_THROW(load_pilot((dir / "radapt_no_such_pilot.csv").string()), FileError);
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
  std::filesystem::remove(empty);
}
