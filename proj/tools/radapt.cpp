// radapt: simulate, calibrate and conduct mapped BRAR trials.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "radapt/radapt.hpp"

namespace fs = std::filesystem;
using namespace radapt;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

// Configuration error detected by the CLI itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RADAPT_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("RADAPT_SEED is not an unsigned integer: '" + std::string(env) + "'");
  }
  return 1;
}

std::vector<double> parse_effects(const std::string& text) {
  std::vector<double> v;
  for (const auto& f : split_csv_line(text)) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(f, &used));
      if (used != f.size()) throw std::invalid_argument(f);
    } catch (const std::exception&) {
      throw UsageError("bad effect value '" + f + "' in scenario '" + text + "'");
    }
    if (!std::isfinite(v.back())) throw UsageError("scenario effects must be finite");
  }
  return v;
}

// "S1".."S9" (stratum A or B) or an explicit effect list "0,0,0.3".
std::vector<double> scenario_effects(const std::string& id, const std::string& stratum) {
  if (!id.empty() && id[0] == 'S') {
    const auto s = scenario(id);
    return stratum == "B" ? s.stratum_b : s.stratum_a;
  }
  return parse_effects(id);
}

struct ModelOptions {
  std::string pilot;
  double location = 0.0;
  double scale = kCalibratedScale;
  double shape = kDefaultShape;

  void add(CLI::App* app) {
    app->add_option("--location", location, "Control-arm mean of the parametric outcome model")->capture_default_str();
    app->add_option("--pilot", pilot, "Pilot CSV (column delta_y); enables bootstrap outcomes")->check(CLI::ExistingFile);
    app->add_option("--scale", scale, "Noise scale of the parametric outcome model")->capture_default_str();
    app->add_option("--shape", shape, "Log-normal shape of the parametric noise (0 = normal)")->capture_default_str();
  }

  OutcomeModel make(std::vector<double> effects) const {
    OutcomeModel m = pilot.empty() ? OutcomeModel::parametric(std::move(effects), scale, shape)
                                   : OutcomeModel::bootstrap(load_pilot(pilot), std::move(effects));
    if (pilot.empty()) m.location = location;
    m.validate();
    return m;
  }
};

struct PolicyOptions {
  bool policy_off = false;
  bool impute = false;

  void add(CLI::App* app) {
    app->add_flag("--no-policy", policy_off, "Disable the missing-data adaptation policy");
    app->add_flag("--impute", impute, "Impute missing stage-2 outcomes by the arm mean before interim 2");
  }

  MissingPolicy make() const {
    MissingPolicy p = policy_off ? MissingPolicy::off() : MissingPolicy{};
    p.impute_stage2_mean = impute;
    return p;
  }
};

fs::path ensure_dir(const std::string& out) {
  fs::path p(out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw FileError(out, "cannot create output directory");
  return p;
}

void check_effects(const TrialDesign& d, const std::vector<double>& effects) {
  if (effects.size() != d.num_arms())
    throw UsageError("scenario has " + std::to_string(effects.size()) + " effects but design " + d.name + " has " +
                     std::to_string(d.num_arms()) + " arms");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and conduct engine for mapped Bayesian response-adaptive trials"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Replicate designs and write oc_report.csv and adaptability.csv");
  std::vector<std::string> sim_designs;
  std::string sim_scenario = "S1", sim_stratum = "A", sim_out = ".";
  int sim_case = 0, sim_reps = 10000, sim_workers = 1;
  std::optional<std::uint64_t> sim_seed;
  bool sim_pooled = false;
  ModelOptions sim_model;
  PolicyOptions sim_policy;
  sim->add_option("--design", sim_designs, "Design JSON file or preset:<Name> (repeatable)")->required();
  sim->add_option("--scenario", sim_scenario, "Scenario S1..S9 or effect list such as 0,0,0.3")->capture_default_str();
  sim->add_option("--stratum", sim_stratum, "Stratum of an S-scenario to simulate")
      ->check(CLI::IsMember({"A", "B"}))
      ->capture_default_str();
  sim->add_option("--case", sim_case, "Missing-data case 0..5")->check(CLI::Range(0, 5))->capture_default_str();
  sim->add_option("--reps", sim_reps, "Number of replicates")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--seed", sim_seed, "Master seed (falls back to RADAPT_SEED, then 1)");
  sim->add_option("--workers", sim_workers, "Worker threads")->check(CLI::Range(1, 256))->capture_default_str();
  sim->add_option("--out", sim_out, "Output directory")->capture_default_str();
  sim->add_flag("--pooled", sim_pooled, "Also run both strata and write pooled.csv (S-scenarios only)");
  sim_model.add(sim);
  sim_policy.add(sim);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Trade-off of a mapping threshold over a grid; writes tradeoff.csv");
  std::string cal_design, cal_h0 = "S1", cal_h1 = "S2", cal_out = ".", cal_criterion = "euclidean";
  int cal_stage = 2, cal_reps = 10000, cal_workers = 1;
  double grid_lo = 0.33, grid_hi = 0.66, grid_step = 0.03;
  std::optional<std::uint64_t> cal_seed;
  ModelOptions cal_model;
  cal->add_option("--design", cal_design, "Mapped design JSON file or preset:<Name>")->required();
  cal->add_option("--stage", cal_stage, "Threshold to calibrate: 2 (p21) or 3 (p33)")
      ->check(CLI::IsMember({2, 3}))
      ->capture_default_str();
  cal->add_option("--grid-lo", grid_lo, "Lowest grid threshold")->capture_default_str();
  cal->add_option("--grid-hi", grid_hi, "Highest grid threshold")->capture_default_str();
  cal->add_option("--grid-step", grid_step, "Grid spacing")->capture_default_str();
  cal->add_option("--h0", cal_h0, "Null scenario")->capture_default_str();
  cal->add_option("--h1", cal_h1, "Alternative scenario")->capture_default_str();
  cal->add_option("--criterion", cal_criterion, "Selection rule")
      ->check(CLI::IsMember({"euclidean", "pareto"}))
      ->capture_default_str();
  cal->add_option("--reps", cal_reps, "Replicates per grid point and hypothesis")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cal->add_option("--seed", cal_seed, "Master seed (falls back to RADAPT_SEED, then 1)");
  cal->add_option("--workers", cal_workers, "Worker threads")->check(CLI::Range(1, 256))->capture_default_str();
  cal->add_option("--out", cal_out, "Output directory")->capture_default_str();
  cal_model.add(cal);

  // interim
  auto* itm = app.add_subcommand("interim", "Allocation recommendation from accrued trial data");
  std::string itm_design, itm_data, itm_out;
  int itm_stage = 2;
  std::optional<std::uint64_t> itm_seed;
  PolicyOptions itm_policy;
  itm->add_option("--design", itm_design, "Design JSON file or preset:<Name>")->required();
  itm->add_option("--data", itm_data, "Accrued data CSV: patient_id,stage,arm_label,delta_y (NA = missing)")
      ->required();
  itm->add_option("--stage", itm_stage, "Stage whose allocation is being set (2 or 3)")
      ->check(CLI::IsMember({2, 3}))
      ->capture_default_str();
  itm->add_option("--seed", itm_seed, "Seed for tie-breaking coins (falls back to RADAPT_SEED, then 1)");
  itm->add_option("--out", itm_out, "Write the audit log to this file");
  itm_policy.add(itm);

  // genlist
  auto* gen = app.add_subcommand("genlist", "Write a permuted-block randomisation list");
  std::string gen_design = "preset:MappedAlpha", gen_out = "randlist.csv";
  std::vector<std::string> gen_ratios;
  int gen_first_stage = 1;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--design", gen_design, "Design JSON file or preset:<Name> (arm labels)")->capture_default_str();
  gen->add_option("--ratio", gen_ratios, "Block ratio such as 2:3:1, one per stage (repeatable)")->required();
  gen->add_option("--first-stage", gen_first_stage, "Stage number of the first block")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "Seed (falls back to RADAPT_SEED, then 1)");
  gen->add_option("--out", gen_out, "Output CSV path")->capture_default_str();

  // report
  auto* rep = app.add_subcommand("report", "Merge oc_report CSV files into one comparison table");
  std::vector<std::string> rep_files;
  std::string rep_out;
  rep->add_option("files", rep_files, "Report CSV files")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", rep_out, "Write the merged table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) {
      const auto seed = resolve_seed(sim_seed);
      const auto policy = sim_policy.make();
      const auto missing = missing_case(sim_case);
      std::vector<OCReport> reports;
      std::vector<PooledReport> pooled;
      for (const auto& src : sim_designs) {
        const auto design = load_design(src);
        const auto effects = scenario_effects(sim_scenario, sim_stratum);
        check_effects(design, effects);
        ReplicateOptions opt{sim_reps, seed, sim_workers, sim_scenario};
        reports.push_back(replicate(design, sim_model.make(effects), missing, policy, opt));
        if (sim_pooled) {
          if (sim_scenario.empty() || sim_scenario[0] != 'S') throw UsageError("--pooled needs an S-scenario");
          const auto sc = scenario(sim_scenario);
          pooled.push_back(replicate_pooled(design, sim_model.make(sc.stratum_a), sim_model.make(sc.stratum_b),
                                            missing, policy, opt));
        }
      }
      const auto dir = ensure_dir(sim_out);
      std::string oc;
      for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i == 0 || oc_report_header(reports[i]) != oc_report_header(reports[0]))
          oc += oc_report_header(reports[i]) + "\n";
        oc += oc_report_row(reports[i]) + "\n";
      }
      write_text_file((dir / "oc_report.csv").string(), oc);
      write_text_file((dir / "adaptability.csv").string(), adaptability_csv(reports));
      if (!pooled.empty()) {
        std::string s;
        for (std::size_t i = 0; i < pooled.size(); ++i) {
          auto csv = pooled_csv(pooled[i]);
          if (i > 0) csv.erase(0, csv.find('\n') + 1);
          s += csv;
        }
        write_text_file((dir / "pooled.csv").string(), s);
      }
      std::cout << summary_table(reports);
      return kOk;
    }

    if (*cal) {
      const auto design = load_design(cal_design);
      const auto seed = resolve_seed(cal_seed);
      const auto h0 = scenario_effects(cal_h0, "A");
      const auto h1 = scenario_effects(cal_h1, "A");
      check_effects(design, h0);
      check_effects(design, h1);
      const auto grid = threshold_grid(grid_lo, grid_hi, grid_step);
      const auto res = calibrate_threshold(
          design, cal_stage, grid, cal_model.make(h0), cal_model.make(h1),
          ReplicateOptions{cal_reps, seed, cal_workers, cal_h0 + "/" + cal_h1},
          cal_criterion == "pareto" ? CalibrationCriterion::Pareto : CalibrationCriterion::EuclideanCorner);
      const auto dir = ensure_dir(cal_out);
      write_text_file((dir / "tradeoff.csv").string(), tradeoff_csv(res));
      std::cout << "stage " << cal_stage << " selected threshold " << fmt_double(res.selected, 4) << "\n";
      for (const auto& r : res.rows)
        std::cout << "  " << fmt_double(r.threshold, 4) << "  H0 " << fmt_double(r.metric_h0, 4) << "  H1 "
                  << fmt_double(r.metric_h1, 4) << (r.pareto ? "  pareto" : "") << "\n";
      return kOk;
    }

    if (*itm) {
      const auto design = load_design(itm_design);
      const auto data = load_accrued(itm_data, design);
      const auto rec = interim_recommendation(design, data, itm_stage, itm_policy.make(), resolve_seed(itm_seed));
      std::ostringstream log;
      const auto& in = rec.interim;
      log << "interim before stage " << itm_stage << "\n";
      for (std::size_t k = 0; k < design.num_arms(); ++k) {
        log << "  " << design.arms[k].label << ": n=" << in.counts.counts[k] << " posterior Beta("
            << fmt_double(in.posteriors[k].alpha, 0) << "," << fmt_double(in.posteriors[k].beta, 0)
            << ") pi=" << fmt_double(in.pi[k]);
        if (k > 0 && k - 1 < in.categories.size()) log << " category=" << to_string(in.categories[k - 1]);
        log << "\n";
      }
      for (const auto& o : in.overrides) log << "override: " << o << "\n";
      for (const auto& w : rec.log) log << "warning: " << w << "\n";
      if (in.ratio) log << "ratio " << to_string(*in.ratio) << "\n";
      else log << "no fixed ratio (unmapped design): allocate with pi\n";
      std::cout << log.str();
      if (!itm_out.empty()) write_text_file(itm_out, log.str());
      return kOk;
    }

    if (*gen) {
      const auto design = load_design(gen_design);
      Rng rng(resolve_seed(gen_seed));
      std::vector<RandomisationBlock> blocks;
      int stage = gen_first_stage;
      for (const auto& text : gen_ratios) {
        RatioVector r;
        try {
          r = parse_ratio(text);
        } catch (const InvalidInput& e) {
          throw UsageError(e.what());
        }
        if (r.size() != design.num_arms()) throw UsageError("ratio " + text + " does not match the design's arms");
        Rng block_rng = rng.split(static_cast<std::uint64_t>(stage));
        blocks.push_back(generate_block(r, block_rng, stage, design.arms));
        ++stage;
      }
      export_list(blocks, gen_out);
      std::cout << "wrote " << gen_out << "\n";
      return kOk;
    }

    if (*rep) {
      std::vector<CsvTable> tables;
      for (const auto& f : rep_files) tables.push_back(read_csv(f));
      const auto merged = merge_reports(tables);
      if (rep_out.empty()) std::cout << merged;
      else write_text_file(rep_out, merged);
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
