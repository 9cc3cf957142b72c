#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "radapt/csv.hpp"
#include "radapt/engine.hpp"

namespace radapt {

namespace detail {

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += v[i];
  }
  return s;
}

inline std::vector<std::string> report_keys(const OCReport& r) {
  return {r.design, r.scenario, std::to_string(r.case_id), r.policy, std::to_string(r.n_reps),
          std::to_string(r.master_seed)};
}

inline const std::vector<std::string> kReportKeyHeader{"design", "scenario", "case", "policy", "n_reps", "master_seed"};

}  // namespace detail

inline std::string oc_report_header(const OCReport& r) {
  auto h = detail::kReportKeyHeader;
  for (const auto& x : {"power", "type1", "reject_any", "reject_recommended"}) h.emplace_back(x);
  for (std::size_t k = 1; k < r.arm_labels.size(); ++k) h.push_back("reject_" + r.arm_labels[k]);
  for (const auto& l : r.arm_labels) h.push_back("recommend_" + l);
  for (const auto& l : r.arm_labels) {
    h.push_back("alloc_mean_" + l);
    h.push_back("alloc_sd_" + l);
  }
  return detail::join(h);
}

inline std::string oc_report_row(const OCReport& r) {
  auto v = detail::report_keys(r);
  for (double x : {r.power, r.type1, r.reject_any, r.reject_recommended}) v.push_back(fmt_double(x));
  for (std::size_t k = 1; k < r.arm_labels.size(); ++k) v.push_back(fmt_double(r.reject_rate[k]));
  for (double x : r.recommend_rate) v.push_back(fmt_double(x));
  for (std::size_t k = 0; k < r.arm_labels.size(); ++k) {
    v.push_back(fmt_double(r.alloc_mean[k]));
    v.push_back(fmt_double(r.alloc_sd[k]));
  }
  return detail::join(v);
}

inline std::string adaptability_header() {
  auto h = detail::kReportKeyHeader;
  for (const auto& x : {"stage2_deviate", "stage2_favour_best", "stage3_favour_disfavour", "stage3_favour_best",
                        "stage3_drop_keep", "stage3_keep_best"})
    h.emplace_back(x);
  return detail::join(h);
}

inline std::string adaptability_row(const OCReport& r) {
  auto v = detail::report_keys(r);
  for (double x : {r.stage2_deviate, r.stage2_favour_best, r.stage3_favour_disfavour, r.stage3_favour_best,
                   r.stage3_drop_keep, r.stage3_keep_best})
    v.push_back(fmt_double(x));
  return detail::join(v);
}

// Several reports sharing one arm set, one row each.
inline std::string oc_report_csv(std::span<const OCReport> reports) {
  if (reports.empty()) throw InvalidInput("no reports");
  std::string s = oc_report_header(reports.front()) + "\n";
  for (const auto& r : reports) s += oc_report_row(r) + "\n";
  return s;
}

inline std::string adaptability_csv(std::span<const OCReport> reports) {
  std::string s = adaptability_header() + "\n";
  for (const auto& r : reports) s += adaptability_row(r) + "\n";
  return s;
}

inline std::string tradeoff_csv(const CalibrationResult& c) {
  std::string s = "threshold,metric_H0,metric_H1,distance,pareto,selected\n";
  for (const auto& r : c.rows) {
    s += fmt_double(r.threshold, 4) + "," + fmt_double(r.metric_h0) + "," + fmt_double(r.metric_h1) + "," +
         fmt_double(r.distance) + "," + (r.pareto ? "1" : "0") + "," + (r.threshold == c.selected ? "1" : "0") + "\n";
  }
  return s;
}

inline std::string pooled_csv(const PooledReport& p) {
  std::string s = "design,scenario,n_reps,master_seed,arm,standalone_A,standalone_B,standalone_mean,pooled\n";
  for (std::size_t k = 1; k < p.arm_labels.size(); ++k) {
    s += p.design + "," + p.scenario + "," + std::to_string(p.n_reps) + "," + std::to_string(p.master_seed) + "," +
         p.arm_labels[k] + "," + fmt_double(p.standalone_a[k]) + "," + fmt_double(p.standalone_b[k]) + "," +
         fmt_double(p.standalone(k)) + "," + fmt_double(p.pooled[k]) + "\n";
  }
  return s;
}

/// Concatenates CSV tables. The output header is the union of the input
/// headers in order of first appearance; absent cells are left empty.
inline std::string merge_reports(std::span<const CsvTable> tables) {
  if (tables.empty()) throw InvalidInput("no report files to merge");
  std::vector<std::string> header;
  for (const auto& t : tables)
    for (const auto& h : t.header)
      if (std::find(header.begin(), header.end(), h) == header.end()) header.push_back(h);
  std::string s = detail::join(header) + "\n";
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      std::vector<std::string> out;
      out.reserve(header.size());
      for (const auto& h : header) {
        const auto c = t.column(h);
        out.push_back(c < 0 ? std::string() : row[static_cast<std::size_t>(c)]);
      }
      s += detail::join(out) + "\n";
    }
  }
  return s;
}

// Fixed-width console summary.
inline std::string summary_table(std::span<const OCReport> reports) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %-5s %-4s %8s %8s %10s %10s %10s\n", "design", "scen", "case", "power",
                "type1", "alloc_C", "sd_C", "s2_dev");
  os << buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-18s %-5s %-4d %8s %8s %10s %10s %10s\n", r.design.c_str(), r.scenario.c_str(),
                  r.case_id, fmt_double(r.power, 3).c_str(), fmt_double(r.type1, 3).c_str(),
                  fmt_double(r.alloc_mean[0], 3).c_str(), fmt_double(r.alloc_sd[0], 3).c_str(),
                  fmt_double(r.stage2_deviate, 3).c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace radapt
