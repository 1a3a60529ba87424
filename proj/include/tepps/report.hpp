#pragma once

// Result tables: a Table-III-shaped summary row, LMPs per bus and scenario,
// and the dispatch of every scenario.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tepps/data_model.hpp"

namespace tepps {

struct SolveStats {
  std::string method;  // "milp", "oracle" or "evaluate"
  long nodes = 0;
  double gap = 0.0;
  double dual_big_m = 0.0;
  std::optional<double> solve_time_s;  // left empty for byte-stable output
};

struct SummaryRow {
  std::string case_name;
  double line_investment_musd = 0.0;
  double pst_investment_musd = 0.0;
  double consumer_payment_musd = 0.0;
  double objective_musd = 0.0;
  std::vector<double> curtailment_mwh;          // per wind farm
  std::vector<double> curtailment_display_mmwh;  // same in 1e6 MWh
  double penetration_pct = 0.0;
  std::optional<double> solve_time_s;

  bool operator==(const SummaryRow&) const = default;
};

struct DispatchRow {
  int scenario = 0;  // 1-based
  std::string kind;  // generator, wind, flow, pst_angle, angle
  std::string id;
  double value = 0.0;  // MW or rad

  bool operator==(const DispatchRow&) const = default;
};

struct ReportBundle {
  std::vector<std::string> built_psts;   // branch labels "from-to"
  std::vector<std::string> built_lines;
  SummaryRow summary;
  std::vector<std::string> wind_farms;
  std::vector<std::string> buses;
  std::vector<std::vector<double>> lmp;  // bus x scenario, $/MWh
  std::vector<DispatchRow> dispatch;
  std::vector<int> degenerate_scenarios;
  std::string method;
  long nodes = 0;
  double gap = 0.0;
  double dual_big_m = 0.0;

  bool operator==(const ReportBundle&) const = default;
};

inline constexpr int kReportSchemaVersion = 1;

std::string branch_label(const PlanningStudy& study, std::size_t branch);

ReportBundle build_report(const PlanningStudy& study, const PlanReport& report, const SolveStats& stats,
                          std::string case_name = "case");

enum class ReportFormat { kCsv, kJson };

/// CSV writes the summary, LMP and dispatch tables one after another, each
/// with its own header and separated by a blank line.
void write_report(const ReportBundle& bundle, ReportFormat format, std::ostream& out);
std::string write_report(const ReportBundle& bundle, ReportFormat format);

std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string lmp_csv(const ReportBundle& bundle);
std::string dispatch_csv(const ReportBundle& bundle);

ReportBundle read_report_json(std::string_view text);

struct LmpPair {
  std::string bus;
  int scenario = 0;  // 1-based
  double lmp_a = 0.0;
  double lmp_b = 0.0;

  double difference() const { return lmp_b - lmp_a; }
};

/// Per-bus LMP pairs for the selected 1-based scenarios.
std::vector<LmpPair> lmp_comparison(const ReportBundle& a, const ReportBundle& b, const std::vector<int>& scenarios);
std::string lmp_comparison_csv(const std::vector<LmpPair>& pairs);

}  // namespace tepps
