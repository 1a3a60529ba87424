#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tepps/data_model.hpp"
#include "tepps/scenarios.hpp"

namespace tepps {

// ---------------------------------------------------------------------------
// MATPOWER case subset: the DC-relevant columns of bus/gen/branch/gencost.

struct RawBus {
  int id = 0;
  int type = 1;  // 3 marks the reference bus
  double load_mw = 0.0;

  bool operator==(const RawBus&) const = default;
};

struct RawGenerator {
  int bus = 0;
  double p_min_mw = 0.0;
  double p_max_mw = 0.0;
  /// Polynomial cost coefficients, highest order first, as in gencost model 2.
  std::vector<double> cost_coefficients;

  bool operator==(const RawGenerator&) const = default;
};

struct RawBranch {
  int from_bus = 0;
  int to_bus = 0;
  double reactance_pu = 0.0;
  double rating_mva = 0.0;

  bool operator==(const RawBranch&) const = default;
};

struct RawCaseFile {
  double mva_base = 100.0;
  std::vector<RawBus> buses;
  std::vector<RawGenerator> generators;
  std::vector<RawBranch> branches;
  /// Ignored sections and skipped rows, for the caller to report.
  std::vector<std::string> warnings;

  bool operator==(const RawCaseFile& other) const {
    return mva_base == other.mva_base && buses == other.buses && generators == other.generators &&
           branches == other.branches;
  }
};

/// Linear cost coefficient used as the marginal cost. Falls back to the
/// marginal cost at p_max/2 when only a quadratic term is present.
double marginal_cost(const RawGenerator& gen);

RawCaseFile parse_matpower(std::string_view text);
RawCaseFile read_matpower_file(const std::string& path);
/// Emits a MATPOWER case holding exactly the supported subset.
std::string print_matpower(const RawCaseFile& raw);

RawCaseFile apply_modifiers(RawCaseFile raw, double load_scale, double gen_scale,
                            double thermal_derate);

// ---------------------------------------------------------------------------
// Study assembly

struct ProspectiveLineSpec {
  int from_bus = 0;
  int to_bus = 0;
  double reactance_pu = 0.0;
  double rating_mva = 0.0;
  double invest_cost_musd = 0.0;

  bool operator==(const ProspectiveLineSpec&) const = default;
};

struct PstCandidateSpec {
  std::string branch_id;  // id of an existing branch, e.g. "L5"
  double angle_min_rad = 0.0;
  double angle_max_rad = 0.0;

  bool operator==(const PstCandidateSpec&) const = default;
};

struct WindFarmSpec {
  int bus = 0;
  double capacity_mw = 0.0;
  ProfileCf profile;

  bool operator==(const WindFarmSpec&) const = default;
};

struct Budgets {
  double pst_musd = 0.0;
  double line_musd = 0.0;

  bool operator==(const Budgets&) const = default;
};

/// Everything layered on top of a raw case to form a study.
struct ExpansionOptions {
  std::vector<ProspectiveLineSpec> prospective_lines;
  std::vector<PstCandidateSpec> pst_candidates;
  std::vector<WindFarmSpec> wind_farms;
  Budgets budgets;
  Economics economics;
  double dual_big_m = 1e5;

  bool operator==(const ExpansionOptions&) const = default;
};

/// Existing branches get ids "L1".."Ln" in case order, prospective lines
/// "P1".."Pm", generators "G1".., loads "D<bus>", wind farms "W<bus>".
/// PST investment costs follow from the branch rating and the PST unit cost.
PlanningStudy assemble_study(const RawCaseFile& raw, const std::vector<ScenarioRow>& scenarios,
                             const ExpansionOptions& options);

NetworkCase network_from_case(const RawCaseFile& raw);

// ---------------------------------------------------------------------------
// Native study format (JSON text with schema_version).

inline constexpr int kStudySchemaVersion = 1;

std::string write_study(const PlanningStudy& study);
PlanningStudy read_study(std::string_view text);
void write_study_file(const PlanningStudy& study, const std::string& path);
PlanningStudy read_study_file(const std::string& path);

/// Network-only document produced by ingestion.
std::string write_network(const NetworkCase& network, double mva_base);
NetworkCase read_network(std::string_view text, double* mva_base = nullptr);

ExpansionOptions read_expansion_options(std::string_view text);
std::string write_expansion_options(const ExpansionOptions& options);

std::string write_plan(const Plan& plan, const PlanningStudy& study);
Plan read_plan(std::string_view text, const PlanningStudy& study);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace tepps
