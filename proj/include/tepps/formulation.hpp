#pragma once

// Lower-level market clearing in compact matrix form and its primal-dual
// single-level reformulation.
//
// Per scenario t the lower level is
//   min w'y  s.t.  P y <= r - K x   (mu >= 0),   E y = h   (lambda)
// over y = [generation, wind, branch flows, PST shifts, bus angles], all in
// per unit on the study base. x stacks the PST decisions (delta) followed by
// the prospective-line decisions (alpha).

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tepps/data_model.hpp"
#include "tepps/lp.hpp"
#include "tepps/milp.hpp"

namespace tepps {

enum class RowTag {
  kBalance,
  kLineFlow,
  kPstFlow,
  kReference,
  kPstAngleMax,
  kPstAngleMin,
  kDisjunctionUpper,
  kDisjunctionLower,
  kGenMax,
  kGenMin,
  kWindMax,
  kWindMin,
  kThermalMax,
  kThermalMin,
  kProspectiveMax,
  kProspectiveMin,
  kAngleMax,
  kAngleMin,
};

std::string to_string(RowTag tag);

enum class ColumnKind { kGeneration, kWind, kFlow, kPstShift, kAngle };

struct RowInfo {
  std::string name;
  RowTag tag;
  std::size_t entity;  // bus, branch, generator or wind-farm position
};

struct ColumnInfo {
  std::string name;
  ColumnKind kind;
  std::size_t entity;
};

struct ScenarioMatrices {
  SparseMatrix P;  // inequality rows x primal columns
  SparseMatrix K;  // inequality rows x candidates
  std::vector<double> r;
  SparseMatrix E;
  std::vector<double> h;
  std::vector<double> w;
  std::vector<RowInfo> inequality_rows;
  std::vector<RowInfo> equality_rows;
  std::vector<ColumnInfo> columns;

  // column offsets of each primal block
  std::size_t gen_offset = 0, wind_offset = 0, flow_offset = 0, pst_offset = 0, angle_offset = 0;

  std::size_t num_columns() const { return columns.size(); }
};

/// Number of candidate decisions: PSTs first, then prospective lines.
std::size_t num_candidates(const PlanningStudy& study);
std::vector<double> candidate_vector(const Plan& plan);
Plan plan_from_candidates(const PlanningStudy& study, const std::vector<double>& x);

/// A candidate whose own capital cost exceeds its budget can never be built.
std::vector<bool> affordable_candidates(const PlanningStudy& study);

ScenarioMatrices assemble_scenario_matrices(const PlanningStudy& study, std::size_t t);

/// Disjunctive constant 2*pi/x in per unit.
double big_m_for_line(const Branch& branch);

/// Lower-level LP for a fixed candidate vector.
LpProblem lower_level_lp(const ScenarioMatrices& sm, const std::vector<double>& x);

/// Consumer payment coefficient of every equality dual in M$ (nonzero on
/// balance rows only): hours * demand_pu * 1e-6.
std::vector<double> payment_coefficients(const PlanningStudy& study, const ScenarioMatrices& sm, std::size_t t);

struct BilinearTerm {
  int row;        // inequality row of the scenario
  int candidate;  // candidate position in x
  double coefficient;  // K entry
};

/// Coupled (row, candidate) pairs whose product x*mu appears in strong duality.
std::vector<BilinearTerm> bilinear_terms(const ScenarioMatrices& sm);

/// Dual stationarity rows P'mu + E'lambda = -w in the variables [mu; lambda].
struct DualSystem {
  SparseMatrix matrix;  // columns x (mu, lambda)
  std::vector<double> rhs;
  std::vector<std::string> names;
};

DualSystem build_dual_system(const ScenarioMatrices& sm);

/// Strong duality w'y + r'mu + h'lambda - sum K_rj (x_j mu_r) = 0, with the
/// bilinear products listed separately.
struct StrongDualityRow {
  std::vector<double> y_coefficients;
  std::vector<double> mu_coefficients;
  std::vector<double> lambda_coefficients;
  std::vector<BilinearTerm> bilinear;  // coefficient multiplies -x_j*mu_r
};

StrongDualityRow build_strong_duality_row(const ScenarioMatrices& sm);

/// Adds z replacing x*mu with z <= M x, z <= mu, z >= mu - M(1 - x), z >= 0.
/// Returns the column of z.
int linearize_bilinear(LpBuilder& builder, int x, int mu, double big_m);

struct ScenarioBlock {
  ScenarioMatrices sm;
  int y_offset = 0;
  int mu_offset = 0;
  int lambda_offset = 0;
  std::vector<int> z_column;  // per inequality row, -1 when not coupled
  std::vector<int> z_candidate;
  int strong_duality_row = 0;  // equality row index in the MILP
  double strong_duality_scale = 1.0;
};

struct SingleLevelMilp {
  MilpProblem milp;
  std::vector<int> candidate_columns;
  std::vector<bool> affordable;
  std::vector<ScenarioBlock> blocks;
  double dual_big_m = 0.0;
};

SingleLevelMilp build_single_level_milp(const PlanningStudy& study);
SingleLevelMilp build_single_level_milp(const PlanningStudy& study, double dual_big_m);

struct AuditReport {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double strong_duality_residual = 0.0;  // worst relative residual over scenarios
  double min_disjunction_slack = kInfinity;
  std::vector<std::string> mu_at_bound;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

inline constexpr double kAuditPrimalTolerance = 1e-8;
inline constexpr double kAuditDualTolerance = 1e-8;
inline constexpr double kAuditStrongDualityTolerance = 1e-6;

AuditReport audit_solution(const PlanningStudy& study, const SingleLevelMilp& model, const std::vector<double>& x);

struct ExtractedSolution {
  Plan plan;
  std::vector<ScenarioDispatch> dispatch;
  double investment_musd = 0.0;
  double payment_musd = 0.0;
  double objective_musd = 0.0;
};

ExtractedSolution extract_solution(const PlanningStudy& study, const SingleLevelMilp& model,
                                   const std::vector<double>& x);

struct PlanningOptions {
  double mipgap = 0.001;
  long node_limit = 0;
  double time_limit_s = 0.0;
  std::optional<Plan> initial_plan;
  bool escalate_big_m = true;
  std::function<void(const std::string&)> log;
};

struct PlanningResult {
  ExtractedSolution solution;
  MilpSolution milp;
  AuditReport audit;
  double dual_big_m_used = 0.0;
  int big_m_escalations = 0;
  std::size_t num_binaries = 0;
  std::size_t num_rows = 0;
  std::size_t num_columns = 0;
};

/// Builds and solves the single-level MILP, cleans up degenerate bilinear
/// duals and audits the result. Re-solves once at ten times the dual bound
/// if a bilinear dual sits at its bound.
PlanningResult plan_study(const PlanningStudy& study, const PlanningOptions& options = {});

}  // namespace tepps
