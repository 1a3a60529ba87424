#pragma once

// Fixed-plan market clearing and brute-force plan enumeration.

#include <cstddef>
#include <vector>

#include "tepps/data_model.hpp"
#include "tepps/formulation.hpp"
#include "tepps/lp.hpp"

namespace tepps {

/// Duals of one scenario in the matrix units of ScenarioMatrices.
struct DualSolution {
  std::vector<double> lambda;  // per equality row
  std::vector<double> mu;      // per inequality row, >= 0
};

struct ScenarioClearing {
  LpSolution primal;
  DualSolution duals;  // payment-minimizing among all optimal duals
  double payment_musd = 0.0;
  bool degenerate = false;  // simplex duals priced differently
};

/// Solves the lower level for a fixed candidate vector and selects the
/// optimistic duals: minimum payment over dual feasibility plus strong
/// duality at the primal optimum. Throws InfeasibleError naming the scenario.
ScenarioClearing clear_scenario(const PlanningStudy& study, const ScenarioMatrices& sm, std::size_t t,
                                const std::vector<double>& x);

PlanReport evaluate_plan(const PlanningStudy& study, const Plan& plan);

struct OracleResult {
  Plan plan;
  double objective_musd = 0.0;
  PlanReport report;
  std::size_t plans_enumerated = 0;
  std::size_t plans_feasible = 0;
};

inline constexpr std::size_t kEnumerationGuard = 22;

/// Evaluates every budget-feasible plan and returns the cheapest; ties keep
/// the first plan in enumeration order.
OracleResult enumerate_oracle(const PlanningStudy& study, std::size_t guard = kEnumerationGuard);

}  // namespace tepps
