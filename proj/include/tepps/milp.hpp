#pragma once

// Best-first branch and bound over binary variables of an LP.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tepps/lp.hpp"

namespace tepps {

struct MilpProblem {
  LpProblem lp;
  std::vector<int> binaries;  // column indices restricted to {0, 1}
  std::vector<std::string> variable_names;
  std::vector<std::string> inequality_names;
  std::vector<std::string> equality_names;
  double objective_offset = 0.0;  // constant term, kept at zero by the assembler
  double mipgap = 0.001;

  bool is_binary(int column) const;
};

enum class MilpStatus { kOptimal, kInfeasible, kNodeLimit, kTimeLimit };

std::string to_string(MilpStatus status);

struct MilpOptions {
  double mipgap = 0.001;
  double integrality_tolerance = 1e-6;
  long node_limit = 0;        // 0 means unlimited
  double time_limit_s = 0.0;  // 0 means unlimited
  /// Binary values of a known feasible assignment, aligned with binaries.
  std::optional<std::vector<double>> initial_assignment;
  /// Try every single flip of each new incumbent.
  bool local_search = true;
  LpOptions lp;
  std::function<void(const std::string&)> log;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::kInfeasible;
  bool has_incumbent = false;
  std::vector<double> x;
  double objective = kNoIncumbent;
  double best_bound = -kNoIncumbent;
  double gap = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  LpSolution incumbent_lp;  // LP with the binaries fixed at the incumbent

  static constexpr double kNoIncumbent = 1e300;
};

/// Relative gap (incumbent - bound) / max(1, |incumbent|).
double relative_gap(double incumbent, double bound);

/// Solves the LP with every binary fixed at the rounded assignment.
LpSolution solve_fixed(const MilpProblem& milp, const std::vector<double>& assignment,
                       const LpOptions& options = {});

MilpSolution branch_and_bound(const MilpProblem& milp, const MilpOptions& options);

}  // namespace tepps
