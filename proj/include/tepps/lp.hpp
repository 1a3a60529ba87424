#pragma once

// Bounded-variable primal simplex with dual extraction.
//
//   min  c'x
//   s.t. A x <= b      (duals mu >= 0)
//        E x  = h      (duals lambda, free)
//        l <= x <= u
//
// Dual convention: reduced costs r = c + A'mu + E'lambda, with r >= 0 at a
// lower bound, r <= 0 at an upper bound and r = 0 for basic variables.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace tepps {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

struct LpProblem {
  std::vector<double> cost;
  SparseMatrix inequality;
  std::vector<double> inequality_rhs;
  SparseMatrix equality;
  std::vector<double> equality_rhs;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t num_variables() const { return cost.size(); }
  std::size_t num_inequalities() const { return inequality_rhs.size(); }
  std::size_t num_equalities() const { return equality_rhs.size(); }

  /// Throws std::invalid_argument on inconsistent dimensions or bounds.
  void check_dimensions() const;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string to_string(LpStatus status);

enum class VarState : std::uint8_t { kBasic, kAtLower, kAtUpper, kFree };

/// Simplex basis over structural columns followed by one logical per row
/// (inequality rows first, then equality rows).
struct Basis {
  std::vector<VarState> state;

  bool empty() const { return state.empty(); }
};

struct LpOptions {
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  long max_iterations = 0;  // 0 selects a size-based default
  int refactor_interval = 100;
  int degenerate_stall_limit = 200;
  bool scale = true;
  const Basis* warm_start = nullptr;
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::vector<double> inequality_duals;
  std::vector<double> equality_duals;
  std::vector<double> reduced_costs;
  long iterations = 0;
  Basis basis;
};

LpSolution simplex_solve(const LpProblem& problem, const LpOptions& options = {});

/// Optimality certificate residuals of a solution, all in absolute terms on
/// rows normalized by their largest coefficient.
struct LpCertificate {
  double primal_residual = 0.0;     // bound and row violations
  double dual_residual = 0.0;       // sign violations of mu and reduced costs
  double complementarity = 0.0;     // max |dual * slack|
  double objective_gap = 0.0;       // |primal - dual| / max(1, |primal|)
  double dual_objective = 0.0;
};

LpCertificate certify(const LpProblem& problem, const LpSolution& solution);

/// Row-major helper for assembling problems row by row.
class LpBuilder {
 public:
  int add_variable(double lower, double upper, double cost = 0.0);
  void set_cost(int var, double cost);
  void set_bounds(int var, double lower, double upper);
  /// sum(coefficients * vars) <= rhs
  int add_inequality(const std::vector<std::pair<int, double>>& terms, double rhs);
  int add_equality(const std::vector<std::pair<int, double>>& terms, double rhs);

  int num_variables() const { return static_cast<int>(cost_.size()); }
  int num_inequalities() const { return static_cast<int>(ineq_rhs_.size()); }
  int num_equalities() const { return static_cast<int>(eq_rhs_.size()); }
  double lower(int var) const { return lower_[static_cast<std::size_t>(var)]; }
  double upper(int var) const { return upper_[static_cast<std::size_t>(var)]; }

  LpProblem build() const;

 private:
  std::vector<double> cost_, lower_, upper_, ineq_rhs_, eq_rhs_;
  std::vector<Triplet> ineq_, eq_;
};

}  // namespace tepps
