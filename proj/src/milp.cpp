#include "tepps/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <set>

#include <fmt/format.h>

#include "tepps/data_model.hpp"
#include "tepps/errors.hpp"

namespace tepps {

namespace {

struct Node {
  double bound = 0.0;
  long id = 0;
  std::vector<signed char> fixing;  // -1 free, 0 or 1 fixed
  std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
  bool operator()(const std::unique_ptr<Node>& a, const std::unique_ptr<Node>& b) const {
    if (a->bound != b->bound) return a->bound < b->bound;
    return a->id < b->id;
  }
};

void apply_fixing(const MilpProblem& milp, const std::vector<signed char>& fixing, LpProblem& work) {
  for (std::size_t b = 0; b < milp.binaries.size(); ++b) {
    const auto j = static_cast<std::size_t>(milp.binaries[b]);
    if (fixing[b] < 0) {
      work.lower[j] = std::max(0.0, milp.lp.lower[j]);
      work.upper[j] = std::min(1.0, milp.lp.upper[j]);
    } else {
      work.lower[j] = work.upper[j] = fixing[b];
    }
  }
}

}  // namespace

bool MilpProblem::is_binary(int column) const {
  return std::find(binaries.begin(), binaries.end(), column) != binaries.end();
}

std::string to_string(MilpStatus status) {
  switch (status) {
    case MilpStatus::kOptimal: return "optimal";
    case MilpStatus::kInfeasible: return "infeasible";
    case MilpStatus::kNodeLimit: return "node limit";
    case MilpStatus::kTimeLimit: return "time limit";
  }
  return "unknown";
}

double relative_gap(double incumbent, double bound) {
  return (incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

LpSolution solve_fixed(const MilpProblem& milp, const std::vector<double>& assignment, const LpOptions& options) {
  if (assignment.size() != milp.binaries.size()) throw Error("solve_fixed: assignment size mismatch");
  LpProblem work = milp.lp;
  std::vector<signed char> fixing(assignment.size());
  for (std::size_t b = 0; b < assignment.size(); ++b) fixing[b] = assignment[b] >= 0.5 ? 1 : 0;
  apply_fixing(milp, fixing, work);
  return simplex_solve(work, options);
}

MilpSolution branch_and_bound(const MilpProblem& milp, const MilpOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t nb = milp.binaries.size();
  for (int j : milp.binaries)
    if (j < 0 || static_cast<std::size_t>(j) >= milp.lp.num_variables())
      throw Error(fmt::format("branch_and_bound: binary index {} out of range", j));
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  MilpSolution result;
  LpProblem work = milp.lp;

  auto accept = [&](LpSolution&& fixed_lp) {
    if (fixed_lp.status != LpStatus::kOptimal || fixed_lp.objective >= result.objective) return false;
    result.has_incumbent = true;
    result.objective = fixed_lp.objective;
    result.x = fixed_lp.x;
    for (int j : milp.binaries) result.x[j] = std::round(result.x[j]);
    result.incumbent_lp = std::move(fixed_lp);
    return true;
  };

  // first-improvement search over single flips of the incumbent binaries
  auto polish = [&] {
    if (!options.local_search) return;
    for (bool improved = true; improved;) {
      improved = false;
      std::vector<double> assignment(nb);
      for (std::size_t b = 0; b < nb; ++b) assignment[b] = result.x[static_cast<std::size_t>(milp.binaries[b])];
      const Basis warm = result.incumbent_lp.basis;
      for (std::size_t b = 0; b < nb && !improved; ++b) {
        const auto j = static_cast<std::size_t>(milp.binaries[b]);
        if (assignment[b] < 0.5 ? milp.lp.upper[j] < 1.0 : milp.lp.lower[j] > 0.0) continue;
        if (options.time_limit_s > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > options.time_limit_s)
          return;
        auto flipped = assignment;
        flipped[b] = 1.0 - flipped[b];
        LpOptions fo = options.lp;
        fo.warm_start = &warm;
        auto lp = solve_fixed(milp, flipped, fo);
        result.lp_iterations += lp.iterations;
        const double previous = result.objective;
        if (lp.status == LpStatus::kOptimal && lp.objective < previous - 1e-9 * std::max(1.0, std::abs(previous)) &&
            accept(std::move(lp))) {
          log(fmt::format("flip {}: incumbent {:.10g}", b, result.objective));
          improved = true;
        }
      }
    }
  };

  if (options.initial_assignment) {
    auto lp = solve_fixed(milp, *options.initial_assignment, options.lp);
    result.lp_iterations += lp.iterations;
    if (accept(std::move(lp))) {
      log(fmt::format("initial incumbent {:.10g}", result.objective));
      polish();
    }
  }

  std::set<std::unique_ptr<Node>, NodeOrder> open;
  long next_id = 0;
  {
    auto root = std::make_unique<Node>();
    root->bound = -kInfinity;
    root->id = next_id++;
    root->fixing.assign(nb, -1);
    open.insert(std::move(root));
  }

  // prune threshold: nodes whose bound cannot improve the incumbent by more than the gap target
  // lowest bound among nodes discarded by the gap tolerance
  double pruned_bound = kInfinity;
  auto prunable = [&](double bound) {
    if (!result.has_incumbent) return false;
    const double tol = std::max(options.mipgap, 1e-9) * std::max(1.0, std::abs(result.objective));
    if (bound < result.objective - tol) return false;
    pruned_bound = std::min(pruned_bound, bound);
    return true;
  };

  result.status = MilpStatus::kOptimal;
  while (!open.empty()) {
    const double global_bound = (*open.begin())->bound;
    if (result.has_incumbent &&
        relative_gap(result.objective, std::min(global_bound, pruned_bound)) <= options.mipgap)
      break;
    if (options.node_limit > 0 && result.nodes >= options.node_limit) {
      result.status = MilpStatus::kNodeLimit;
      break;
    }
    if (options.time_limit_s > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > options.time_limit_s) {
      result.status = MilpStatus::kTimeLimit;
      break;
    }

    auto handle = open.extract(open.begin());
    std::unique_ptr<Node> node = std::move(handle.value());
    if (prunable(node->bound)) continue;
    ++result.nodes;

    apply_fixing(milp, node->fixing, work);
    LpOptions lpo = options.lp;
    lpo.warm_start = node->basis.get();
    LpSolution relax = simplex_solve(work, lpo);
    result.lp_iterations += relax.iterations;
    if (relax.status == LpStatus::kUnbounded)
      throw NumericalError("branch_and_bound: LP relaxation is unbounded (missing dual bound?)");
    if (relax.status == LpStatus::kIterationLimit)
      throw NumericalError("branch_and_bound: LP iteration limit reached at a node");
    if (relax.status == LpStatus::kInfeasible || prunable(relax.objective)) continue;

    int branch = -1;
    double most = options.integrality_tolerance;
    for (std::size_t b = 0; b < nb; ++b) {
      const double v = relax.x[static_cast<std::size_t>(milp.binaries[b])];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > most) {  // strict: ties keep the lowest index
        most = frac;
        branch = static_cast<int>(b);
      }
    }

    if (branch < 0) {
      std::vector<double> assignment(nb);
      for (std::size_t b = 0; b < nb; ++b) assignment[b] = relax.x[static_cast<std::size_t>(milp.binaries[b])];
      LpOptions fo = options.lp;
      fo.warm_start = &relax.basis;
      auto fixed = solve_fixed(milp, assignment, fo);
      result.lp_iterations += fixed.iterations;
      if (accept(std::move(fixed))) {
        log(fmt::format("node {}: incumbent {:.10g}", result.nodes, result.objective));
        polish();
      }
      continue;
    }

    auto basis = std::make_shared<const Basis>(std::move(relax.basis));
    for (signed char side : {0, 1}) {
      auto child = std::make_unique<Node>();
      child->bound = relax.objective;
      child->id = next_id++;
      child->fixing = node->fixing;
      child->fixing[static_cast<std::size_t>(branch)] = side;
      child->basis = basis;
      open.insert(std::move(child));
    }
  }

  if (!result.has_incumbent) {
    if (result.status == MilpStatus::kOptimal) result.status = MilpStatus::kInfeasible;
    result.best_bound = open.empty() ? kInfinity : (*open.begin())->bound;
    result.gap = kInfinity;
    return result;
  }
  result.best_bound = std::min(result.objective, pruned_bound);
  if (!open.empty()) result.best_bound = std::min(result.best_bound, (*open.begin())->bound);
  result.gap = std::max(0.0, relative_gap(result.objective, result.best_bound));
  log(fmt::format("branch and bound: {} nodes, objective {:.10g}, bound {:.10g}, gap {:.3g}", result.nodes,
                  result.objective, result.best_bound, result.gap));
  return result;
}

}  // namespace tepps
