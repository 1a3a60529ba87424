#include "tepps/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tepps/costs.hpp"
#include "tepps/errors.hpp"

namespace tepps {

namespace {

struct PreparedStudy {
  std::vector<ScenarioMatrices> matrices;
};

PreparedStudy prepare(const PlanningStudy& study) {
  require_valid(study);
  if (study.scenarios.empty()) throw ValidationError("study", "at least one scenario is required");
  PreparedStudy p;
  for (std::size_t t = 0; t < study.scenarios.size(); ++t) p.matrices.push_back(assemble_scenario_matrices(study, t));
  return p;
}

// Dual optimal face through complementary slackness with the primal optimum:
// mu vanishes on every row with clear slack.
LpSolution complementary_dual_lp(const ScenarioMatrices& sm, const std::vector<double>& rhs,
                                 const std::vector<double>& y, const std::vector<double>& pay) {
  const std::size_t mi = sm.r.size(), me = sm.h.size();
  const auto dual = build_dual_system(sm);
  LpProblem lp;
  lp.cost.assign(mi + me, 0.0);
  for (std::size_t i = 0; i < me; ++i) lp.cost[mi + i] = pay[i];
  lp.lower.assign(mi + me, -kInfinity);
  lp.upper.assign(mi + me, kInfinity);
  const Eigen::VectorXd py = sm.P * Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  for (std::size_t r = 0; r < mi; ++r) {
    lp.lower[r] = 0.0;
    if (rhs[r] - py[static_cast<Eigen::Index>(r)] > 1e-7 * (1.0 + std::abs(rhs[r]))) lp.upper[r] = 0.0;
  }
  lp.equality = dual.matrix;
  lp.equality_rhs = dual.rhs;
  lp.inequality.resize(0, static_cast<int>(mi + me));
  return simplex_solve(lp);
}

LpSolution optimistic_dual_lp(const ScenarioMatrices& sm, const std::vector<double>& rhs, double z_star,
                              const std::vector<double>& pay, double eps) {
  const std::size_t mi = sm.r.size(), me = sm.h.size();
  const auto dual = build_dual_system(sm);
  LpProblem lp;
  lp.cost.assign(mi + me, 0.0);
  for (std::size_t i = 0; i < me; ++i) lp.cost[mi + i] = pay[i];
  lp.lower.assign(mi + me, -kInfinity);
  lp.upper.assign(mi + me, kInfinity);
  std::fill(lp.lower.begin(), lp.lower.begin() + static_cast<std::ptrdiff_t>(mi), 0.0);
  lp.equality = dual.matrix;
  lp.equality_rhs = dual.rhs;
  // dual objective >= z*:  sum (r - Kx) mu + h lambda <= -z* + eps
  std::vector<Triplet> trips;
  for (std::size_t r = 0; r < mi; ++r)
    if (rhs[r] != 0.0) trips.emplace_back(0, static_cast<int>(r), rhs[r]);
  for (std::size_t i = 0; i < me; ++i)
    if (sm.h[i] != 0.0) trips.emplace_back(0, static_cast<int>(mi + i), sm.h[i]);
  lp.inequality.resize(1, static_cast<int>(mi + me));
  lp.inequality.setFromTriplets(trips.begin(), trips.end());
  lp.inequality.makeCompressed();
  lp.inequality_rhs = {-z_star + eps};
  return simplex_solve(lp);
}

PlanReport evaluate_prepared(const PlanningStudy& study, const PreparedStudy& prep, const Plan& plan) {
  const auto& net = study.network;
  const double base = study.mva_base;
  const auto inv = plan_investment(plan, study);
  if (!inv.within_budget()) throw ValidationError("plan", "exceeds the investment budget");
  const auto x = candidate_vector(plan);

  PlanReport rep;
  rep.plan = plan;
  rep.line_investment_musd = inv.line_annualized_musd;
  rep.pst_investment_musd = inv.pst_annualized_musd;
  rep.curtailment_mwh.assign(net.wind_farms.size(), 0.0);
  double wind_energy = 0.0, demand_energy = 0.0;

  for (std::size_t t = 0; t < study.scenarios.size(); ++t) {
    const auto& sm = prep.matrices[t];
    const auto& scen = study.scenarios[t];
    auto c = clear_scenario(study, sm, t, x);
    rep.consumer_payment_musd += c.payment_musd;
    if (c.degenerate) rep.degenerate_scenarios.push_back(static_cast<int>(t) + 1);

    ScenarioDispatch d;
    const auto& y = c.primal.x;
    for (std::size_t n = 0; n < net.generators.size(); ++n) d.generator_mw.push_back(y[sm.gen_offset + n] * base);
    for (std::size_t w = 0; w < net.wind_farms.size(); ++w) {
      const double mw = y[sm.wind_offset + w] * base;
      d.wind_mw.push_back(mw);
      rep.curtailment_mwh[w] += scen.hours * (net.wind_farms[w].capacity_mw * scen.wind_cf[w] - mw);
      wind_energy += scen.hours * mw;
    }
    for (std::size_t k = 0; k < net.branches.size(); ++k) d.flow_mw.push_back(y[sm.flow_offset + k] * base);
    for (std::size_t p = 0; p < plan.pst_built.size(); ++p) {
      d.pst_shift_rad.push_back(y[sm.pst_offset + p]);
      d.pst_angle_rad.push_back(plan.pst_built[p] ? y[sm.pst_offset + p] : 0.0);
    }
    for (std::size_t i = 0; i < net.buses.size(); ++i) d.angle_rad.push_back(y[sm.angle_offset + i]);
    d.lmp.assign(net.buses.size(), 0.0);
    for (std::size_t r = 0; r < sm.h.size(); ++r)
      if (sm.equality_rows[r].tag == RowTag::kBalance) d.lmp[sm.equality_rows[r].entity] = c.duals.lambda[r] / base;
    for (double dm : bus_demand_mw(study, t)) demand_energy += scen.hours * dm;
    rep.dispatch.push_back(std::move(d));
  }
  rep.penetration_pct = demand_energy > 0.0 ? 100.0 * wind_energy / demand_energy : 0.0;
  rep.objective_musd = rep.line_investment_musd + rep.pst_investment_musd + rep.consumer_payment_musd;
  return rep;
}

}  // namespace

ScenarioClearing clear_scenario(const PlanningStudy& study, const ScenarioMatrices& sm, std::size_t t,
                                const std::vector<double>& x) {
  const LpProblem lp = lower_level_lp(sm, x);
  ScenarioClearing c;
  c.primal = simplex_solve(lp);
  if (c.primal.status == LpStatus::kInfeasible)
    throw InfeasibleError(fmt::format("scenario {}: market clearing is infeasible for this plan", t + 1),
                          static_cast<int>(t) + 1);
  if (c.primal.status != LpStatus::kOptimal)
    throw NumericalError(fmt::format("scenario {}: market clearing ended {}", t + 1, to_string(c.primal.status)));

  const auto pay = payment_coefficients(study, sm, t);
  double simplex_payment = 0.0;
  for (std::size_t i = 0; i < pay.size(); ++i) simplex_payment += pay[i] * c.primal.equality_duals[i];

  const double z = c.primal.objective;
  LpSolution dual = complementary_dual_lp(sm, lp.inequality_rhs, c.primal.x, pay);
  const auto feasible_payment = [&](const LpSolution& d) {
    if (d.status != LpStatus::kOptimal) return false;
    double dual_objective = 0.0;
    for (std::size_t r = 0; r < sm.r.size(); ++r) dual_objective -= lp.inequality_rhs[r] * d.x[r];
    for (std::size_t i = 0; i < sm.h.size(); ++i) dual_objective -= sm.h[i] * d.x[sm.r.size() + i];
    return std::abs(dual_objective - z) <= 1e-7 * (1.0 + std::abs(z));
  };
  if (!feasible_payment(dual)) {
    for (double rel : {1e-9, 1e-7}) {
      dual = optimistic_dual_lp(sm, lp.inequality_rhs, z, pay, rel * (1.0 + std::abs(z)));
      if (dual.status == LpStatus::kOptimal) break;
    }
  }
  const std::size_t mi = sm.r.size();
  if (dual.status == LpStatus::kOptimal) {
    c.duals.mu.assign(dual.x.begin(), dual.x.begin() + static_cast<std::ptrdiff_t>(mi));
    c.duals.lambda.assign(dual.x.begin() + static_cast<std::ptrdiff_t>(mi), dual.x.end());
    c.payment_musd = dual.objective;
  } else if (dual.status == LpStatus::kUnbounded) {
    throw NumericalError(fmt::format("scenario {}: optimal dual set is unbounded in the payment direction", t + 1));
  } else {
    c.duals.mu = c.primal.inequality_duals;
    c.duals.lambda = c.primal.equality_duals;
    c.payment_musd = simplex_payment;
  }
  c.degenerate = std::abs(simplex_payment - c.payment_musd) > 1e-7 * std::max(1.0, std::abs(c.payment_musd));
  return c;
}

PlanReport evaluate_plan(const PlanningStudy& study, const Plan& plan) {
  const auto prep = prepare(study);
  if (plan.pst_built.size() != study.num_psts() || plan.lines_built.size() != study.num_prospective())
    throw ValidationError("plan", "dimensions do not match the study candidates");
  return evaluate_prepared(study, prep, plan);
}

OracleResult enumerate_oracle(const PlanningStudy& study, std::size_t guard) {
  const std::size_t nc = num_candidates(study);
  if (nc > guard)
    throw GuardError(fmt::format("enumeration over {} candidates exceeds the guard of {}", nc, guard));
  const auto prep = prepare(study);
  const auto affordable = affordable_candidates(study);
  std::vector<std::size_t> free;
  for (std::size_t c = 0; c < nc; ++c)
    if (affordable[c]) free.push_back(c);

  OracleResult best;
  bool found = false;
  const std::uint64_t count = std::uint64_t{1} << free.size();
  for (std::uint64_t code = 0; code < count; ++code) {
    std::vector<double> x(nc, 0.0);
    for (std::size_t b = 0; b < free.size(); ++b)
      if ((code >> b) & 1U) x[free[b]] = 1.0;
    const Plan plan = plan_from_candidates(study, x);
    if (!plan_investment(plan, study).within_budget()) continue;
    ++best.plans_enumerated;
    PlanReport rep;
    try {
      rep = evaluate_prepared(study, prep, plan);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++best.plans_feasible;
    if (!found || rep.objective_musd < best.objective_musd) {
      found = true;
      best.plan = plan;
      best.objective_musd = rep.objective_musd;
      best.report = std::move(rep);
    }
  }
  if (!found) throw InfeasibleError("no budget-feasible plan admits a feasible market clearing");
  return best;
}

}  // namespace tepps
