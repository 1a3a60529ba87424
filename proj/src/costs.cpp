#include "tepps/costs.hpp"

#include <cmath>

namespace tepps {

double annuity_factor(double d, int lifetime) {
  if (d < 0.0 || lifetime < 1) throw ValidationError("economics", "annuity requires d >= 0 and lifetime >= 1");
  if (d == 0.0) return 1.0 / lifetime;
  const double growth = std::pow(1.0 + d, lifetime);
  return d * growth / (growth - 1.0);
}

double annualize(double total_cost, double d, int lifetime) {
  return total_cost * annuity_factor(d, lifetime);
}

double pst_capital_cost(double rating_mva, double unit_cost_per_kva) {
  // MVA -> kVA is 1e3, $ -> M$ is 1e-6
  return rating_mva * 1e3 * unit_cost_per_kva * 1e-6;
}

InvestmentSummary plan_investment(const Plan& plan, const PlanningStudy& study) {
  const auto& net = study.network;
  const auto psts = net.pst_candidates();
  const auto lines = net.prospective_lines();
  if (plan.pst_built.size() != psts.size() || plan.lines_built.size() != lines.size())
    throw ValidationError("plan", "dimensions do not match the study candidates");

  InvestmentSummary s;
  for (std::size_t i = 0; i < psts.size(); ++i)
    if (plan.pst_built[i]) s.pst_total_musd += net.branches[psts[i]].pst->invest_cost_musd;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (plan.lines_built[i])
      s.line_total_musd += std::get<ProspectiveLine>(net.branches[lines[i]].kind).invest_cost_musd;

  const auto& e = study.economics;
  s.pst_annualized_musd = annualize(s.pst_total_musd, e.interest_rate, e.pst_lifetime_years);
  s.line_annualized_musd = annualize(s.line_total_musd, e.interest_rate, e.line_lifetime_years);
  s.within_pst_budget = s.pst_total_musd <= study.pst_budget_musd * (1.0 + 1e-12);
  s.within_line_budget = s.line_total_musd <= study.line_budget_musd * (1.0 + 1e-12);
  return s;
}

std::vector<double> annualized_candidate_costs(const PlanningStudy& study) {
  const auto& net = study.network;
  const auto& e = study.economics;
  std::vector<double> out;
  for (auto k : net.pst_candidates())
    out.push_back(annualize(net.branches[k].pst->invest_cost_musd, e.interest_rate, e.pst_lifetime_years));
  for (auto k : net.prospective_lines())
    out.push_back(annualize(std::get<ProspectiveLine>(net.branches[k].kind).invest_cost_musd, e.interest_rate,
                            e.line_lifetime_years));
  return out;
}

}  // namespace tepps
