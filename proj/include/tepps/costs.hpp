#pragma once

#include "tepps/data_model.hpp"

namespace tepps {

/// Capital recovery factor d(1+d)^n / ((1+d)^n - 1); 1/n at d == 0.
double annuity_factor(double interest_rate, int lifetime_years);

/// Equivalent annual cost of a capital expense, in the same currency unit.
double annualize(double total_cost, double interest_rate, int lifetime_years);

/// PST capital cost in M$ from the rating of the line it is installed on.
double pst_capital_cost(double rating_mva, double unit_cost_per_kva);

struct InvestmentSummary {
  double line_annualized_musd = 0.0;
  double pst_annualized_musd = 0.0;
  double line_total_musd = 0.0;
  double pst_total_musd = 0.0;
  bool within_line_budget = true;
  bool within_pst_budget = true;

  bool within_budget() const { return within_line_budget && within_pst_budget; }
};

/// Budgets are checked on capital cost; the objective uses annualized cost.
InvestmentSummary plan_investment(const Plan& plan, const PlanningStudy& study);

/// Annualized cost of each candidate, PSTs first then prospective lines.
std::vector<double> annualized_candidate_costs(const PlanningStudy& study);

}  // namespace tepps
