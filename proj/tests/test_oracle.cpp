#include <gtest/gtest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "tepps/costs.hpp"
#include "tepps/oracle.hpp"

using namespace tepps;
using namespace tepps::testing;

namespace {

// Load at bus 2 exceeds the existing line unless the prospective line is built.
PlanningStudy islanded_load() {
  PlanningStudy s = base_study();
  auto& n = s.network;
  n.buses = buses(2);
  n.generators = {{"G1", BusId{1}, 20.0, 0.0, 400.0}};
  n.loads = {{"D2", BusId{2}, 150.0}};
  n.branches = {line("L1", 1, 2, 0.1, 100.0), prospective("P1", 1, 2, 0.1, 100.0, 1.0)};
  s.scenarios = {{1.0, {}, 8760.0}};
  return s;
}

}  // namespace

TEST(Oracle, TwoBusCongestedPrices) {
  const auto s = two_bus_congested();
  const auto rep = evaluate_plan(s, Plan::empty_for(s));
  ASSERT_EQ(rep.dispatch.size(), 1u);
  EXPECT_NEAR(rep.dispatch[0].lmp[0], 10.0, 1e-9);
  EXPECT_NEAR(rep.dispatch[0].lmp[1], 30.0, 1e-9);
  EXPECT_NEAR(rep.dispatch[0].generator_mw[0], 100.0, 1e-9);
  EXPECT_NEAR(rep.dispatch[0].generator_mw[1], 50.0, 1e-9);
  EXPECT_NEAR(rep.dispatch[0].flow_mw[0], 100.0, 1e-9);
  EXPECT_NEAR(rep.consumer_payment_musd, 1000.0 * 150.0 * 30.0 * 1e-6, 1e-9);
  EXPECT_NEAR(rep.objective_musd, rep.consumer_payment_musd, 0.0);
  EXPECT_TRUE(check_dispatch(s, rep.plan, 0, rep.dispatch[0]).empty());
}

TEST(Oracle, ReinforcementBuiltIffCheaperThanSaving) {
  // without the line: 2000 h at 30 $/MWh for 150 MW plus 3000 h at 10 $/MWh for 90 MW
  const double no_build = 2000.0 * 150.0 * 30.0 * 1e-6 + 3000.0 * 90.0 * 10.0 * 1e-6;
  const double with_line = 2000.0 * 150.0 * 10.0 * 1e-6 + 3000.0 * 90.0 * 10.0 * 1e-6;
  const double af = annuity_factor(0.05, 20);
  for (double capital : {0.5, 70.0, 80.0}) {
    auto s = two_bus_reinforcement();
    std::get<ProspectiveLine>(s.network.branches[1].kind).invest_cost_musd = capital;
    const auto r = enumerate_oracle(s);
    const double build_obj = with_line + capital * af;
    const bool build = build_obj < no_build;
    EXPECT_EQ(r.plan.lines_built[0], build) << capital;
    EXPECT_NEAR(r.objective_musd, std::min(build_obj, no_build), 1e-9) << capital;
    EXPECT_EQ(r.plans_enumerated, 2u);
  }
}

TEST(Oracle, ZeroBudgetsEnumerateOnlyEmptyPlan) {
  auto s = four_bus_ring();
  s.pst_budget_musd = 0.0;
  s.line_budget_musd = 0.0;
  const auto r = enumerate_oracle(s);
  EXPECT_EQ(r.plans_enumerated, 1u);
  EXPECT_EQ(r.plan, Plan::empty_for(s));
  EXPECT_NEAR(r.objective_musd, evaluate_plan(s, Plan::empty_for(s)).consumer_payment_musd, 1e-12);
}

TEST(Oracle, ObjectiveBelowEveryFeasiblePlan) {
  for (const auto& s : hand_fixtures()) {
    const auto r = enumerate_oracle(s);
    const std::size_t nc = num_candidates(s);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << nc); ++code) {
      std::vector<double> x(nc);
      for (std::size_t c = 0; c < nc; ++c) x[c] = static_cast<double>((code >> c) & 1u);
      const Plan p = plan_from_candidates(s, x);
      if (!plan_investment(p, s).within_budget()) continue;
      try {
        EXPECT_LE(r.objective_musd, evaluate_plan(s, p).objective_musd + 1e-12);
      } catch (const InfeasibleError&) {
      }
    }
  }
}

TEST(Oracle, BudgetMonotonicity) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto s = random_study(seed);
    s.pst_budget_musd = 0.5;
    s.line_budget_musd = 0.5;
    double prev = enumerate_oracle(s).objective_musd;
    for (double budget : {1.0, 2.0, 4.0, kInfinity}) {
      s.pst_budget_musd = budget;
      s.line_budget_musd = budget;
      const double obj = enumerate_oracle(s).objective_musd;
      EXPECT_LE(obj, prev + 1e-9 * (1.0 + std::abs(prev))) << seed << " " << budget;
      prev = obj;
    }
  }
}

TEST(Oracle, GuardExceeded) {
  auto s = two_bus_congested();
  for (int i = 0; i < 23; ++i)
    s.network.branches.push_back(prospective("P" + std::to_string(i + 1), 1, 2, 0.1, 10.0, 1.0));
  EXPECT_THROW(enumerate_oracle(s), GuardError);
  EXPECT_NO_THROW(enumerate_oracle(two_bus_congested(), 0));
}

TEST(Oracle, InfeasiblePlanNamesScenario) {
  const auto s = islanded_load();
  try {
    evaluate_plan(s, Plan::empty_for(s));
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.scenario(), 1);
    EXPECT_NE(std::string(e.what()).find("scenario 1"), std::string::npos);
  }
  const auto r = enumerate_oracle(s);
  EXPECT_TRUE(r.plan.lines_built[0]);
  EXPECT_EQ(r.plans_feasible, 1u);
  auto none = s;
  none.line_budget_musd = 0.0;
  EXPECT_THROW(enumerate_oracle(none), InfeasibleError);
}

TEST(Oracle, DoublingHoursIsLinear) {
  const auto s = four_bus_ring();
  auto d = s;
  for (auto& sc : d.scenarios) sc.hours *= 2.0;
  Plan p = Plan::empty_for(s);
  p.pst_built = {true, false};
  const auto a = evaluate_plan(s, p), b = evaluate_plan(d, p);
  EXPECT_NEAR(b.consumer_payment_musd, 2.0 * a.consumer_payment_musd, 1e-9 * a.consumer_payment_musd);
  for (std::size_t w = 0; w < a.curtailment_mwh.size(); ++w)
    EXPECT_NEAR(b.curtailment_mwh[w], 2.0 * a.curtailment_mwh[w], 1e-6);
  EXPECT_NEAR(b.penetration_pct, a.penetration_pct, 1e-9);
}

TEST(Oracle, NoWindMeansNoPenetration) {
  const auto s = two_bus_reinforcement();
  Plan p = Plan::empty_for(s);
  p.lines_built = {true};
  EXPECT_EQ(evaluate_plan(s, p).penetration_pct, 0.0);
}

TEST(Oracle, StrandedWindIsCurtailed) {
  const auto s = two_bus_stranded_wind();
  const auto rep = evaluate_plan(s, Plan::empty_for(s));
  // only 40 MW of the farm reaches the load
  const double available = 4000.0 * 200.0 * 0.6 + 4760.0 * 200.0 * 0.35;
  const double delivered = 4000.0 * 40.0 + 4760.0 * 40.0;
  EXPECT_NEAR(rep.curtailment_mwh[0], available - delivered, 1e-6);
  const double demand = 4000.0 * 250.0 + 4760.0 * 175.0;
  EXPECT_NEAR(rep.penetration_pct, 100.0 * delivered / demand, 1e-9);
}

TEST(Oracle, DegenerateDualsArePaymentMinimal) {
  // load exactly at the line rating: bus-2 price anywhere in [10, 30]
  auto s = two_bus_congested();
  s.network.loads[0].peak_demand_mw = 100.0;
  const auto rep = evaluate_plan(s, Plan::empty_for(s));
  EXPECT_NEAR(rep.dispatch[0].lmp[1], 10.0, 1e-9);
  EXPECT_NEAR(rep.consumer_payment_musd, 1000.0 * 100.0 * 10.0 * 1e-6, 1e-9);
}

TEST(Oracle, RejectsPlansOverBudget) {
  const auto s = three_bus_pst();
  Plan p = Plan::empty_for(s);
  auto t = s;
  t.line_budget_musd = 1.0;
  p.lines_built = {true};
  EXPECT_THROW(evaluate_plan(t, p), ValidationError);
  Plan wrong;
  EXPECT_THROW(evaluate_plan(s, wrong), ValidationError);
}
