#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "support/fixtures.hpp"
#include "tepps/formulation.hpp"
#include "tepps/oracle.hpp"

using namespace tepps;
using namespace tepps::testing;

namespace {

std::size_t count_tag(const std::vector<RowInfo>& rows, RowTag tag) {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.tag == tag;
  return n;
}

int row_named(const std::vector<RowInfo>& rows, const std::string& name) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].name == name) return static_cast<int>(i);
  return -1;
}

int column_named(const ScenarioMatrices& sm, const std::string& name) {
  for (std::size_t j = 0; j < sm.columns.size(); ++j)
    if (sm.columns[j].name == name) return static_cast<int>(j);
  return -1;
}

}  // namespace

TEST(Formulation, ThreeBusMatrixShapes) {
  const auto s = three_bus_pst();
  const auto sm = assemble_scenario_matrices(s, 0);
  // 2 generators, 1 wind farm, 4 branches, 1 PST shift, 3 angles
  EXPECT_EQ(sm.num_columns(), 11u);
  EXPECT_EQ(sm.K.cols(), 2);
  // 3 balance, 2 line flow, 1 PST flow, 1 reference
  EXPECT_EQ(sm.E.rows(), 7);
  EXPECT_EQ(count_tag(sm.equality_rows, RowTag::kBalance), 3u);
  EXPECT_EQ(count_tag(sm.equality_rows, RowTag::kPstFlow), 1u);
  EXPECT_EQ(count_tag(sm.equality_rows, RowTag::kLineFlow), 2u);
  // 2 PST angle, 2 disjunctive, 4 gen, 2 wind, 6 thermal, 2 prospective, 4 angle
  EXPECT_EQ(sm.P.rows(), 22);
  EXPECT_EQ(sm.K.rows(), sm.P.rows());
  EXPECT_EQ(sm.r.size(), 22u);
}

TEST(Formulation, ThreeBusEntriesInPerUnit) {
  const auto s = three_bus_pst();
  const auto sm = assemble_scenario_matrices(s, 1);
  const Eigen::MatrixXd E(sm.E), P(sm.P), K(sm.K);
  // balance at bus 2: load 200 MW at level 0.7 on a 100 MVA base
  const int bal2 = row_named(sm.equality_rows, "balance:B2");
  ASSERT_GE(bal2, 0);
  EXPECT_DOUBLE_EQ(sm.h[static_cast<std::size_t>(bal2)], -1.4);
  EXPECT_EQ(E(bal2, column_named(sm, "w:W2")), -1.0);
  EXPECT_EQ(E(bal2, column_named(sm, "f:L1")), -1.0);
  EXPECT_EQ(E(bal2, column_named(sm, "f:L3")), 1.0);
  // PST flow row: f = b (th1 - th3 + psi)
  const int pf = row_named(sm.equality_rows, "pst_flow:L2");
  ASSERT_GE(pf, 0);
  EXPECT_DOUBLE_EQ(E(pf, column_named(sm, "th:B1")), -10.0);
  EXPECT_DOUBLE_EQ(E(pf, column_named(sm, "th:B3")), 10.0);
  EXPECT_DOUBLE_EQ(E(pf, column_named(sm, "psi:L2")), -10.0);
  // wind availability 50 MW * 0.9
  const int wm = row_named(sm.inequality_rows, "wind_max:W2");
  EXPECT_NEAR(sm.r[static_cast<std::size_t>(wm)], 0.45, 1e-15);
  // PST angle rows couple to delta, disjunctive rows to alpha
  const int pmax = row_named(sm.inequality_rows, "pst_max:L2");
  EXPECT_DOUBLE_EQ(K(pmax, 0), -0.0872665);
  const int dup = row_named(sm.inequality_rows, "disj_up:P1");
  EXPECT_DOUBLE_EQ(K(dup, 1), 2.0 * std::numbers::pi / 0.1);
  EXPECT_DOUBLE_EQ(sm.r[static_cast<std::size_t>(dup)], 2.0 * std::numbers::pi / 0.1);
  const int prmax = row_named(sm.inequality_rows, "prosp_max:P1");
  EXPECT_DOUBLE_EQ(K(prmax, 1), -1.0);
  // generator cost in $ per per-unit hour
  EXPECT_DOUBLE_EQ(sm.w[static_cast<std::size_t>(column_named(sm, "g:G1"))], 1000.0);
}

TEST(Formulation, BigMIsTwoPiOverReactance) {
  EXPECT_DOUBLE_EQ(big_m_for_line(line("L", 1, 2, 0.25, 10.0)), 8.0 * std::numbers::pi);
  EXPECT_THROW(big_m_for_line(line("L", 1, 2, 0.0, 10.0)), ValidationError);
}

TEST(Formulation, CandidateVectorRoundTrip) {
  const auto s = five_bus_corridors();
  Plan p = Plan::empty_for(s);
  p.pst_built = {true};
  p.lines_built = {false, true, true};
  const auto x = candidate_vector(p);
  EXPECT_EQ(x, (std::vector<double>{1, 0, 1, 1}));
  EXPECT_EQ(plan_from_candidates(s, x), p);
  EXPECT_EQ(num_candidates(s), 4u);
}

TEST(Formulation, AffordabilityAgainstBudgets) {
  auto s = three_bus_pst();
  s.line_budget_musd = 4.0;  // P1 costs 5
  EXPECT_EQ(affordable_candidates(s), (std::vector<bool>{true, false}));
  s.pst_budget_musd = 0.0;
  s.line_budget_musd = kInfinity;
  EXPECT_EQ(affordable_candidates(s), (std::vector<bool>{false, true}));
}

TEST(Formulation, LowerLevelDualsSatisfyStationarityAndStrongDuality) {
  for (const auto& s : hand_fixtures()) {
    for (std::size_t t = 0; t < s.scenarios.size(); ++t) {
      const auto sm = assemble_scenario_matrices(s, t);
      std::vector<double> x(num_candidates(s), 1.0);
      const auto lp = lower_level_lp(sm, x);
      const auto sol = simplex_solve(lp);
      ASSERT_EQ(sol.status, LpStatus::kOptimal);

      // the simplex uses min c'x with r = c + A'mu + E'lambda; free columns have r = 0
      const auto ds = build_dual_system(sm);
      Eigen::VectorXd v(ds.matrix.cols());
      for (std::size_t i = 0; i < sm.r.size(); ++i) v[static_cast<Eigen::Index>(i)] = sol.inequality_duals[i];
      for (std::size_t i = 0; i < sm.h.size(); ++i)
        v[static_cast<Eigen::Index>(sm.r.size() + i)] = sol.equality_duals[i];
      const Eigen::VectorXd lhs = ds.matrix * v;
      for (std::size_t j = 0; j < ds.rhs.size(); ++j)
        EXPECT_NEAR(lhs[static_cast<Eigen::Index>(j)], ds.rhs[j], 1e-7 * std::max(1.0, std::abs(ds.rhs[j])));

      // w'y + (r - Kx)'mu + h'lambda = 0
      const auto sd = build_strong_duality_row(sm);
      double total = 0.0, scale = 1.0;
      for (std::size_t j = 0; j < sol.x.size(); ++j) total += sd.y_coefficients[j] * sol.x[j];
      scale = std::max(scale, std::abs(total));
      for (std::size_t i = 0; i < sd.mu_coefficients.size(); ++i) total += sd.mu_coefficients[i] * sol.inequality_duals[i];
      for (std::size_t i = 0; i < sd.lambda_coefficients.size(); ++i)
        total += sd.lambda_coefficients[i] * sol.equality_duals[i];
      for (const auto& term : sd.bilinear)
        total -= term.coefficient * x[static_cast<std::size_t>(term.candidate)] *
                 sol.inequality_duals[static_cast<std::size_t>(term.row)];
      EXPECT_NEAR(total / scale, 0.0, 1e-8);
    }
  }
}

TEST(Formulation, BilinearTermsCoverCoupledRows) {
  const auto sm = assemble_scenario_matrices(four_bus_ring(), 0);
  const auto terms = bilinear_terms(sm);
  // 2 PSTs x 2 angle rows, 1 prospective line x (2 disjunctive + 2 rating)
  EXPECT_EQ(terms.size(), 8u);
  for (const auto& t : terms) {
    const auto tag = sm.inequality_rows[static_cast<std::size_t>(t.row)].tag;
    if (t.candidate < 2)
      EXPECT_TRUE(tag == RowTag::kPstAngleMax || tag == RowTag::kPstAngleMin);
    else
      EXPECT_TRUE(tag == RowTag::kDisjunctionUpper || tag == RowTag::kDisjunctionLower ||
                  tag == RowTag::kProspectiveMax || tag == RowTag::kProspectiveMin);
  }
}

TEST(Formulation, LinearizationIsExactAtBinaryPoints) {
  const double m = 50.0;
  for (double xv : {0.0, 1.0}) {
    for (double muv : {0.0, 3.5, 50.0}) {
      for (double sense : {1.0, -1.0}) {
        LpBuilder b;
        const int x = b.add_variable(xv, xv);
        const int mu = b.add_variable(muv, muv);
        const int z = linearize_bilinear(b, x, mu, m);
        b.set_cost(z, sense);
        const auto sol = simplex_solve(b.build());
        ASSERT_EQ(sol.status, LpStatus::kOptimal);
        EXPECT_NEAR(sol.x[static_cast<std::size_t>(z)], xv * muv, 1e-12) << xv << " " << muv << " " << sense;
      }
    }
  }
  LpBuilder b;
  EXPECT_THROW(linearize_bilinear(b, b.add_variable(0, 1), b.add_variable(0, 1), 0.0), ValidationError);
}

TEST(Formulation, PaymentCoefficientsPriceDemand) {
  const auto s = two_bus_congested();
  const auto sm = assemble_scenario_matrices(s, 0);
  const auto c = payment_coefficients(s, sm, 0);
  const int bal2 = row_named(sm.equality_rows, "balance:B2");
  EXPECT_DOUBLE_EQ(c[static_cast<std::size_t>(bal2)], 1000.0 * 1.5 * 1e-6);
  EXPECT_EQ(c[static_cast<std::size_t>(row_named(sm.equality_rows, "balance:B1"))], 0.0);
}

TEST(Formulation, PlanStudyPassesAudit) {
  for (const auto& s : hand_fixtures()) {
    PlanningOptions o;
    o.mipgap = 0.0;
    const auto r = plan_study(s, o);
    EXPECT_TRUE(r.audit.passed()) << (r.audit.failures.empty() ? "" : r.audit.failures.front());
    EXPECT_LE(r.audit.primal_residual, kAuditPrimalTolerance);
    EXPECT_LE(r.audit.dual_residual, kAuditDualTolerance);
    EXPECT_LE(r.audit.strong_duality_residual, kAuditStrongDualityTolerance);
    EXPECT_TRUE(r.audit.mu_at_bound.empty());
    const auto& e = r.solution;
    EXPECT_NEAR(e.objective_musd, e.investment_musd + e.payment_musd, 1e-9 * (1.0 + std::abs(e.objective_musd)));
  }
}

TEST(Formulation, AuditFlagsTamperedSolution) {
  const auto s = three_bus_pst();
  PlanningOptions o;
  o.mipgap = 0.0;
  const auto r = plan_study(s, o);
  ASSERT_TRUE(r.audit.passed());
  const auto model = build_single_level_milp(s, r.dual_big_m_used);
  auto x = r.milp.x;
  const auto& block = model.blocks.front();
  x[static_cast<std::size_t>(block.y_offset)] += 0.01;  // first generator off its dispatch
  EXPECT_FALSE(audit_solution(s, model, x).passed());
}

TEST(Formulation, ExcludesUnaffordableCandidatesFromBinaries) {
  auto s = three_bus_pst();
  s.line_budget_musd = 1.0;
  const auto model = build_single_level_milp(s);
  EXPECT_EQ(model.milp.binaries.size(), 1u);
  const auto r = plan_study(s);
  EXPECT_FALSE(r.solution.plan.lines_built[0]);
}

TEST(Formulation, ZeroBudgetsGiveNoBuildPayment) {
  auto s = three_bus_pst();
  s.pst_budget_musd = 0.0;
  s.line_budget_musd = 0.0;
  const auto r = plan_study(s);
  EXPECT_EQ(r.solution.plan, Plan::empty_for(s));
  EXPECT_EQ(r.solution.investment_musd, 0.0);
  const auto rep = evaluate_plan(s, Plan::empty_for(s));
  EXPECT_NEAR(r.solution.objective_musd, rep.consumer_payment_musd, 1e-6 * (1.0 + rep.consumer_payment_musd));
}
