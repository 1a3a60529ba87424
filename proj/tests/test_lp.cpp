#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <random>

#include "support/random_problems.hpp"
#include "tepps/lp.hpp"

using namespace tepps;
using tepps::testing::random_lp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense view of an LP with every bound written as an inequality row.
struct DenseLp {
  Eigen::MatrixXd a;  // inequalities a x <= b
  Eigen::VectorXd b;
  Eigen::MatrixXd e;  // equalities e x = f
  Eigen::VectorXd f;
  Eigen::VectorXd c;
};

DenseLp dense(const LpProblem& p) {
  DenseLp d;
  const auto n = static_cast<Eigen::Index>(p.num_variables());
  Eigen::MatrixXd ai = Eigen::MatrixXd(p.inequality);
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (Eigen::Index i = 0; i < ai.rows(); ++i) {
    rows.push_back(ai.row(i));
    rhs.push_back(p.inequality_rhs[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    if (std::isfinite(p.upper[j])) {
      r[j] = 1.0;
      rows.push_back(r);
      rhs.push_back(p.upper[j]);
    }
    if (std::isfinite(p.lower[j])) {
      r.setZero();
      r[j] = -1.0;
      rows.push_back(r);
      rhs.push_back(-p.lower[j]);
    }
  }
  d.a.resize(static_cast<Eigen::Index>(rows.size()), n);
  d.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.a.row(static_cast<Eigen::Index>(i)) = rows[i];
    d.b[static_cast<Eigen::Index>(i)] = rhs[i];
  }
  d.e = Eigen::MatrixXd(p.equality);
  if (d.e.cols() != n) d.e.resize(0, n);
  d.f = Eigen::Map<const Eigen::VectorXd>(p.equality_rhs.data(), static_cast<Eigen::Index>(p.equality_rhs.size()));
  d.c = Eigen::Map<const Eigen::VectorXd>(p.cost.data(), n);
  return d;
}

// Best objective over all vertices; nullopt when no vertex is feasible.
std::optional<double> vertex_enumeration(const LpProblem& p) {
  DenseLp d = dense(p);
  const int n = static_cast<int>(d.c.size());
  // independent equality rows; dependent ones are still checked for feasibility
  Eigen::MatrixXd all_e = d.e;
  Eigen::VectorXd all_f = d.f;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < all_e.rows(); ++i) {
    Eigen::MatrixXd trial(static_cast<Eigen::Index>(keep.size()) + 1, n);
    for (std::size_t k = 0; k < keep.size(); ++k) trial.row(static_cast<Eigen::Index>(k)) = all_e.row(keep[k]);
    trial.row(trial.rows() - 1) = all_e.row(i);
    if (Eigen::FullPivLU<Eigen::MatrixXd>(trial).rank() == trial.rows()) keep.push_back(i);
  }
  d.e.resize(static_cast<Eigen::Index>(keep.size()), n);
  d.f.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    d.e.row(static_cast<Eigen::Index>(k)) = all_e.row(keep[k]);
    d.f[static_cast<Eigen::Index>(k)] = all_f[keep[k]];
  }
  const int need = n - static_cast<int>(d.e.rows());
  const int m = static_cast<int>(d.a.rows());
  std::optional<double> best;
  std::vector<int> pick(static_cast<std::size_t>(std::max(need, 0)));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == need) {
      Eigen::MatrixXd k(n, n);
      Eigen::VectorXd r(n);
      for (int i = 0; i < d.e.rows(); ++i) {
        k.row(i) = d.e.row(i);
        r[i] = d.f[i];
      }
      for (int i = 0; i < need; ++i) {
        k.row(d.e.rows() + i) = d.a.row(pick[i]);
        r[d.e.rows() + i] = d.b[pick[i]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
      if (lu.rank() < n) return;
      const Eigen::VectorXd x = lu.solve(r);
      if (((d.a * x - d.b).array() > 1e-9).any()) return;
      if (all_e.rows() > 0 && ((all_e * x - all_f).cwiseAbs().array() > 1e-9).any()) return;
      const double obj = d.c.dot(x);
      if (!best || obj < *best) best = obj;
      return;
    }
    for (int i = start; i < m; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  if (need >= 0) rec(0, 0);
  return best;
}

}  // namespace

TEST(Lp, TextbookProblem) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
  LpBuilder b;
  const int x = b.add_variable(0.0, kInf, -3.0), y = b.add_variable(0.0, kInf, -5.0);
  b.add_inequality({{x, 1.0}}, 4.0);
  b.add_inequality({{y, 2.0}}, 12.0);
  b.add_inequality({{x, 3.0}, {y, 2.0}}, 18.0);
  const auto s = simplex_solve(b.build());
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_NEAR(s.x[0], 2.0, 1e-12);
  EXPECT_NEAR(s.x[1], 6.0, 1e-12);
  EXPECT_NEAR(s.objective, -36.0, 1e-12);
  EXPECT_NEAR(s.inequality_duals[0], 0.0, 1e-12);
  EXPECT_NEAR(s.inequality_duals[1], 1.5, 1e-12);
  EXPECT_NEAR(s.inequality_duals[2], 1.0, 1e-12);
}

TEST(Lp, EqualityDualsAreShadowPrices) {
  // min 2a + 3b s.t. a + b = 10, a <= 4  ->  a = 4, b = 6
  LpBuilder b;
  const int a = b.add_variable(0.0, kInf, 2.0), c = b.add_variable(0.0, kInf, 3.0);
  b.add_equality({{a, 1.0}, {c, 1.0}}, 10.0);
  b.add_inequality({{a, 1.0}}, 4.0);
  const auto p = b.build();
  const auto s = simplex_solve(p);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_NEAR(s.objective, 26.0, 1e-12);
  // perturbing the rhs by h changes the objective by -lambda h
  LpProblem q = p;
  q.equality_rhs[0] += 1e-3;
  EXPECT_NEAR(simplex_solve(q).objective - s.objective, -s.equality_duals[0] * 1e-3, 1e-9);
  EXPECT_NEAR(s.inequality_duals[0], 1.0, 1e-12);
}

TEST(Lp, DetectsInfeasibleAndUnbounded) {
  {
    LpBuilder b;
    const int x = b.add_variable(0.0, kInf, 1.0);
    b.add_inequality({{x, 1.0}}, -1.0);
    EXPECT_EQ(simplex_solve(b.build()).status, LpStatus::kInfeasible);
  }
  {
    LpBuilder b;
    const int x = b.add_variable(0.0, kInf, -1.0), y = b.add_variable(-kInf, kInf, 0.0);
    b.add_inequality({{x, 1.0}, {y, -1.0}}, 1.0);
    EXPECT_EQ(simplex_solve(b.build()).status, LpStatus::kUnbounded);
  }
  {
    LpBuilder b;
    const int x = b.add_variable(-kInf, kInf, 0.0);
    b.add_equality({{x, 1.0}}, 1.0);
    b.add_equality({{x, 1.0}}, 2.0);
    EXPECT_EQ(simplex_solve(b.build()).status, LpStatus::kInfeasible);
  }
}

TEST(Lp, FreeAndFixedVariables) {
  LpBuilder b;
  const int x = b.add_variable(-kInf, kInf, 1.0), y = b.add_variable(3.0, 3.0, 1.0);
  b.add_inequality({{x, -1.0}, {y, 1.0}}, 5.0);  // x >= y - 5
  const auto s = simplex_solve(b.build());
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_NEAR(s.x[0], -2.0, 1e-12);
  EXPECT_EQ(s.x[1], 3.0);
  EXPECT_NEAR(s.objective, 1.0, 1e-12);
}

TEST(Lp, EmptyConstraintSet) {
  LpBuilder b;
  b.add_variable(-1.0, 2.0, 1.0);
  b.add_variable(-1.0, 2.0, -1.0);
  const auto s = simplex_solve(b.build());
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_EQ(s.objective, -3.0);
}

TEST(Lp, BoundFlipBeforeUnboundedColumnKeepsBasicsConsistent) {
  // x is boxed and x >= 0.5; y has no upper bound
  LpBuilder b;
  const int x = b.add_variable(0.0, 1.0, -1.0), y = b.add_variable(0.0, kInf, -1.0);
  b.add_inequality({{x, -1.0}}, -0.5);
  b.add_inequality({{y, 1.0}}, 3.0);
  const auto p = b.build();
  const auto s = simplex_solve(p);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_NEAR(s.objective, -4.0, 1e-12);
  EXPECT_LE(certify(p, s).primal_residual, 1e-12);
}

TEST(Lp, BealeCyclingExampleTerminates) {
  LpBuilder b;
  const int x4 = b.add_variable(0.0, kInf, -0.75), x5 = b.add_variable(0.0, kInf, 20.0);
  const int x6 = b.add_variable(0.0, kInf, -0.5), x7 = b.add_variable(0.0, kInf, 6.0);
  b.add_inequality({{x4, 0.25}, {x5, -8.0}, {x6, -1.0}, {x7, 9.0}}, 0.0);
  b.add_inequality({{x4, 0.5}, {x5, -12.0}, {x6, -0.5}, {x7, 3.0}}, 0.0);
  b.add_inequality({{x6, 1.0}}, 1.0);
  LpOptions o;
  o.scale = false;
  const auto s = simplex_solve(b.build(), o);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_NEAR(s.objective, -1.25, 1e-12);
}

TEST(Lp, WarmStartFromOptimalBasisNeedsNoPivots) {
  std::mt19937_64 rng(7);
  const auto r = random_lp(rng, 30, 40, 5, true, false);
  const auto cold = simplex_solve(r.lp);
  ASSERT_EQ(cold.status, LpStatus::kOptimal);
  LpOptions o;
  o.warm_start = &cold.basis;
  const auto warm = simplex_solve(r.lp, o);
  ASSERT_EQ(warm.status, LpStatus::kOptimal);
  EXPECT_EQ(warm.iterations, 0);
  EXPECT_NEAR(warm.objective, cold.objective, 1e-9 * std::max(1.0, std::abs(cold.objective)));
}

TEST(Lp, WarmStartAfterBoundChangeMatchesColdSolve) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    auto r = random_lp(rng, 25, 30, 3, true, trial % 2 == 0);
    const auto base = simplex_solve(r.lp);
    ASSERT_EQ(base.status, LpStatus::kOptimal);
    LpProblem changed = r.lp;
    const std::size_t j = static_cast<std::size_t>(trial) % changed.num_variables();
    const double mid = base.x[j];
    if (trial % 3 == 0) changed.upper[j] = std::floor(mid);
    else changed.lower[j] = std::ceil(mid + 0.5);
    if (changed.lower[j] > changed.upper[j]) continue;
    LpOptions o;
    o.warm_start = &base.basis;
    const auto warm = simplex_solve(changed, o);
    const auto cold = simplex_solve(changed);
    ASSERT_EQ(warm.status, cold.status) << trial;
    if (cold.status == LpStatus::kOptimal) {
      EXPECT_NEAR(warm.objective, cold.objective, 1e-9 * std::max(1.0, std::abs(cold.objective))) << trial;
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Lp, MatchesVertexEnumerationOnTinyProblems) {
  std::mt19937_64 rng(2024);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> nd(1, 3), md(1, 5), ed(0, 1);
    const int n = nd(rng);
    auto r = random_lp(rng, n, md(rng), std::min(ed(rng), n - 1), true, trial % 2 == 0);
    if (trial % 7 == 0) r.lp.inequality_rhs[0] -= 50.0;  // often infeasible
    const auto s = simplex_solve(r.lp);
    const auto v = vertex_enumeration(r.lp);
    if (!v) {
      EXPECT_EQ(s.status, LpStatus::kInfeasible) << trial;
      ++infeasible;
      continue;
    }
    ASSERT_EQ(s.status, LpStatus::kOptimal) << trial;
    EXPECT_NEAR(s.objective, *v, 1e-9 * std::max(1.0, std::abs(*v))) << trial;
    ++optimal;
  }
  EXPECT_GT(optimal, 200);
  EXPECT_GT(infeasible, 5);
}

TEST(Lp, ThousandRandomProblemsCertify) {
  std::mt19937_64 rng(20240601);
  int optimal = 0, unbounded = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<int> nd(2, 60), md(1, 70), ed(0, 8);
    const int n = nd(rng);
    const auto r = random_lp(rng, n, md(rng), std::min(ed(rng), n / 2), trial % 5 != 0, trial % 3 == 0);
    const auto s = simplex_solve(r.lp);
    ASSERT_NE(s.status, LpStatus::kInfeasible) << trial;  // feasible by construction
    ASSERT_NE(s.status, LpStatus::kIterationLimit) << trial;
    if (s.status == LpStatus::kUnbounded) {
      EXPECT_FALSE(r.bounded_box) << trial;
      ++unbounded;
      continue;
    }
    const auto c = certify(r.lp, s);
    EXPECT_LE(c.primal_residual, 1e-8) << trial;
    EXPECT_LE(c.dual_residual, 1e-8) << trial;
    EXPECT_LE(c.objective_gap, 1e-9) << trial;
    EXPECT_LE(c.complementarity, 1e-8) << trial;
    ++optimal;
  }
  EXPECT_GT(optimal, 800);
  EXPECT_GT(unbounded, 0);
}

TEST(Lp, CertifyFlagsWrongDuals) {
  LpBuilder b;
  const int x = b.add_variable(0.0, kInf, -1.0);
  b.add_inequality({{x, 1.0}}, 2.0);
  const auto p = b.build();
  auto s = simplex_solve(p);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_LE(certify(p, s).objective_gap, 1e-12);
  s.inequality_duals[0] = 3.0;
  const auto c = certify(p, s);
  EXPECT_GT(c.objective_gap, 1.0);
}

TEST(Lp, RejectsInconsistentDimensions) {
  LpProblem p;
  p.cost = {1.0};
  p.lower = {0.0};
  p.upper = {-1.0};
  EXPECT_THROW(simplex_solve(p), std::invalid_argument);
}
