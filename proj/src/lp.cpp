#include "tepps/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "tepps/errors.hpp"

namespace tepps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTolerance = 1e-9;
constexpr double kZeroStep = 1e-12;
constexpr double kPerturbation = 5e-7;
constexpr double kInfeasibilityClaim = 1e-6;
constexpr long kDualStallLimit = 1000;
constexpr double kResidualInfeasibility = 1e-7;

double round_pow2(double s) { return std::exp2(std::round(std::log2(s))); }

// Basis update B_new = B_old * E, where E is the identity with column `pos`
// replaced by the entering column expressed in the old basis.
struct Eta {
  int pos = 0;
  double pivot = 1.0;
  std::vector<int> index;
  std::vector<double> value;
};

// Internal computational form: [A; E] x - r = 0 with one logical r_i per row.
// Variables 0..n-1 are structural, n..n+m-1 logical.
class Simplex {
 public:
  Simplex(const LpProblem& problem, const LpOptions& options) : problem_(problem), options_(options) {
    problem.check_dimensions();
    n_ = static_cast<int>(problem.num_variables());
    m_ = static_cast<int>(problem.num_inequalities() + problem.num_equalities());
    max_iterations_ = options.max_iterations > 0 ? options.max_iterations : 50L * (n_ + m_) + 10000;
    build_internal();
  }

  LpSolution solve();

 private:
  enum class Outcome { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kStalled };

  int total() const { return n_ + m_; }
  bool is_fixed(int j) const { return lb_[j] == ub_[j]; }

  void build_internal();
  void slack_basis();
  bool warm_basis(const Basis& basis);
  void place_nonbasic(int j, VarState preferred);
  bool refactor();
  void recover_from_singular();
  void refresh();
  void compute_basic_values();
  void compute_duals(Eigen::VectorXd& y);
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v);
  double column_dot(int j, const Eigen::VectorXd& y) const;
  void load_column(int j, Eigen::VectorXd& out) const;
  void pivot(int r, int q, const Eigen::VectorXd& alpha, double leave_value);
  bool make_dual_feasible();
  void perturb_bounds();
  void remove_perturbation();
  Outcome primal();
  Outcome dual();
  LpSolution extract(LpStatus status) const;

  const LpProblem& problem_;
  const LpOptions& options_;
  int n_ = 0;
  int m_ = 0;
  long max_iterations_ = 0;

  SparseMatrix a_;  // scaled [A; E]
  std::vector<double> cost_, lb_, ub_;
  std::vector<double> row_scale_, col_scale_;
  double cost_scale_ = 1.0;
  std::vector<double> saved_lb_, saved_ub_;
  bool perturbed_ = false;
  bool perturbation_used_ = false;

  std::vector<double> x_;
  std::vector<VarState> state_;
  std::vector<int> head_;
  std::vector<int> pos_;
  bool fresh_ = false;

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  long iterations_ = 0;
  int singular_recoveries_ = 0;
};

void Simplex::build_internal() {
  const auto& p = problem_;
  const auto mi = static_cast<int>(p.num_inequalities());
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(p.inequality.nonZeros() + p.equality.nonZeros()));
  for (int j = 0; j < p.inequality.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(p.inequality, j); it; ++it)
      if (it.value() != 0.0) trips.emplace_back(it.row(), j, it.value());
  for (int j = 0; j < p.equality.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(p.equality, j); it; ++it)
      if (it.value() != 0.0) trips.emplace_back(mi + it.row(), j, it.value());
  a_.resize(m_, n_);
  a_.setFromTriplets(trips.begin(), trips.end());
  a_.makeCompressed();

  row_scale_.assign(static_cast<std::size_t>(m_), 1.0);
  col_scale_.assign(static_cast<std::size_t>(n_), 1.0);
  if (options_.scale && a_.nonZeros() > 0) {
    // geometric-mean passes followed by max-equilibration, powers of two only
    for (int pass = 0; pass < 6; ++pass) {
      std::vector<double> rmin(static_cast<std::size_t>(m_), kInf), rmax(static_cast<std::size_t>(m_), 0.0);
      for (int j = 0; j < n_; ++j)
        for (SparseMatrix::InnerIterator it(a_, j); it; ++it) {
          const double v = std::abs(it.value()) * row_scale_[it.row()] * col_scale_[j];
          rmin[it.row()] = std::min(rmin[it.row()], v);
          rmax[it.row()] = std::max(rmax[it.row()], v);
        }
      for (int i = 0; i < m_; ++i)
        if (rmax[i] > 0.0) row_scale_[i] /= (pass < 5 ? std::sqrt(rmin[i] * rmax[i]) : rmax[i]);
      if (pass == 5) break;
      for (int j = 0; j < n_; ++j) {
        double cmin = kInf, cmax = 0.0;
        for (SparseMatrix::InnerIterator it(a_, j); it; ++it) {
          const double v = std::abs(it.value()) * row_scale_[it.row()] * col_scale_[j];
          cmin = std::min(cmin, v);
          cmax = std::max(cmax, v);
        }
        if (cmax > 0.0) col_scale_[j] /= std::sqrt(cmin * cmax);
      }
    }
    for (auto& s : row_scale_) s = round_pow2(s);
    for (auto& s : col_scale_) s = round_pow2(s);
    for (int j = 0; j < n_; ++j)
      for (SparseMatrix::InnerIterator it(a_, j); it; ++it) it.valueRef() *= row_scale_[it.row()] * col_scale_[j];
  }

  cost_.assign(static_cast<std::size_t>(total()), 0.0);
  lb_.assign(static_cast<std::size_t>(total()), 0.0);
  ub_.assign(static_cast<std::size_t>(total()), 0.0);
  double cmax = 0.0;
  for (int j = 0; j < n_; ++j) {
    cost_[j] = p.cost[j] * col_scale_[j];
    cmax = std::max(cmax, std::abs(cost_[j]));
    lb_[j] = p.lower[j] / col_scale_[j];
    ub_[j] = p.upper[j] / col_scale_[j];
  }
  if (options_.scale && cmax > 0.0) cost_scale_ = round_pow2(cmax);
  for (int j = 0; j < n_; ++j) cost_[j] /= cost_scale_;
  for (int i = 0; i < m_; ++i) {
    const int v = n_ + i;
    if (i < mi) {
      lb_[v] = -kInf;
      ub_[v] = p.inequality_rhs[i] * row_scale_[i];
    } else {
      lb_[v] = ub_[v] = p.equality_rhs[i - mi] * row_scale_[i];
    }
  }
}

void Simplex::place_nonbasic(int j, VarState preferred) {
  const bool has_lb = std::isfinite(lb_[j]), has_ub = std::isfinite(ub_[j]);
  VarState s = preferred;
  if (s == VarState::kAtUpper && !has_ub) s = has_lb ? VarState::kAtLower : VarState::kFree;
  if (s == VarState::kAtLower && !has_lb) s = has_ub ? VarState::kAtUpper : VarState::kFree;
  if (s == VarState::kFree || s == VarState::kBasic) {
    if (has_lb && has_ub)
      s = std::abs(lb_[j]) <= std::abs(ub_[j]) ? VarState::kAtLower : VarState::kAtUpper;
    else if (has_lb)
      s = VarState::kAtLower;
    else if (has_ub)
      s = VarState::kAtUpper;
    else
      s = VarState::kFree;
  }
  state_[j] = s;
  pos_[j] = -1;
  if (s == VarState::kAtLower) x_[j] = lb_[j];
  else if (s == VarState::kAtUpper) x_[j] = ub_[j];
  else if (!std::isfinite(x_[j])) x_[j] = 0.0;
}

void Simplex::slack_basis() {
  x_.assign(static_cast<std::size_t>(total()), 0.0);
  state_.assign(static_cast<std::size_t>(total()), VarState::kFree);
  pos_.assign(static_cast<std::size_t>(total()), -1);
  head_.assign(static_cast<std::size_t>(m_), 0);
  for (int j = 0; j < n_; ++j) place_nonbasic(j, VarState::kAtLower);
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    pos_[n_ + i] = i;
    state_[n_ + i] = VarState::kBasic;
  }
}

bool Simplex::warm_basis(const Basis& basis) {
  if (basis.state.size() != static_cast<std::size_t>(total())) return false;
  if (std::count(basis.state.begin(), basis.state.end(), VarState::kBasic) != m_) return false;
  x_.assign(static_cast<std::size_t>(total()), 0.0);
  state_.assign(static_cast<std::size_t>(total()), VarState::kFree);
  pos_.assign(static_cast<std::size_t>(total()), -1);
  head_.clear();
  for (int j = 0; j < total(); ++j) {
    if (basis.state[j] == VarState::kBasic) {
      state_[j] = VarState::kBasic;
      pos_[j] = static_cast<int>(head_.size());
      head_.push_back(j);
    } else {
      place_nonbasic(j, basis.state[j]);
    }
  }
  return true;
}

bool Simplex::refactor() {
  etas_.clear();
  if (m_ == 0) return true;
  std::vector<Triplet> trips;
  for (int p = 0; p < m_; ++p) {
    const int j = head_[p];
    if (j < n_) {
      for (SparseMatrix::InnerIterator it(a_, j); it; ++it) trips.emplace_back(it.row(), p, it.value());
    } else {
      trips.emplace_back(j - n_, p, -1.0);
    }
  }
  SparseMatrix b(m_, m_);
  b.setFromTriplets(trips.begin(), trips.end());
  b.makeCompressed();
  lu_.analyzePattern(b);
  lu_.factorize(b);
  return lu_.info() == Eigen::Success;
}

// Restart from the slack basis, keeping nonbasic values where bounds allow.
void Simplex::recover_from_singular() {
  if (++singular_recoveries_ > 5)
    throw NumericalError("simplex: numerical breakdown (basis repeatedly singular)");
  std::vector<double> old = x_;
  for (int j = 0; j < n_; ++j) {
    if (state_[j] != VarState::kBasic) continue;
    const double lo = std::abs(old[j] - lb_[j]), hi = std::abs(ub_[j] - old[j]);
    place_nonbasic(j, lo <= hi ? VarState::kAtLower : VarState::kAtUpper);
  }
  head_.assign(static_cast<std::size_t>(m_), 0);
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    pos_[n_ + i] = i;
    state_[n_ + i] = VarState::kBasic;
  }
  if (!refactor()) throw NumericalError("simplex: slack basis failed to factorize");
}

void Simplex::ftran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v);
  for (const auto& e : etas_) {
    const double vr = v[e.pos] / e.pivot;
    if (vr != 0.0)
      for (std::size_t k = 0; k < e.index.size(); ++k) v[e.index[k]] -= e.value[k] * vr;
    v[e.pos] = vr;
  }
}

void Simplex::btran(Eigen::VectorXd& v) {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = v[it->pos];
    for (std::size_t k = 0; k < it->index.size(); ++k) s -= it->value[k] * v[it->index[k]];
    v[it->pos] = s / it->pivot;
  }
  if (m_ == 0) return;
  Eigen::VectorXd y = lu_.transpose().solve(v);
  v = std::move(y);
}

double Simplex::column_dot(int j, const Eigen::VectorXd& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (SparseMatrix::InnerIterator it(a_, j); it; ++it) s += it.value() * y[it.row()];
  return s;
}

void Simplex::load_column(int j, Eigen::VectorXd& out) const {
  out.setZero(m_);
  if (j >= n_) {
    out[j - n_] = -1.0;
    return;
  }
  for (SparseMatrix::InnerIterator it(a_, j); it; ++it) out[it.row()] = it.value();
}

void Simplex::compute_basic_values() {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < total(); ++j) {
    if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
    if (j >= n_) {
      rhs[j - n_] += x_[j];
    } else {
      for (SparseMatrix::InnerIterator it(a_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
    }
  }
  ftran(rhs);
  for (int p = 0; p < m_; ++p) x_[head_[p]] = rhs[p];
}

void Simplex::refresh() {
  if (!refactor()) recover_from_singular();
  compute_basic_values();
  fresh_ = true;
}

void Simplex::compute_duals(Eigen::VectorXd& y) {
  y.resize(m_);
  for (int p = 0; p < m_; ++p) y[p] = cost_[head_[p]];
  btran(y);
}

void Simplex::pivot(int r, int q, const Eigen::VectorXd& alpha, double leave_value) {
  const int leaving = head_[r];
  x_[leaving] = leave_value;
  state_[leaving] = leave_value == lb_[leaving] ? VarState::kAtLower : VarState::kAtUpper;
  pos_[leaving] = -1;
  head_[r] = q;
  pos_[q] = r;
  state_[q] = VarState::kBasic;

  Eta eta;
  eta.pos = r;
  eta.pivot = alpha[r];
  for (int p = 0; p < m_; ++p)
    if (p != r && std::abs(alpha[p]) > 1e-14) {
      eta.index.push_back(p);
      eta.value.push_back(alpha[p]);
    }
  etas_.push_back(std::move(eta));
  fresh_ = false;
}

// Moves boxed nonbasics with wrong-signed reduced costs to their other bound.
// False when some nonbasic cannot be made dual feasible that way.
bool Simplex::make_dual_feasible() {
  const double dtol = options_.dual_tolerance;
  Eigen::VectorXd y;
  compute_duals(y);
  bool flipped = false, feasible = true;
  for (int j = 0; j < total(); ++j) {
    const VarState s = state_[j];
    if (s == VarState::kBasic || is_fixed(j)) continue;
    const double d = cost_[j] - column_dot(j, y);
    if (s == VarState::kAtLower && d < -dtol) {
      if (!std::isfinite(ub_[j])) {
        feasible = false;
        continue;
      }
      state_[j] = VarState::kAtUpper;
      x_[j] = ub_[j];
      flipped = true;
    } else if (s == VarState::kAtUpper && d > dtol) {
      if (!std::isfinite(lb_[j])) {
        feasible = false;
        continue;
      }
      state_[j] = VarState::kAtLower;
      x_[j] = lb_[j];
      flipped = true;
    } else if (s == VarState::kFree && std::abs(d) > dtol) {
      feasible = false;
    }
  }
  if (flipped) compute_basic_values();
  return feasible;
}

// Random outward shift of every finite bound of a non-fixed variable.
void Simplex::perturb_bounds() {
  saved_lb_ = lb_;
  saved_ub_ = ub_;
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(total()));
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (int j = 0; j < total(); ++j) {
    if (is_fixed(j)) continue;
    if (std::isfinite(lb_[j])) lb_[j] -= kPerturbation * (1.0 + std::abs(lb_[j])) * u(rng);
    if (std::isfinite(ub_[j])) ub_[j] += kPerturbation * (1.0 + std::abs(ub_[j])) * u(rng);
    if (state_[j] == VarState::kAtLower) x_[j] = lb_[j];
    else if (state_[j] == VarState::kAtUpper) x_[j] = ub_[j];
  }
  perturbed_ = true;
  perturbation_used_ = true;
  compute_basic_values();
}

void Simplex::remove_perturbation() {
  lb_ = std::move(saved_lb_);
  ub_ = std::move(saved_ub_);
  for (int j = 0; j < total(); ++j) {
    if (state_[j] == VarState::kAtLower) x_[j] = lb_[j];
    else if (state_[j] == VarState::kAtUpper) x_[j] = ub_[j];
  }
  perturbed_ = false;
  refresh();
}

LpSolution Simplex::solve() {
  if (!(options_.warm_start && warm_basis(*options_.warm_start))) slack_basis();
  refresh();

  if (make_dual_feasible()) {
    const Outcome o = dual();
    if (o == Outcome::kInfeasible) return extract(LpStatus::kInfeasible);
    if (o == Outcome::kIterationLimit) return extract(LpStatus::kIterationLimit);
  }
  switch (primal()) {
    case Outcome::kOptimal: return extract(LpStatus::kOptimal);
    case Outcome::kInfeasible: return extract(LpStatus::kInfeasible);
    case Outcome::kUnbounded: return extract(LpStatus::kUnbounded);
    default: return extract(LpStatus::kIterationLimit);
  }
}

// Dual simplex from a dual feasible basis: the most infeasible basic leaves
// at its violated bound; Harris two-pass ratio test on the reduced costs.
Simplex::Outcome Simplex::dual() {
  const double ptol = options_.primal_tolerance;
  const double dtol = options_.dual_tolerance;
  Eigen::VectorXd y(m_), rho(m_), alpha(m_);
  std::vector<double> d(static_cast<std::size_t>(total())), arow(static_cast<std::size_t>(total()));
  long degenerate = 0;

  while (true) {
    if (iterations_ >= max_iterations_) return Outcome::kIterationLimit;
    if (static_cast<int>(etas_.size()) >= options_.refactor_interval) refresh();

    int r = -1;
    double worst = ptol;
    for (int p = 0; p < m_; ++p) {
      const int v = head_[p];
      const double infeas = std::max(lb_[v] - x_[v], x_[v] - ub_[v]);
      if (infeas > worst) {
        worst = infeas;
        r = p;
      }
    }
    if (r < 0) {
      if (!fresh_) {
        refresh();
        continue;
      }
      return Outcome::kOptimal;
    }

    const int leaving = head_[r];
    const bool up = x_[leaving] < lb_[leaving];
    const double target = up ? lb_[leaving] : ub_[leaving];

    compute_duals(y);
    rho.setZero(m_);
    rho[r] = 1.0;
    btran(rho);

    // x_leaving moves by -arow_j * delta_j when nonbasic j moves by delta_j
    double theta_max = kInf;
    for (int j = 0; j < total(); ++j) {
      const VarState s = state_[j];
      arow[j] = 0.0;
      if (s == VarState::kBasic || is_fixed(j)) continue;
      const double a = up ? -column_dot(j, rho) : column_dot(j, rho);
      arow[j] = a;
      d[j] = cost_[j] - column_dot(j, y);
      double ratio;
      if (s == VarState::kAtLower && a > kPivotTolerance) ratio = (std::max(d[j], 0.0) + dtol) / a;
      else if (s == VarState::kAtUpper && a < -kPivotTolerance) ratio = (std::max(-d[j], 0.0) + dtol) / -a;
      else if (s == VarState::kFree && std::abs(a) > kPivotTolerance) ratio = dtol / std::abs(a);
      else continue;
      theta_max = std::min(theta_max, ratio);
    }

    if (!std::isfinite(theta_max)) {
      if (!fresh_) {
        refresh();
        continue;
      }
      return worst > kInfeasibilityClaim ? Outcome::kInfeasible : Outcome::kStalled;
    }

    int q = -1;
    double best = 0.0, q_ratio = 0.0;
    for (int j = 0; j < total(); ++j) {
      const VarState s = state_[j];
      if (s == VarState::kBasic || is_fixed(j)) continue;
      const double a = arow[j];
      double ratio;
      if (s == VarState::kAtLower && a > kPivotTolerance) ratio = std::max(d[j], 0.0) / a;
      else if (s == VarState::kAtUpper && a < -kPivotTolerance) ratio = std::max(-d[j], 0.0) / -a;
      else if (s == VarState::kFree && std::abs(a) > kPivotTolerance) ratio = 0.0;
      else continue;
      if (ratio <= theta_max && std::abs(a) > best) {
        best = std::abs(a);
        q = j;
        q_ratio = ratio;
      }
    }

    load_column(q, alpha);
    ftran(alpha);
    const double expected = up ? -arow[q] : arow[q];
    if (std::abs(alpha[r] - expected) > 1e-7 * (1.0 + std::abs(expected))) {
      if (fresh_) return Outcome::kStalled;
      refresh();
      continue;
    }

    ++iterations_;
    if (q_ratio <= kZeroStep) {
      if (++degenerate > kDualStallLimit) return Outcome::kStalled;
    } else {
      degenerate = 0;
    }
    const double delta = (x_[leaving] - target) / alpha[r];
    x_[q] += delta;
    for (int p = 0; p < m_; ++p)
      if (alpha[p] != 0.0) x_[head_[p]] -= alpha[p] * delta;
    pivot(r, q, alpha, target);
  }
}

// Bounded primal simplex with a composite phase 1. Long runs of degenerate
// steps trigger one bound perturbation, then Bland's rule.
Simplex::Outcome Simplex::primal() {
  double ptol = options_.primal_tolerance;
  const double dtol = options_.dual_tolerance;

  Eigen::VectorXd y(m_), alpha(m_);
  int stall = 0;
  bool bland = false;

  while (true) {
    if (iterations_ >= max_iterations_) {
      if (perturbed_) remove_perturbation();
      return Outcome::kIterationLimit;
    }
    if (static_cast<int>(etas_.size()) >= options_.refactor_interval) refresh();

    bool phase1 = false;
    for (int p = 0; p < m_; ++p) {
      const int v = head_[p];
      if (x_[v] < lb_[v] - ptol) {
        y[p] = -1.0;
        phase1 = true;
      } else if (x_[v] > ub_[v] + ptol) {
        y[p] = 1.0;
        phase1 = true;
      } else {
        y[p] = 0.0;
      }
    }
    if (!phase1)
      for (int p = 0; p < m_; ++p) y[p] = cost_[head_[p]];
    btran(y);

    // pricing: Dantzig, or lowest eligible index under Bland's rule
    int q = -1;
    double dq = 0.0, best = 0.0;
    for (int j = 0; j < total(); ++j) {
      const VarState s = state_[j];
      if (s == VarState::kBasic || is_fixed(j)) continue;
      const double d = (phase1 ? 0.0 : cost_[j]) - column_dot(j, y);
      const bool eligible = (s == VarState::kAtLower && d < -dtol) || (s == VarState::kAtUpper && d > dtol) ||
                            (s == VarState::kFree && std::abs(d) > dtol);
      if (!eligible) continue;
      if (bland) {
        q = j;
        dq = d;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dq = d;
      }
    }

    if (q < 0) {
      if (!fresh_) {
        refresh();
        continue;
      }
      if (phase1) {
        double worst = 0.0;
        for (int p = 0; p < m_; ++p) {
          const int v = head_[p];
          worst = std::max(worst, std::max(lb_[v] - x_[v], x_[v] - ub_[v]));
        }
        // residue of rounding that no column can reduce
        if (worst > kResidualInfeasibility) return Outcome::kInfeasible;
        ptol = std::max(ptol, 2.0 * worst);
        continue;
      }
      if (perturbed_) {
        remove_perturbation();
        stall = 0;
        continue;
      }
      return Outcome::kOptimal;
    }

    const double dir = dq < 0.0 ? 1.0 : -1.0;
    load_column(q, alpha);
    ftran(alpha);

    // Ratio test. Basics currently below (above) their bounds in phase 1 stop
    // at the bound they violate; Harris two-pass picks the largest pivot.
    const double span = ub_[q] - lb_[q];
    auto limit_of = [&](int p, double slack_tol, double& bound_hit) -> double {
      const double a = alpha[p];
      if (std::abs(a) <= kPivotTolerance) return kInf;
      const double rate = -dir * a;
      const int v = head_[p];
      const double xv = x_[v];
      if (rate > 0.0) {
        double bound;
        if (xv < lb_[v] - ptol) bound = lb_[v];
        else if (xv > ub_[v] + ptol) return kInf;
        else bound = ub_[v];
        if (!std::isfinite(bound)) return kInf;
        bound_hit = bound;
        return (bound + slack_tol - xv) / rate;
      }
      double bound;
      if (xv > ub_[v] + ptol) bound = ub_[v];
      else if (xv < lb_[v] - ptol) return kInf;
      else bound = lb_[v];
      if (!std::isfinite(bound)) return kInf;
      bound_hit = bound;
      return (xv - bound + slack_tol) / -rate;
    };

    int r = -1;
    double step = kInf, leave_value = 0.0;
    if (bland) {
      for (int p = 0; p < m_; ++p) {
        double bh = 0.0;
        const double t = limit_of(p, 0.0, bh);
        if (t == kInf) continue;
        const double tt = std::max(t, 0.0);
        if (r < 0 || tt < step - kZeroStep || (tt <= step + kZeroStep && head_[p] < head_[r])) {
          r = p;
          step = tt;
          leave_value = bh;
        }
      }
    } else {
      double relaxed = kInf;
      for (int p = 0; p < m_; ++p) {
        double bh = 0.0;
        relaxed = std::min(relaxed, limit_of(p, ptol, bh));
      }
      double best_pivot = 0.0;
      for (int p = 0; p < m_; ++p) {
        double bh = 0.0;
        const double t = limit_of(p, 0.0, bh);
        if (t == kInf || t > relaxed) continue;
        if (std::abs(alpha[p]) > best_pivot) {
          best_pivot = std::abs(alpha[p]);
          r = p;
          step = std::max(t, 0.0);
          leave_value = bh;
        }
      }
    }

    const bool flip = std::isfinite(span) && (r < 0 || span <= step);
    if (flip) step = span;

    if (!std::isfinite(step)) {
      if (!fresh_) {
        refresh();
        continue;
      }
      if (phase1) throw NumericalError("simplex: unbounded ray during phase 1");
      if (perturbed_) remove_perturbation();
      return Outcome::kUnbounded;
    }

    ++iterations_;
    if (step <= kZeroStep) {
      if (++stall > options_.degenerate_stall_limit / 4 && !perturbation_used_) {
        perturb_bounds();
        stall = 0;
        continue;
      }
      if (stall > options_.degenerate_stall_limit) bland = true;
    } else {
      stall = 0;
    }

    if (step > 0.0) {
      x_[q] += dir * step;
      for (int p = 0; p < m_; ++p)
        if (alpha[p] != 0.0) x_[head_[p]] -= dir * step * alpha[p];
    }

    if (flip) {
      state_[q] = dir > 0.0 ? VarState::kAtUpper : VarState::kAtLower;
      x_[q] = dir > 0.0 ? ub_[q] : lb_[q];
      fresh_ = false;
      continue;
    }
    pivot(r, q, alpha, leave_value);
  }
}

LpSolution Simplex::extract(LpStatus status) const {
  const auto& p = problem_;
  const auto mi = static_cast<int>(p.num_inequalities());
  LpSolution sol;
  sol.status = status;
  sol.iterations = iterations_;
  sol.basis.state = state_;
  sol.x.resize(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    double v = x_[j];
    // snap nonbasic values onto their exact bounds
    if (state_[j] == VarState::kAtLower) sol.x[j] = p.lower[j];
    else if (state_[j] == VarState::kAtUpper) sol.x[j] = p.upper[j];
    else sol.x[j] = v * col_scale_[j];
  }
  sol.objective = 0.0;
  for (int j = 0; j < n_; ++j) sol.objective += p.cost[j] * sol.x[j];

  if (status == LpStatus::kOptimal) {
    Eigen::VectorXd y(m_);
    for (int q = 0; q < m_; ++q) y[q] = cost_[head_[q]];
    const_cast<Simplex*>(this)->btran(y);
    sol.inequality_duals.resize(p.num_inequalities());
    sol.equality_duals.resize(p.num_equalities());
    for (int i = 0; i < m_; ++i) {
      const double pi = y[i] * row_scale_[i] * cost_scale_;
      if (i < mi) sol.inequality_duals[i] = -pi;
      else sol.equality_duals[i - mi] = -pi;
    }
    sol.reduced_costs = p.cost;
    for (int j = 0; j < p.inequality.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(p.inequality, j); it; ++it)
        sol.reduced_costs[j] += it.value() * sol.inequality_duals[it.row()];
    for (int j = 0; j < p.equality.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(p.equality, j); it; ++it)
        sol.reduced_costs[j] += it.value() * sol.equality_duals[it.row()];
  }
  return sol;
}

}  // namespace

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration limit";
  }
  return "unknown";
}

void LpProblem::check_dimensions() const {
  const auto n = static_cast<Eigen::Index>(cost.size());
  if (lower.size() != cost.size() || upper.size() != cost.size())
    throw std::invalid_argument("LpProblem: bound vectors differ in length from cost");
  if ((inequality.rows() > 0 || inequality.cols() > 0) &&
      (inequality.cols() != n || inequality.rows() != static_cast<Eigen::Index>(inequality_rhs.size())))
    throw std::invalid_argument("LpProblem: inequality block has inconsistent dimensions");
  if (inequality.rows() == 0 && !inequality_rhs.empty())
    throw std::invalid_argument("LpProblem: inequality rhs without matrix");
  if ((equality.rows() > 0 || equality.cols() > 0) &&
      (equality.cols() != n || equality.rows() != static_cast<Eigen::Index>(equality_rhs.size())))
    throw std::invalid_argument("LpProblem: equality block has inconsistent dimensions");
  if (equality.rows() == 0 && !equality_rhs.empty())
    throw std::invalid_argument("LpProblem: equality rhs without matrix");
  for (std::size_t j = 0; j < cost.size(); ++j) {
    if (!(lower[j] <= upper[j])) throw std::invalid_argument(fmt::format("LpProblem: variable {} has lower > upper", j));
    if (!std::isfinite(cost[j])) throw std::invalid_argument(fmt::format("LpProblem: cost {} not finite", j));
    if (lower[j] == kInf || upper[j] == -kInf)
      throw std::invalid_argument(fmt::format("LpProblem: variable {} has an infinite fixed bound", j));
  }
}

LpSolution simplex_solve(const LpProblem& problem, const LpOptions& options) {
  Simplex engine(problem, options);
  return engine.solve();
}

LpCertificate certify(const LpProblem& p, const LpSolution& s) {
  LpCertificate c;
  const std::size_t n = p.num_variables();
  std::vector<double> ineq_act(p.num_inequalities(), 0.0), eq_act(p.num_equalities(), 0.0);
  std::vector<double> ineq_norm(p.num_inequalities(), 0.0), eq_norm(p.num_equalities(), 0.0);
  for (int j = 0; j < p.inequality.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(p.inequality, j); it; ++it) {
      ineq_act[it.row()] += it.value() * s.x[j];
      ineq_norm[it.row()] = std::max(ineq_norm[it.row()], std::abs(it.value()));
    }
  for (int j = 0; j < p.equality.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(p.equality, j); it; ++it) {
      eq_act[it.row()] += it.value() * s.x[j];
      eq_norm[it.row()] = std::max(eq_norm[it.row()], std::abs(it.value()));
    }

  for (std::size_t i = 0; i < ineq_act.size(); ++i) {
    const double norm = std::max(1.0, ineq_norm[i]);
    const double slack = p.inequality_rhs[i] - ineq_act[i];
    c.primal_residual = std::max(c.primal_residual, -slack / norm);
    if (!s.inequality_duals.empty()) {
      c.dual_residual = std::max(c.dual_residual, -s.inequality_duals[i]);
      c.complementarity = std::max(c.complementarity, std::abs(s.inequality_duals[i] * slack) / norm);
    }
  }
  for (std::size_t i = 0; i < eq_act.size(); ++i)
    c.primal_residual =
        std::max(c.primal_residual, std::abs(eq_act[i] - p.equality_rhs[i]) / std::max(1.0, eq_norm[i]));
  for (std::size_t j = 0; j < n; ++j) {
    c.primal_residual = std::max({c.primal_residual, p.lower[j] - s.x[j], s.x[j] - p.upper[j]});
    if (s.reduced_costs.empty()) continue;
    const double rc = s.reduced_costs[j];
    const double to_lo = s.x[j] - p.lower[j], to_hi = p.upper[j] - s.x[j];
    // rc > 0 must sit at the lower bound, rc < 0 at the upper bound
    if (rc > 0.0) {
      if (!std::isfinite(p.lower[j])) c.dual_residual = std::max(c.dual_residual, rc);
      else c.complementarity = std::max(c.complementarity, std::abs(rc * to_lo));
    } else if (rc < 0.0) {
      if (!std::isfinite(p.upper[j])) c.dual_residual = std::max(c.dual_residual, -rc);
      else c.complementarity = std::max(c.complementarity, std::abs(rc * to_hi));
    }
  }

  if (!s.reduced_costs.empty()) {
    double dual = 0.0;
    for (std::size_t i = 0; i < ineq_act.size(); ++i) dual -= p.inequality_rhs[i] * s.inequality_duals[i];
    for (std::size_t i = 0; i < eq_act.size(); ++i) dual -= p.equality_rhs[i] * s.equality_duals[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double rc = s.reduced_costs[j];
      const double bound = rc > 0.0 ? p.lower[j] : p.upper[j];
      dual += std::isfinite(bound) ? rc * bound : rc * s.x[j];
    }
    c.dual_objective = dual;
    c.objective_gap = std::abs(s.objective - dual) / std::max(1.0, std::abs(s.objective));
  }
  return c;
}

int LpBuilder::add_variable(double lower, double upper, double cost) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  return static_cast<int>(cost_.size()) - 1;
}

void LpBuilder::set_cost(int var, double cost) { cost_.at(static_cast<std::size_t>(var)) = cost; }

void LpBuilder::set_bounds(int var, double lower, double upper) {
  lower_.at(static_cast<std::size_t>(var)) = lower;
  upper_.at(static_cast<std::size_t>(var)) = upper;
}

int LpBuilder::add_inequality(const std::vector<std::pair<int, double>>& terms, double rhs) {
  const int row = static_cast<int>(ineq_rhs_.size());
  for (const auto& [var, coef] : terms)
    if (coef != 0.0) ineq_.emplace_back(row, var, coef);
  ineq_rhs_.push_back(rhs);
  return row;
}

int LpBuilder::add_equality(const std::vector<std::pair<int, double>>& terms, double rhs) {
  const int row = static_cast<int>(eq_rhs_.size());
  for (const auto& [var, coef] : terms)
    if (coef != 0.0) eq_.emplace_back(row, var, coef);
  eq_rhs_.push_back(rhs);
  return row;
}

LpProblem LpBuilder::build() const {
  LpProblem p;
  p.cost = cost_;
  p.lower = lower_;
  p.upper = upper_;
  const int n = num_variables();
  p.inequality.resize(num_inequalities(), n);
  p.inequality.setFromTriplets(ineq_.begin(), ineq_.end());
  p.inequality.makeCompressed();
  p.inequality_rhs = ineq_rhs_;
  p.equality.resize(num_equalities(), n);
  p.equality.setFromTriplets(eq_.begin(), eq_.end());
  p.equality.makeCompressed();
  p.equality_rhs = eq_rhs_;
  return p;
}

}  // namespace tepps
