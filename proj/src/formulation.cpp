#include "tepps/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "tepps/costs.hpp"
#include "tepps/errors.hpp"

namespace tepps {

namespace {

constexpr double kMuBoundTolerance = 1e-9;

std::string bus_name(const Bus& b) { return fmt::format("B{}", b.id.value); }

struct RowSink {
  std::vector<Triplet> p, k;
  std::vector<double> rhs;
  std::vector<RowInfo> info;

  int add(RowTag tag, std::size_t entity, std::string name, double r) {
    info.push_back({std::move(name), tag, entity});
    rhs.push_back(r);
    return static_cast<int>(rhs.size()) - 1;
  }
  void coef(int row, std::size_t col, double v) { p.emplace_back(row, static_cast<int>(col), v); }
  void coupling(int row, std::size_t cand, double v) { k.emplace_back(row, static_cast<int>(cand), v); }
};

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// Row-major copy: for each row, list of (column, value).
std::vector<std::vector<std::pair<int, double>>> rows_of(const SparseMatrix& m) {
  std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(m.rows()));
  for (int j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) out[it.row()].emplace_back(j, it.value());
  return out;
}

}  // namespace

std::string to_string(RowTag tag) {
  switch (tag) {
    case RowTag::kBalance: return "balance";
    case RowTag::kLineFlow: return "flow";
    case RowTag::kPstFlow: return "pst_flow";
    case RowTag::kReference: return "reference";
    case RowTag::kPstAngleMax: return "pst_max";
    case RowTag::kPstAngleMin: return "pst_min";
    case RowTag::kDisjunctionUpper: return "disj_up";
    case RowTag::kDisjunctionLower: return "disj_lo";
    case RowTag::kGenMax: return "gen_max";
    case RowTag::kGenMin: return "gen_min";
    case RowTag::kWindMax: return "wind_max";
    case RowTag::kWindMin: return "wind_min";
    case RowTag::kThermalMax: return "thermal_max";
    case RowTag::kThermalMin: return "thermal_min";
    case RowTag::kProspectiveMax: return "prosp_max";
    case RowTag::kProspectiveMin: return "prosp_min";
    case RowTag::kAngleMax: return "angle_max";
    case RowTag::kAngleMin: return "angle_min";
  }
  return "unknown";
}

std::size_t num_candidates(const PlanningStudy& study) { return study.num_psts() + study.num_prospective(); }

std::vector<double> candidate_vector(const Plan& plan) {
  std::vector<double> x;
  for (bool b : plan.pst_built) x.push_back(b ? 1.0 : 0.0);
  for (bool b : plan.lines_built) x.push_back(b ? 1.0 : 0.0);
  return x;
}

Plan plan_from_candidates(const PlanningStudy& study, const std::vector<double>& x) {
  const std::size_t np = study.num_psts(), nl = study.num_prospective();
  if (x.size() != np + nl) throw Error("plan_from_candidates: size mismatch");
  Plan plan;
  for (std::size_t i = 0; i < np; ++i) plan.pst_built.push_back(x[i] >= 0.5);
  for (std::size_t i = 0; i < nl; ++i) plan.lines_built.push_back(x[np + i] >= 0.5);
  return plan;
}

std::vector<bool> affordable_candidates(const PlanningStudy& study) {
  const auto& net = study.network;
  std::vector<bool> out;
  for (auto k : net.pst_candidates()) out.push_back(net.branches[k].pst->invest_cost_musd <= study.pst_budget_musd);
  for (auto k : net.prospective_lines())
    out.push_back(std::get<ProspectiveLine>(net.branches[k].kind).invest_cost_musd <= study.line_budget_musd);
  return out;
}

double big_m_for_line(const Branch& branch) {
  if (!(branch.reactance_pu > 0.0)) throw ValidationError("branch " + branch.id, "reactance must be positive");
  return 2.0 * std::numbers::pi / branch.reactance_pu;
}

ScenarioMatrices assemble_scenario_matrices(const PlanningStudy& study, std::size_t t) {
  const auto& net = study.network;
  const auto& scen = study.scenarios.at(t);
  const double base = study.mva_base;
  const auto psts = net.pst_candidates();
  const auto lines = net.prospective_lines();
  const std::size_t nb = net.buses.size(), ng = net.generators.size(), nw = net.wind_farms.size();
  const std::size_t nk = net.branches.size(), np = psts.size(), nl = lines.size();
  std::vector<int> pst_slot(nk, -1), line_slot(nk, -1);
  for (std::size_t p = 0; p < np; ++p) pst_slot[psts[p]] = static_cast<int>(p);
  for (std::size_t l = 0; l < nl; ++l) line_slot[lines[l]] = static_cast<int>(l);

  ScenarioMatrices sm;
  sm.gen_offset = 0;
  sm.wind_offset = ng;
  sm.flow_offset = ng + nw;
  sm.pst_offset = ng + nw + nk;
  sm.angle_offset = ng + nw + nk + np;
  for (std::size_t n = 0; n < ng; ++n) {
    sm.columns.push_back({"g:" + net.generators[n].id, ColumnKind::kGeneration, n});
    sm.w.push_back(net.generators[n].marginal_cost * base);
  }
  for (std::size_t w = 0; w < nw; ++w) {
    sm.columns.push_back({"w:" + net.wind_farms[w].id, ColumnKind::kWind, w});
    sm.w.push_back(0.0);
  }
  for (std::size_t k = 0; k < nk; ++k) {
    sm.columns.push_back({"f:" + net.branches[k].id, ColumnKind::kFlow, k});
    sm.w.push_back(0.0);
  }
  for (std::size_t p = 0; p < np; ++p) {
    sm.columns.push_back({"psi:" + net.branches[psts[p]].id, ColumnKind::kPstShift, psts[p]});
    sm.w.push_back(0.0);
  }
  for (std::size_t i = 0; i < nb; ++i) {
    sm.columns.push_back({"th:" + bus_name(net.buses[i]), ColumnKind::kAngle, i});
    sm.w.push_back(0.0);
  }

  auto theta = [&](BusId id) { return sm.angle_offset + net.bus_index(id); };

  RowSink eq;
  std::vector<double> demand = bus_demand_mw(study, t);
  for (std::size_t i = 0; i < nb; ++i)
    eq.add(RowTag::kBalance, i, "balance:" + bus_name(net.buses[i]), -demand[i] / base);
  for (std::size_t n = 0; n < ng; ++n) eq.coef(static_cast<int>(net.bus_index(net.generators[n].bus)), sm.gen_offset + n, -1.0);
  for (std::size_t w = 0; w < nw; ++w)
    eq.coef(static_cast<int>(net.bus_index(net.wind_farms[w].bus)), sm.wind_offset + w, -1.0);
  for (std::size_t k = 0; k < nk; ++k) {
    const auto& br = net.branches[k];
    eq.coef(static_cast<int>(net.bus_index(br.from_bus)), sm.flow_offset + k, 1.0);
    eq.coef(static_cast<int>(net.bus_index(br.to_bus)), sm.flow_offset + k, -1.0);
  }
  for (std::size_t k = 0; k < nk; ++k) {
    const auto& br = net.branches[k];
    if (br.is_prospective()) continue;
    const double b = br.susceptance_pu();
    const bool has_pst = pst_slot[k] >= 0;
    const int row = eq.add(has_pst ? RowTag::kPstFlow : RowTag::kLineFlow, k,
                           (has_pst ? "pst_flow:" : "flow:") + br.id, 0.0);
    eq.coef(row, sm.flow_offset + k, 1.0);
    eq.coef(row, theta(br.from_bus), -b);
    eq.coef(row, theta(br.to_bus), b);
    if (has_pst) eq.coef(row, sm.pst_offset + static_cast<std::size_t>(pst_slot[k]), -b);
  }
  {
    const std::size_t ref = net.reference_bus_index();
    const int row = eq.add(RowTag::kReference, ref, "reference:" + bus_name(net.buses[ref]), 0.0);
    eq.coef(row, sm.angle_offset + ref, 1.0);
  }

  RowSink in;
  for (std::size_t p = 0; p < np; ++p) {
    const auto& br = net.branches[psts[p]];
    int row = in.add(RowTag::kPstAngleMax, psts[p], "pst_max:" + br.id, 0.0);
    in.coef(row, sm.pst_offset + p, 1.0);
    in.coupling(row, p, -br.pst->angle_max_rad);
    row = in.add(RowTag::kPstAngleMin, psts[p], "pst_min:" + br.id, 0.0);
    in.coef(row, sm.pst_offset + p, -1.0);
    in.coupling(row, p, br.pst->angle_min_rad);
  }
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& br = net.branches[lines[l]];
    const double b = br.susceptance_pu(), m = big_m_for_line(br);
    for (double sign : {1.0, -1.0}) {
      const int row = in.add(sign > 0 ? RowTag::kDisjunctionUpper : RowTag::kDisjunctionLower, lines[l],
                             (sign > 0 ? "disj_up:" : "disj_lo:") + br.id, m);
      in.coef(row, sm.flow_offset + lines[l], sign);
      in.coef(row, theta(br.from_bus), -sign * b);
      in.coef(row, theta(br.to_bus), sign * b);
      in.coupling(row, np + l, m);
    }
  }
  for (std::size_t n = 0; n < ng; ++n) {
    const auto& g = net.generators[n];
    int row = in.add(RowTag::kGenMax, n, "gen_max:" + g.id, g.p_max_mw / base);
    in.coef(row, sm.gen_offset + n, 1.0);
    row = in.add(RowTag::kGenMin, n, "gen_min:" + g.id, -g.p_min_mw / base);
    in.coef(row, sm.gen_offset + n, -1.0);
  }
  for (std::size_t w = 0; w < nw; ++w) {
    const auto& wf = net.wind_farms[w];
    int row = in.add(RowTag::kWindMax, w, "wind_max:" + wf.id, wf.capacity_mw * scen.wind_cf[w] / base);
    in.coef(row, sm.wind_offset + w, 1.0);
    row = in.add(RowTag::kWindMin, w, "wind_min:" + wf.id, 0.0);
    in.coef(row, sm.wind_offset + w, -1.0);
  }
  for (std::size_t k = 0; k < nk; ++k) {
    const auto& br = net.branches[k];
    if (br.is_prospective()) continue;
    int row = in.add(RowTag::kThermalMax, k, "thermal_max:" + br.id, br.rating_mva / base);
    in.coef(row, sm.flow_offset + k, 1.0);
    row = in.add(RowTag::kThermalMin, k, "thermal_min:" + br.id, br.rating_mva / base);
    in.coef(row, sm.flow_offset + k, -1.0);
  }
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& br = net.branches[lines[l]];
    for (double sign : {1.0, -1.0}) {
      const int row = in.add(sign > 0 ? RowTag::kProspectiveMax : RowTag::kProspectiveMin, lines[l],
                             (sign > 0 ? "prosp_max:" : "prosp_min:") + br.id, 0.0);
      in.coef(row, sm.flow_offset + lines[l], sign);
      in.coupling(row, np + l, -br.rating_mva / base);
    }
  }
  const std::size_t ref = net.reference_bus_index();
  for (std::size_t i = 0; i < nb; ++i) {
    if (i == ref) continue;
    int row = in.add(RowTag::kAngleMax, i, "angle_max:" + bus_name(net.buses[i]), std::numbers::pi);
    in.coef(row, sm.angle_offset + i, 1.0);
    row = in.add(RowTag::kAngleMin, i, "angle_min:" + bus_name(net.buses[i]), std::numbers::pi);
    in.coef(row, sm.angle_offset + i, -1.0);
  }

  const int ncol = static_cast<int>(sm.columns.size());
  sm.E = from_triplets(static_cast<int>(eq.rhs.size()), ncol, eq.p);
  sm.h = std::move(eq.rhs);
  sm.equality_rows = std::move(eq.info);
  sm.P = from_triplets(static_cast<int>(in.rhs.size()), ncol, in.p);
  sm.K = from_triplets(static_cast<int>(in.rhs.size()), static_cast<int>(np + nl), in.k);
  sm.r = std::move(in.rhs);
  sm.inequality_rows = std::move(in.info);
  return sm;
}

LpProblem lower_level_lp(const ScenarioMatrices& sm, const std::vector<double>& x) {
  if (x.size() != static_cast<std::size_t>(sm.K.cols())) throw Error("lower_level_lp: candidate vector size mismatch");
  LpProblem lp;
  lp.cost = sm.w;
  lp.inequality = sm.P;
  lp.inequality_rhs = sm.r;
  for (int j = 0; j < sm.K.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(sm.K, j); it; ++it) lp.inequality_rhs[it.row()] -= it.value() * x[j];
  lp.equality = sm.E;
  lp.equality_rhs = sm.h;
  lp.lower.assign(sm.num_columns(), -kInfinity);
  lp.upper.assign(sm.num_columns(), kInfinity);
  return lp;
}

std::vector<double> payment_coefficients(const PlanningStudy& study, const ScenarioMatrices& sm, std::size_t t) {
  const double hours = study.scenarios.at(t).hours;
  std::vector<double> c(sm.h.size(), 0.0);
  for (std::size_t i = 0; i < sm.h.size(); ++i)
    if (sm.equality_rows[i].tag == RowTag::kBalance) c[i] = hours * -sm.h[i] * 1e-6;
  return c;
}

std::vector<BilinearTerm> bilinear_terms(const ScenarioMatrices& sm) {
  std::vector<BilinearTerm> out;
  for (int j = 0; j < sm.K.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(sm.K, j); it; ++it)
      if (it.value() != 0.0) out.push_back({static_cast<int>(it.row()), j, it.value()});
  std::sort(out.begin(), out.end(), [](const BilinearTerm& a, const BilinearTerm& b) { return a.row < b.row; });
  return out;
}

DualSystem build_dual_system(const ScenarioMatrices& sm) {
  const auto mi = static_cast<int>(sm.r.size());
  std::vector<Triplet> trips;
  for (int j = 0; j < sm.P.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(sm.P, j); it; ++it) trips.emplace_back(j, it.row(), it.value());
  for (int j = 0; j < sm.E.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(sm.E, j); it; ++it) trips.emplace_back(j, mi + it.row(), it.value());
  DualSystem d;
  d.matrix = from_triplets(static_cast<int>(sm.num_columns()), mi + static_cast<int>(sm.h.size()), trips);
  for (std::size_t j = 0; j < sm.num_columns(); ++j) {
    d.rhs.push_back(-sm.w[j]);
    d.names.push_back("dual:" + sm.columns[j].name);
  }
  return d;
}

StrongDualityRow build_strong_duality_row(const ScenarioMatrices& sm) {
  return {sm.w, sm.r, sm.h, bilinear_terms(sm)};
}

int linearize_bilinear(LpBuilder& b, int x, int mu, double big_m) {
  if (!(big_m > 0.0)) throw ValidationError("linearization", "dual big-M must be positive");
  const int z = b.add_variable(0.0, big_m);
  b.add_inequality({{z, 1.0}, {x, -big_m}}, 0.0);
  b.add_inequality({{z, 1.0}, {mu, -1.0}}, 0.0);
  b.add_inequality({{mu, 1.0}, {z, -1.0}, {x, big_m}}, big_m);
  return z;
}

SingleLevelMilp build_single_level_milp(const PlanningStudy& study) {
  return build_single_level_milp(study, study.dual_big_m);
}

SingleLevelMilp build_single_level_milp(const PlanningStudy& study, double big_m) {
  require_valid(study);
  if (study.scenarios.empty()) throw ValidationError("study", "at least one scenario is required");
  if (!(big_m > 0.0)) throw ValidationError("study", "dual big-M must be positive");
  const auto& net = study.network;

  SingleLevelMilp model;
  model.dual_big_m = big_m;
  model.affordable = affordable_candidates(study);
  LpBuilder b;
  auto& names = model.milp.variable_names;
  auto& ineq_names = model.milp.inequality_names;
  auto& eq_names = model.milp.equality_names;

  const auto annual = annualized_candidate_costs(study);
  const auto psts = net.pst_candidates();
  const auto lines = net.prospective_lines();
  std::vector<double> capital;
  for (auto k : psts) capital.push_back(net.branches[k].pst->invest_cost_musd);
  for (auto k : lines) capital.push_back(std::get<ProspectiveLine>(net.branches[k].kind).invest_cost_musd);
  for (std::size_t c = 0; c < annual.size(); ++c) {
    const bool is_pst = c < psts.size();
    const auto& br = net.branches[is_pst ? psts[c] : lines[c - psts.size()]];
    const int col = b.add_variable(0.0, model.affordable[c] ? 1.0 : 0.0, annual[c]);
    names.push_back((is_pst ? "delta:" : "alpha:") + br.id);
    model.candidate_columns.push_back(col);
    if (model.affordable[c]) model.milp.binaries.push_back(col);
  }

  auto budget_row = [&](std::size_t first, std::size_t last, double budget, const char* name) {
    if (!std::isfinite(budget)) return;
    std::vector<std::pair<int, double>> terms;
    double scale = 0.0;
    for (std::size_t c = first; c < last; ++c)
      if (model.affordable[c] && capital[c] > 0.0) scale = std::max(scale, capital[c]);
    if (scale == 0.0) return;
    for (std::size_t c = first; c < last; ++c)
      if (model.affordable[c] && capital[c] > 0.0) terms.emplace_back(model.candidate_columns[c], capital[c] / scale);
    b.add_inequality(terms, budget / scale);
    ineq_names.emplace_back(name);
  };
  budget_row(0, psts.size(), study.pst_budget_musd, "budget:pst");
  budget_row(psts.size(), capital.size(), study.line_budget_musd, "budget:line");

  for (std::size_t t = 0; t < study.scenarios.size(); ++t) {
    ScenarioBlock blk;
    blk.sm = assemble_scenario_matrices(study, t);
    const auto& sm = blk.sm;
    const std::string pre = fmt::format("s{}.", t + 1);
    const auto pay = payment_coefficients(study, sm, t);
    const auto terms = bilinear_terms(sm);
    std::vector<int> coupled(sm.r.size(), -1);
    for (const auto& bt : terms)
      if (model.affordable[static_cast<std::size_t>(bt.candidate)]) coupled[bt.row] = bt.candidate;

    blk.y_offset = b.num_variables();
    for (const auto& c : sm.columns) {
      b.add_variable(-kInfinity, kInfinity);
      names.push_back(pre + c.name);
    }
    blk.mu_offset = b.num_variables();
    for (std::size_t r = 0; r < sm.r.size(); ++r) {
      b.add_variable(0.0, coupled[r] >= 0 ? big_m : kInfinity);
      names.push_back(pre + "mu." + sm.inequality_rows[r].name);
    }
    blk.lambda_offset = b.num_variables();
    for (std::size_t r = 0; r < sm.h.size(); ++r) {
      b.add_variable(-kInfinity, kInfinity, pay[r]);
      names.push_back(pre + "lambda." + sm.equality_rows[r].name);
    }

    // primal rows
    const auto prow = rows_of(sm.P);
    const auto krow = rows_of(sm.K);
    for (std::size_t r = 0; r < sm.r.size(); ++r) {
      std::vector<std::pair<int, double>> t_terms;
      for (auto [j, v] : prow[r]) t_terms.emplace_back(blk.y_offset + j, v);
      for (auto [j, v] : krow[r]) t_terms.emplace_back(model.candidate_columns[static_cast<std::size_t>(j)], v);
      b.add_inequality(t_terms, sm.r[r]);
      ineq_names.push_back(pre + sm.inequality_rows[r].name);
    }
    const auto erow = rows_of(sm.E);
    for (std::size_t r = 0; r < sm.h.size(); ++r) {
      std::vector<std::pair<int, double>> t_terms;
      for (auto [j, v] : erow[r]) t_terms.emplace_back(blk.y_offset + j, v);
      b.add_equality(t_terms, sm.h[r]);
      eq_names.push_back(pre + sm.equality_rows[r].name);
    }

    // dual stationarity
    const auto dual = build_dual_system(sm);
    const auto drow = rows_of(dual.matrix);
    const int mi = static_cast<int>(sm.r.size());
    for (std::size_t j = 0; j < sm.num_columns(); ++j) {
      std::vector<std::pair<int, double>> t_terms;
      for (auto [c, v] : drow[j])
        t_terms.emplace_back(c < mi ? blk.mu_offset + c : blk.lambda_offset + (c - mi), v);
      b.add_equality(t_terms, dual.rhs[j]);
      eq_names.push_back(pre + dual.names[j]);
    }

    // linearized bilinear products
    blk.z_column.assign(sm.r.size(), -1);
    blk.z_candidate.assign(sm.r.size(), -1);
    for (std::size_t r = 0; r < sm.r.size(); ++r) {
      if (coupled[r] < 0) continue;
      const int z = linearize_bilinear(b, model.candidate_columns[static_cast<std::size_t>(coupled[r])],
                                       blk.mu_offset + static_cast<int>(r), big_m);
      names.push_back(pre + "z." + sm.inequality_rows[r].name);
      for (const char* tag : {"lin_xm.", "lin_mu.", "lin_lo."})
        ineq_names.push_back(pre + tag + sm.inequality_rows[r].name);
      blk.z_column[r] = z;
      blk.z_candidate[r] = coupled[r];
    }

    // strong duality, equilibrated
    const auto sd = build_strong_duality_row(sm);
    std::vector<std::pair<int, double>> sd_terms;
    for (std::size_t j = 0; j < sd.y_coefficients.size(); ++j)
      sd_terms.emplace_back(blk.y_offset + static_cast<int>(j), sd.y_coefficients[j]);
    for (std::size_t r = 0; r < sd.mu_coefficients.size(); ++r)
      sd_terms.emplace_back(blk.mu_offset + static_cast<int>(r), sd.mu_coefficients[r]);
    for (std::size_t r = 0; r < sd.lambda_coefficients.size(); ++r)
      sd_terms.emplace_back(blk.lambda_offset + static_cast<int>(r), sd.lambda_coefficients[r]);
    for (const auto& bt : sd.bilinear)
      if (blk.z_column[bt.row] >= 0) sd_terms.emplace_back(blk.z_column[bt.row], -bt.coefficient);
    double scale = 0.0;
    for (auto& [j, v] : sd_terms) scale = std::max(scale, std::abs(v));
    blk.strong_duality_scale = scale > 0.0 ? 1.0 / scale : 1.0;
    for (auto& [j, v] : sd_terms) v *= blk.strong_duality_scale;
    blk.strong_duality_row = b.add_equality(sd_terms, 0.0);
    eq_names.push_back(pre + "strong_duality");

    model.blocks.push_back(std::move(blk));
  }

  model.milp.lp = b.build();
  model.milp.mipgap = 0.001;
  return model;
}

namespace {

std::vector<double> candidate_values(const SingleLevelMilp& model, const std::vector<double>& x) {
  std::vector<double> c;
  for (int col : model.candidate_columns) c.push_back(std::round(x[static_cast<std::size_t>(col)]));
  return c;
}

}  // namespace

AuditReport audit_solution(const PlanningStudy& study, const SingleLevelMilp& model, const std::vector<double>& x) {
  AuditReport a;
  const auto& lp = model.milp.lp;
  LpSolution probe;
  probe.x = x;
  a.primal_residual = certify(lp, probe).primal_residual;
  for (int j : model.milp.binaries) {
    const double v = x[static_cast<std::size_t>(j)];
    a.primal_residual = std::max(a.primal_residual, std::abs(v - std::round(v)) > 1e-6 ? std::abs(v - std::round(v)) : 0.0);
  }
  const auto xc = candidate_values(model, x);

  for (std::size_t t = 0; t < model.blocks.size(); ++t) {
    const auto& blk = model.blocks[t];
    const auto& sm = blk.sm;
    auto y = [&](std::size_t j) { return x[static_cast<std::size_t>(blk.y_offset) + j]; };
    auto mu = [&](std::size_t r) { return x[static_cast<std::size_t>(blk.mu_offset) + r]; };
    auto lam = [&](std::size_t r) { return x[static_cast<std::size_t>(blk.lambda_offset) + r]; };

    // dual feasibility: stationarity rows and mu >= 0
    const auto dual = build_dual_system(sm);
    const int mi = static_cast<int>(sm.r.size());
    std::vector<double> resid(sm.num_columns(), 0.0), norm(sm.num_columns(), 1.0);
    for (int c = 0; c < dual.matrix.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(dual.matrix, c); it; ++it) {
        const double v = c < mi ? mu(static_cast<std::size_t>(c)) : lam(static_cast<std::size_t>(c - mi));
        resid[it.row()] += it.value() * v;
        norm[it.row()] = std::max(norm[it.row()], std::abs(it.value()));
      }
    for (std::size_t j = 0; j < resid.size(); ++j)
      a.dual_residual = std::max(a.dual_residual, std::abs(resid[j] - dual.rhs[j]) / norm[j]);
    for (std::size_t r = 0; r < sm.r.size(); ++r) a.dual_residual = std::max(a.dual_residual, -mu(r));

    // strong duality with the exact products x*mu
    double primal = 0.0, dual_obj = 0.0;
    for (std::size_t j = 0; j < sm.num_columns(); ++j) primal += sm.w[j] * y(j);
    for (std::size_t r = 0; r < sm.r.size(); ++r) dual_obj -= sm.r[r] * mu(r);
    for (std::size_t r = 0; r < sm.h.size(); ++r) dual_obj -= sm.h[r] * lam(r);
    for (int j = 0; j < sm.K.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(sm.K, j); it; ++it) dual_obj += it.value() * xc[j] * mu(it.row());
    a.strong_duality_residual =
        std::max(a.strong_duality_residual, std::abs(primal - dual_obj) / (1.0 + std::abs(primal)));

    // disjunctions and dual bounds
    const auto& net = study.network;
    std::vector<std::size_t> cand_of_row(sm.r.size(), 0);
    for (const auto& bt : bilinear_terms(sm)) cand_of_row[bt.row] = static_cast<std::size_t>(bt.candidate);
    for (std::size_t r = 0; r < sm.r.size(); ++r) {
      const auto& row = sm.inequality_rows[r];
      if (row.tag == RowTag::kDisjunctionUpper) {
        const auto& br = net.branches[row.entity];
        const double dtheta = y(sm.angle_offset + net.bus_index(br.from_bus)) -
                              y(sm.angle_offset + net.bus_index(br.to_bus));
        const double mismatch = y(sm.flow_offset + row.entity) - br.susceptance_pu() * dtheta;
        const std::size_t cand = cand_of_row[r];
        const double m = big_m_for_line(br);
        if (xc[cand] > 0.5) {
          if (std::abs(mismatch) > kAuditPrimalTolerance * std::max(1.0, m))
            a.failures.push_back(fmt::format("scenario {} line {}: built line violates P = b*dtheta", t + 1, br.id));
        } else {
          const double slack = (m - std::abs(mismatch)) / m;
          a.min_disjunction_slack = std::min(a.min_disjunction_slack, slack);
          if (slack <= kAuditPrimalTolerance)
            a.failures.push_back(fmt::format("scenario {} line {}: disjunctive big-M binding", t + 1, br.id));
        }
      }
      if (blk.z_column[r] >= 0 && mu(r) >= model.dual_big_m * (1.0 - kMuBoundTolerance))
        a.mu_at_bound.push_back(model.milp.variable_names[static_cast<std::size_t>(blk.mu_offset) + r]);
    }
  }

  if (a.primal_residual > kAuditPrimalTolerance)
    a.failures.push_back(fmt::format("primal residual {:.3g} exceeds {:.0e}", a.primal_residual, kAuditPrimalTolerance));
  if (a.dual_residual > kAuditDualTolerance)
    a.failures.push_back(fmt::format("dual residual {:.3g} exceeds {:.0e}", a.dual_residual, kAuditDualTolerance));
  if (a.strong_duality_residual > kAuditStrongDualityTolerance)
    a.failures.push_back(fmt::format("strong-duality residual {:.3g} exceeds {:.0e}", a.strong_duality_residual,
                                     kAuditStrongDualityTolerance));
  for (const auto& name : a.mu_at_bound) a.failures.push_back("dual " + name + " at its big-M bound");
  return a;
}

ExtractedSolution extract_solution(const PlanningStudy& study, const SingleLevelMilp& model,
                                   const std::vector<double>& x) {
  const auto& net = study.network;
  const double base = study.mva_base;
  ExtractedSolution out;
  for (int col : model.candidate_columns) {
    const double v = x[static_cast<std::size_t>(col)];
    if (std::abs(v - std::round(v)) > 1e-6)
      throw NumericalError(fmt::format("binary {} not integral ({})", model.milp.variable_names[col], v));
  }
  out.plan = plan_from_candidates(study, candidate_values(model, x));
  const auto inv = plan_investment(out.plan, study);
  out.investment_musd = inv.line_annualized_musd + inv.pst_annualized_musd;

  for (std::size_t t = 0; t < model.blocks.size(); ++t) {
    const auto& blk = model.blocks[t];
    const auto& sm = blk.sm;
    auto y = [&](std::size_t j) { return x[static_cast<std::size_t>(blk.y_offset) + j]; };
    ScenarioDispatch d;
    for (std::size_t n = 0; n < net.generators.size(); ++n) d.generator_mw.push_back(y(sm.gen_offset + n) * base);
    for (std::size_t w = 0; w < net.wind_farms.size(); ++w) d.wind_mw.push_back(y(sm.wind_offset + w) * base);
    for (std::size_t k = 0; k < net.branches.size(); ++k) d.flow_mw.push_back(y(sm.flow_offset + k) * base);
    for (std::size_t p = 0; p < out.plan.pst_built.size(); ++p) {
      d.pst_shift_rad.push_back(y(sm.pst_offset + p));
      d.pst_angle_rad.push_back(out.plan.pst_built[p] ? y(sm.pst_offset + p) : 0.0);
    }
    for (std::size_t i = 0; i < net.buses.size(); ++i) d.angle_rad.push_back(y(sm.angle_offset + i));
    d.lmp.assign(net.buses.size(), 0.0);
    const auto pay = payment_coefficients(study, sm, t);
    for (std::size_t r = 0; r < sm.h.size(); ++r) {
      const double lam = x[static_cast<std::size_t>(blk.lambda_offset) + r];
      out.payment_musd += pay[r] * lam;
      if (sm.equality_rows[r].tag == RowTag::kBalance) d.lmp[sm.equality_rows[r].entity] = lam / base;
    }
    out.dispatch.push_back(std::move(d));
  }
  out.objective_musd = out.investment_musd + out.payment_musd;
  return out;
}

namespace {

// Fixes the binaries and, keeping the objective at its optimum, pushes the
// bilinear duals as low as possible.
constexpr double kCleanupSlack = 1e-8;
constexpr double kCleanupResidual = 1e-9;

std::vector<double> clean_duals(const SingleLevelMilp& model, const MilpSolution& ms) {
  LpProblem lp = model.milp.lp;
  const auto n = lp.num_variables();
  for (int j : model.milp.binaries) lp.lower[j] = lp.upper[j] = std::round(ms.x[static_cast<std::size_t>(j)]);

  const double slack = kCleanupSlack * std::max(1.0, std::abs(ms.objective));
  std::vector<Triplet> trips;
  for (int j = 0; j < lp.inequality.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(lp.inequality, j); it; ++it) trips.emplace_back(it.row(), j, it.value());
  const int row = static_cast<int>(lp.inequality_rhs.size());
  double cmax = 0.0;
  for (double c : lp.cost) cmax = std::max(cmax, std::abs(c));
  if (cmax == 0.0) cmax = 1.0;
  for (std::size_t j = 0; j < n; ++j)
    if (lp.cost[j] != 0.0) trips.emplace_back(row, static_cast<int>(j), lp.cost[j] / cmax);
  lp.inequality.resize(row + 1, static_cast<int>(n));
  lp.inequality.setFromTriplets(trips.begin(), trips.end());
  lp.inequality.makeCompressed();
  lp.inequality_rhs.push_back((ms.objective + slack) / cmax);

  std::fill(lp.cost.begin(), lp.cost.end(), 0.0);
  bool any = false;
  for (const auto& blk : model.blocks)
    for (std::size_t r = 0; r < blk.z_column.size(); ++r)
      if (blk.z_column[r] >= 0) {
        lp.cost[static_cast<std::size_t>(blk.mu_offset) + r] = 1.0 / model.dual_big_m;
        any = true;
      }
  if (!any) return ms.x;

  Basis warm;
  const auto& st = ms.incumbent_lp.basis.state;
  if (!st.empty()) {
    const auto mi = static_cast<std::size_t>(row);
    warm.state.assign(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(n + mi));
    warm.state.push_back(VarState::kBasic);
    warm.state.insert(warm.state.end(), st.begin() + static_cast<std::ptrdiff_t>(n + mi), st.end());
  }
  LpOptions opt;
  opt.warm_start = warm.empty() ? nullptr : &warm;
  auto sol = simplex_solve(lp, opt);
  if (sol.status != LpStatus::kOptimal || certify(lp, sol).primal_residual > kCleanupResidual) return ms.x;
  return sol.x;
}

}  // namespace

PlanningResult plan_study(const PlanningStudy& study, const PlanningOptions& options) {
  PlanningResult res;
  double big_m = study.dual_big_m;
  auto log = [&](const std::string& m) {
    if (options.log) options.log(m);
  };
  for (int attempt = 0;; ++attempt) {
    SingleLevelMilp model = build_single_level_milp(study, big_m);
    res.num_binaries = model.milp.binaries.size();
    res.num_rows = model.milp.lp.num_inequalities() + model.milp.lp.num_equalities();
    res.num_columns = model.milp.lp.num_variables();
    log(fmt::format("single-level MILP: {} rows, {} columns, {} binaries, dual big-M {:g}", res.num_rows,
                    res.num_columns, res.num_binaries, big_m));

    MilpOptions mo;
    mo.mipgap = options.mipgap;
    mo.node_limit = options.node_limit;
    mo.time_limit_s = options.time_limit_s;
    mo.log = options.log;
    if (options.initial_plan) {
      const auto cand = candidate_vector(*options.initial_plan);
      if (cand.size() == model.candidate_columns.size()) {
        bool ok = true;
        std::vector<double> assignment;
        for (std::size_t c = 0; c < cand.size(); ++c) {
          if (cand[c] > 0.5 && !model.affordable[c]) ok = false;
          if (model.affordable[c]) assignment.push_back(cand[c]);
        }
        if (ok && plan_investment(*options.initial_plan, study).within_budget()) mo.initial_assignment = assignment;
      }
    }
    res.milp = branch_and_bound(model.milp, mo);
    if (!res.milp.has_incumbent) {
      if (res.milp.status == MilpStatus::kInfeasible)
        throw InfeasibleError("single-level MILP is infeasible: no plan admits a feasible market clearing");
      throw NumericalError("branch and bound stopped (" + to_string(res.milp.status) + ") without an incumbent");
    }
    const auto x = clean_duals(model, res.milp);
    res.audit = audit_solution(study, model, x);
    res.solution = extract_solution(study, model, x);
    res.dual_big_m_used = big_m;
    if (res.audit.mu_at_bound.empty() || !options.escalate_big_m || attempt >= 1) break;
    log(fmt::format("{} bilinear duals at the bound {:g}; re-solving at {:g}", res.audit.mu_at_bound.size(), big_m,
                    big_m * 10.0));
    big_m *= 10.0;
    ++res.big_m_escalations;
  }
  return res;
}

}  // namespace tepps
