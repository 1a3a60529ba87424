#include "tepps/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>

namespace tepps {

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : Error(line == 0 ? what
                      : fmt::format("{} (line {}, column {})", what, line, column)),
      line_(line),
      column_(column) {}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::string out = "validation failed:";
  for (const auto& v : violations) out += fmt::format(" [{}: {}]", v.entity, v.rule);
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

ValidationError::ValidationError(std::string entity, std::string rule)
    : ValidationError(std::vector<Violation>{{std::move(entity), std::move(rule)}}) {}

InfeasibleError::InfeasibleError(const std::string& what, int scenario)
    : Error(what), scenario_(scenario) {}

double ProfileCf::apply(double base_cf) const {
  const double cf = adjustment == CfAdjustment::kScale ? base_cf * factor : base_cf + factor;
  return std::clamp(cf, 0.0, 1.0);
}

std::optional<std::size_t> NetworkCase::find_bus(BusId id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  return std::nullopt;
}

std::size_t NetworkCase::bus_index(BusId id) const {
  if (auto i = find_bus(id)) return *i;
  throw ValidationError(fmt::format("bus {}", id.value), "unknown bus");
}

std::size_t NetworkCase::reference_bus_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].is_reference) return i;
  throw ValidationError("network", "no reference bus");
}

std::vector<std::size_t> NetworkCase::pst_candidates() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < branches.size(); ++k)
    if (branches[k].pst) out.push_back(k);
  return out;
}

std::vector<std::size_t> NetworkCase::prospective_lines() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < branches.size(); ++k)
    if (branches[k].is_prospective()) out.push_back(k);
  return out;
}

Plan Plan::empty_for(const PlanningStudy& study) {
  return Plan{std::vector<bool>(study.num_psts(), false),
              std::vector<bool>(study.num_prospective(), false)};
}

std::vector<Violation> validate_study(const PlanningStudy& study) {
  std::vector<Violation> out;
  auto add = [&out](std::string entity, std::string rule) {
    out.push_back({std::move(entity), std::move(rule)});
  };
  const NetworkCase& net = study.network;

  if (net.buses.empty()) add("network", "no buses");
  std::set<BusId> bus_ids;
  int references = 0;
  for (const auto& bus : net.buses) {
    if (!bus_ids.insert(bus.id).second) add(fmt::format("bus {}", bus.id.value), "duplicate bus id");
    if (bus.is_reference) ++references;
  }
  if (references == 0 && !net.buses.empty()) add("network", "no reference bus");
  if (references > 1) add("network", "multiple reference buses");

  auto check_bus = [&](const std::string& entity, BusId id) {
    if (!bus_ids.contains(id)) add(entity, fmt::format("unknown bus {}", id.value));
  };

  std::set<std::string> ids;
  auto check_id = [&](const std::string& kind, const std::string& id) {
    if (!ids.insert(kind + ":" + id).second) add(kind + " " + id, "duplicate id");
  };

  for (const auto& g : net.generators) {
    const std::string entity = "generator " + g.id;
    check_id("generator", g.id);
    check_bus(entity, g.bus);
    if (!(g.p_min_mw >= 0.0 && g.p_min_mw <= g.p_max_mw)) add(entity, "requires 0 <= p_min <= p_max");
    if (!std::isfinite(g.marginal_cost)) add(entity, "marginal cost not finite");
  }

  for (const auto& w : net.wind_farms) {
    const std::string entity = "wind farm " + w.id;
    check_id("wind", w.id);
    check_bus(entity, w.bus);
    if (!(w.capacity_mw > 0.0)) add(entity, "capacity must be positive");
    if (const auto* cf = std::get_if<std::vector<double>>(&w.cf_source)) {
      if (cf->size() != study.scenarios.size())
        add(entity, "capacity-factor vector length differs from scenario count");
      for (double v : *cf)
        if (!(v >= 0.0 && v <= 1.0)) add(entity, "capacity factor outside [0, 1]");
    } else {
      const auto& p = std::get<ProfileCf>(w.cf_source);
      if (p.adjustment == CfAdjustment::kScale && !(p.factor > 0.0))
        add(entity, "profile multiplier must be positive");
    }
  }

  for (const auto& d : net.loads) {
    const std::string entity = "load " + d.id;
    check_id("load", d.id);
    check_bus(entity, d.bus);
    if (!(d.peak_demand_mw >= 0.0)) add(entity, "peak demand must be non-negative");
  }

  for (const auto& br : net.branches) {
    const std::string entity = "branch " + br.id;
    check_id("branch", br.id);
    check_bus(entity, br.from_bus);
    check_bus(entity, br.to_bus);
    if (br.from_bus == br.to_bus) add(entity, "from_bus equals to_bus");
    if (!(br.reactance_pu > 0.0)) add(entity, "reactance must be positive");
    if (!(br.rating_mva > 0.0)) add(entity, "rating must be positive");
    if (const auto* p = std::get_if<ProspectiveLine>(&br.kind))
      if (!(p->invest_cost_musd >= 0.0)) add(entity, "investment cost must be non-negative");
    if (br.pst) {
      if (br.is_prospective()) add(entity, "PST on non-existing branch");
      if (!(br.pst->angle_min_rad < 0.0 && 0.0 < br.pst->angle_max_rad))
        add(entity, "PST angle range must satisfy angle_min < 0 < angle_max");
      if (!(br.pst->invest_cost_musd >= 0.0)) add(entity, "PST cost must be non-negative");
    }
  }

  for (std::size_t t = 0; t < study.scenarios.size(); ++t) {
    const auto& s = study.scenarios[t];
    const std::string entity = fmt::format("scenario {}", t + 1);
    if (!(s.hours > 0.0)) add(entity, "hours must be positive");
    if (!(s.load_level >= 0.0) || !std::isfinite(s.load_level)) add(entity, "load level must be non-negative");
    if (s.wind_cf.size() != net.wind_farms.size())
      add(entity, "wind_cf length differs from wind-farm count");
    for (double v : s.wind_cf)
      if (!(v >= 0.0 && v <= 1.0)) add(entity, "capacity factor outside [0, 1]");
  }

  if (!(study.pst_budget_musd >= 0.0)) add("budgets", "PST budget must be non-negative");
  if (!(study.line_budget_musd >= 0.0)) add("budgets", "line budget must be non-negative");
  const auto& e = study.economics;
  if (!(e.interest_rate >= 0.0)) add("economics", "interest rate must be non-negative");
  if (e.line_lifetime_years < 1 || e.pst_lifetime_years < 1) add("economics", "lifetimes must be >= 1");
  if (!(e.pst_unit_cost_per_kva >= 0.0)) add("economics", "PST unit cost must be non-negative");
  if (!(study.mva_base > 0.0)) add("study", "mva_base must be positive");
  if (!(study.dual_big_m > 0.0)) add("study", "dual_big_m must be positive");
  return out;
}

void require_valid(const PlanningStudy& study) {
  auto violations = validate_study(study);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

std::vector<double> bus_demand_mw(const PlanningStudy& study, std::size_t scenario) {
  const auto& net = study.network;
  std::vector<double> demand(net.buses.size(), 0.0);
  const double level = study.scenarios.at(scenario).load_level;
  for (const auto& d : net.loads) demand[net.bus_index(d.bus)] += d.peak_demand_mw * level;
  return demand;
}

std::vector<Violation> check_dispatch(const PlanningStudy& study, const Plan& plan,
                                      std::size_t t, const ScenarioDispatch& d,
                                      double tol) {
  std::vector<Violation> out;
  const auto& net = study.network;
  const auto& scen = study.scenarios.at(t);
  auto add = [&](std::string entity, std::string rule) {
    out.push_back({fmt::format("scenario {} {}", t + 1, entity), std::move(rule)});
  };
  if (d.generator_mw.size() != net.generators.size() || d.wind_mw.size() != net.wind_farms.size() ||
      d.flow_mw.size() != net.branches.size() || d.angle_rad.size() != net.buses.size() ||
      d.lmp.size() != net.buses.size() || d.pst_shift_rad.size() != plan.pst_built.size() ||
      d.pst_angle_rad.size() != plan.pst_built.size()) {
    add("dispatch", "dimension mismatch");
    return out;
  }

  std::vector<double> injection(net.buses.size(), 0.0);
  auto demand = bus_demand_mw(study, t);
  for (std::size_t i = 0; i < demand.size(); ++i) injection[i] -= demand[i];
  for (std::size_t n = 0; n < net.generators.size(); ++n) {
    const auto& g = net.generators[n];
    injection[net.bus_index(g.bus)] += d.generator_mw[n];
    if (d.generator_mw[n] < g.p_min_mw - tol || d.generator_mw[n] > g.p_max_mw + tol)
      add("generator " + g.id, "output outside limits");
  }
  for (std::size_t w = 0; w < net.wind_farms.size(); ++w) {
    const auto& wf = net.wind_farms[w];
    injection[net.bus_index(wf.bus)] += d.wind_mw[w];
    const double avail = wf.capacity_mw * scen.wind_cf[w];
    if (d.wind_mw[w] < -tol || d.wind_mw[w] > avail + tol) add("wind " + wf.id, "output outside availability");
  }

  const auto psts = net.pst_candidates();
  const auto lines = net.prospective_lines();
  std::vector<int> pst_slot(net.branches.size(), -1), line_slot(net.branches.size(), -1);
  for (std::size_t p = 0; p < psts.size(); ++p) pst_slot[psts[p]] = static_cast<int>(p);
  for (std::size_t l = 0; l < lines.size(); ++l) line_slot[lines[l]] = static_cast<int>(l);

  const double base = study.mva_base;
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    const std::size_t f = net.bus_index(br.from_bus), to = net.bus_index(br.to_bus);
    injection[f] -= d.flow_mw[k];
    injection[to] += d.flow_mw[k];
    const double angle_diff = d.angle_rad[f] - d.angle_rad[to];
    double expected = br.susceptance_pu() * angle_diff * base;
    double limit = br.rating_mva;
    if (pst_slot[k] >= 0) {
      const auto p = static_cast<std::size_t>(pst_slot[k]);
      const double shift = d.pst_shift_rad[p];
      expected += br.susceptance_pu() * shift * base;
      if (plan.pst_built[p]) {
        if (shift < br.pst->angle_min_rad - 1e-9 || shift > br.pst->angle_max_rad + 1e-9)
          add("branch " + br.id, "PST angle outside range");
        if (std::abs(d.pst_angle_rad[p] - shift) > 1e-12) add("branch " + br.id, "PST angle differs from shift");
      } else if (std::abs(shift) > 1e-9 || d.pst_angle_rad[p] != 0.0) {
        add("branch " + br.id, "nonzero PST shift without PST");
      }
    }
    if (line_slot[k] >= 0 && !plan.lines_built[static_cast<std::size_t>(line_slot[k])]) {
      expected = 0.0;
      limit = 0.0;
    }
    if (std::abs(d.flow_mw[k] - expected) > tol * (1.0 + std::abs(expected)))
      add("branch " + br.id, "flow differs from DC power flow");
    if (std::abs(d.flow_mw[k]) > limit + tol) add("branch " + br.id, "thermal limit exceeded");
  }

  const std::size_t ref = net.reference_bus_index();
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    if (std::abs(injection[i]) > tol * (1.0 + demand[i]))
      add(fmt::format("bus {}", net.buses[i].id.value), "power balance violated");
    if (i == ref && std::abs(d.angle_rad[i]) > 1e-9) add("reference bus", "angle not zero");
    if (std::abs(d.angle_rad[i]) > std::numbers::pi + 1e-9)
      add(fmt::format("bus {}", net.buses[i].id.value), "angle outside [-pi, pi]");
  }
  return out;
}

}  // namespace tepps
