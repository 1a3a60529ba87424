#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "tepps/case_ingest.hpp"
#include "tepps/costs.hpp"

namespace tepps {

NetworkCase network_from_case(const RawCaseFile& raw) {
  NetworkCase net;
  for (const auto& b : raw.buses) {
    net.buses.push_back({BusId{b.id}, b.type == 3});
    if (b.load_mw != 0.0) net.loads.push_back({fmt::format("D{}", b.id), BusId{b.id}, b.load_mw});
  }
  for (std::size_t n = 0; n < raw.generators.size(); ++n) {
    const auto& g = raw.generators[n];
    net.generators.push_back(
        {fmt::format("G{}", n + 1), BusId{g.bus}, marginal_cost(g), g.p_min_mw, g.p_max_mw});
  }
  for (std::size_t k = 0; k < raw.branches.size(); ++k) {
    const auto& br = raw.branches[k];
    Branch b;
    b.id = fmt::format("L{}", k + 1);
    b.from_bus = BusId{br.from_bus};
    b.to_bus = BusId{br.to_bus};
    b.reactance_pu = br.reactance_pu;
    b.rating_mva = br.rating_mva;
    net.branches.push_back(std::move(b));
  }
  return net;
}

PlanningStudy assemble_study(const RawCaseFile& raw, const std::vector<ScenarioRow>& scenarios,
                             const ExpansionOptions& options) {
  PlanningStudy study;
  study.network = network_from_case(raw);
  study.mva_base = raw.mva_base;
  study.economics = options.economics;
  study.pst_budget_musd = options.budgets.pst_musd;
  study.line_budget_musd = options.budgets.line_musd;
  study.dual_big_m = options.dual_big_m;
  NetworkCase& net = study.network;

  std::map<std::string, int> wind_ids;
  for (const auto& spec : options.wind_farms) {
    std::string id = fmt::format("W{}", spec.bus);
    if (int n = ++wind_ids[id]; n > 1) id += fmt::format("_{}", n);
    net.wind_farms.push_back({id, BusId{spec.bus}, spec.capacity_mw, spec.profile});
  }

  for (const auto& spec : options.pst_candidates) {
    auto it = std::find_if(net.branches.begin(), net.branches.end(),
                           [&](const Branch& b) { return b.id == spec.branch_id; });
    if (it == net.branches.end())
      throw ValidationError("PST candidate " + spec.branch_id, "unknown branch id");
    it->pst = PstCandidate{spec.angle_min_rad, spec.angle_max_rad,
                           pst_capital_cost(it->rating_mva, study.economics.pst_unit_cost_per_kva)};
  }

  for (std::size_t l = 0; l < options.prospective_lines.size(); ++l) {
    const auto& spec = options.prospective_lines[l];
    Branch b;
    b.id = fmt::format("P{}", l + 1);
    b.from_bus = BusId{spec.from_bus};
    b.to_bus = BusId{spec.to_bus};
    b.reactance_pu = spec.reactance_pu;
    b.rating_mva = spec.rating_mva;
    b.kind = ProspectiveLine{spec.invest_cost_musd};
    net.branches.push_back(std::move(b));
  }

  for (const auto& row : scenarios_from_table(scenarios)) {
    Scenario s;
    s.load_level = row.load_level;
    s.hours = row.hours;
    for (const auto& w : net.wind_farms) {
      if (const auto* profile = std::get_if<ProfileCf>(&w.cf_source))
        s.wind_cf.push_back(profile->apply(row.wind_cf));
      else
        s.wind_cf.push_back(row.wind_cf);
    }
    study.scenarios.push_back(std::move(s));
  }

  require_valid(study);
  return study;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path));
  out << text;
  if (!out) throw Error(fmt::format("write to '{}' failed", path));
}

}  // namespace tepps
