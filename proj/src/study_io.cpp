#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "tepps/case_ingest.hpp"

namespace tepps {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const json& field(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object()) throw ParseError(fmt::format("{}: expected an object", context));
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(fmt::format("{}: missing field '{}'", context, key));
  return *it;
}

template <typename T>
T get(const json& obj, const char* key, const std::string& context) {
  const json& v = field(obj, key, context);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ParseError(fmt::format("{}: field '{}' has the wrong type", context, key));
  }
}

// Unlimited budgets are written as null.
ordered_json budget_value(double v) { return std::isinf(v) ? ordered_json(nullptr) : ordered_json(v); }

double read_budget(const json& obj, const char* key, const std::string& context) {
  const json& v = field(obj, key, context);
  if (v.is_null()) return kInfinity;
  if (!v.is_number()) throw ParseError(fmt::format("{}: field '{}' must be a number or null", context, key));
  return v.get<double>();
}

const char* adjustment_name(CfAdjustment a) { return a == CfAdjustment::kScale ? "scale" : "offset"; }

CfAdjustment read_adjustment(const std::string& s, const std::string& context) {
  if (s == "scale") return CfAdjustment::kScale;
  if (s == "offset") return CfAdjustment::kOffset;
  throw ParseError(fmt::format("{}: unknown capacity-factor adjustment '{}'", context, s));
}

ordered_json profile_json(const ProfileCf& p) {
  return {{"kind", "profile"}, {"profile", p.profile}, {"mode", adjustment_name(p.adjustment)},
          {"factor", p.factor}};
}

ProfileCf read_profile(const json& j, const std::string& context) {
  return ProfileCf{get<std::string>(j, "profile", context),
                   read_adjustment(get<std::string>(j, "mode", context), context),
                   get<double>(j, "factor", context)};
}

ordered_json network_json(const NetworkCase& net) {
  ordered_json buses = ordered_json::array(), gens = ordered_json::array(),
               winds = ordered_json::array(), loads = ordered_json::array(),
               branches = ordered_json::array();
  for (const auto& b : net.buses) buses.push_back({{"id", b.id.value}, {"is_reference", b.is_reference}});
  for (const auto& g : net.generators)
    gens.push_back({{"id", g.id}, {"bus", g.bus.value}, {"marginal_cost", g.marginal_cost},
                    {"p_min", g.p_min_mw}, {"p_max", g.p_max_mw}});
  for (const auto& w : net.wind_farms) {
    ordered_json source;
    if (const auto* cf = std::get_if<std::vector<double>>(&w.cf_source))
      source = {{"kind", "per_scenario"}, {"values", *cf}};
    else
      source = profile_json(std::get<ProfileCf>(w.cf_source));
    winds.push_back({{"id", w.id}, {"bus", w.bus.value}, {"capacity", w.capacity_mw}, {"cf_source", source}});
  }
  for (const auto& d : net.loads)
    loads.push_back({{"id", d.id}, {"bus", d.bus.value}, {"peak_demand", d.peak_demand_mw}});
  for (const auto& br : net.branches) {
    if (br.is_prospective()) continue;
    ordered_json j = {{"id", br.id}, {"from_bus", br.from_bus.value}, {"to_bus", br.to_bus.value},
                      {"reactance", br.reactance_pu}, {"rating", br.rating_mva}};
    branches.push_back(std::move(j));
  }
  return {{"buses", buses}, {"generators", gens}, {"wind_farms", winds}, {"loads", loads},
          {"branches", branches}};
}

NetworkCase read_network_json(const json& j) {
  NetworkCase net;
  for (const auto& b : get<json>(j, "buses", "network"))
    net.buses.push_back({BusId{get<int>(b, "id", "bus")}, get<bool>(b, "is_reference", "bus")});
  for (const auto& g : get<json>(j, "generators", "network"))
    net.generators.push_back({get<std::string>(g, "id", "generator"), BusId{get<int>(g, "bus", "generator")},
                              get<double>(g, "marginal_cost", "generator"), get<double>(g, "p_min", "generator"),
                              get<double>(g, "p_max", "generator")});
  for (const auto& w : get<json>(j, "wind_farms", "network")) {
    WindFarm farm{get<std::string>(w, "id", "wind farm"), BusId{get<int>(w, "bus", "wind farm")},
                  get<double>(w, "capacity", "wind farm"), ProfileCf{}};
    const json& src = field(w, "cf_source", "wind farm " + farm.id);
    const auto kind = get<std::string>(src, "kind", "cf_source");
    if (kind == "per_scenario")
      farm.cf_source = get<std::vector<double>>(src, "values", "cf_source");
    else if (kind == "profile")
      farm.cf_source = read_profile(src, "cf_source");
    else
      throw ParseError(fmt::format("cf_source: unknown kind '{}'", kind));
    net.wind_farms.push_back(std::move(farm));
  }
  for (const auto& d : get<json>(j, "loads", "network"))
    net.loads.push_back({get<std::string>(d, "id", "load"), BusId{get<int>(d, "bus", "load")},
                         get<double>(d, "peak_demand", "load")});
  for (const auto& b : get<json>(j, "branches", "network")) {
    Branch br;
    br.id = get<std::string>(b, "id", "branch");
    br.from_bus = BusId{get<int>(b, "from_bus", "branch " + br.id)};
    br.to_bus = BusId{get<int>(b, "to_bus", "branch " + br.id)};
    br.reactance_pu = get<double>(b, "reactance", "branch " + br.id);
    br.rating_mva = get<double>(b, "rating", "branch " + br.id);
    net.branches.push_back(std::move(br));
  }
  return net;
}

void check_schema(const json& j) {
  const int version = get<int>(j, "schema_version", "document");
  if (version != kStudySchemaVersion)
    throw ParseError(fmt::format("schema_version {} is not supported (expected {})", version, kStudySchemaVersion));
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("invalid JSON: {}", e.what()));
  }
}

}  // namespace

std::string write_study(const PlanningStudy& study) {
  const auto& net = study.network;
  ordered_json lines = ordered_json::array(), psts = ordered_json::array(), scenarios = ordered_json::array();
  for (const auto& br : net.branches) {
    if (const auto* p = std::get_if<ProspectiveLine>(&br.kind))
      lines.push_back({{"id", br.id}, {"from_bus", br.from_bus.value}, {"to_bus", br.to_bus.value},
                       {"reactance", br.reactance_pu}, {"rating", br.rating_mva},
                       {"invest_cost", p->invest_cost_musd}});
    if (br.pst)
      psts.push_back({{"branch", br.id}, {"angle_min", br.pst->angle_min_rad},
                      {"angle_max", br.pst->angle_max_rad}, {"invest_cost", br.pst->invest_cost_musd}});
  }
  for (const auto& s : study.scenarios)
    scenarios.push_back({{"load_level", s.load_level}, {"wind_cf", s.wind_cf}, {"hours", s.hours}});
  const auto& e = study.economics;
  ordered_json doc = {
      {"schema_version", kStudySchemaVersion},
      {"mva_base", study.mva_base},
      {"network", network_json(net)},
      {"candidates", {{"lines", lines}, {"psts", psts}}},
      {"scenarios", scenarios},
      {"budgets", {{"pst", budget_value(study.pst_budget_musd)}, {"line", budget_value(study.line_budget_musd)}}},
      {"economics",
       {{"interest_rate", e.interest_rate}, {"line_lifetime", e.line_lifetime_years},
        {"pst_lifetime", e.pst_lifetime_years}, {"pst_unit_cost", e.pst_unit_cost_per_kva}}},
      {"dual_big_m", study.dual_big_m}};
  return doc.dump(2) + "\n";
}

PlanningStudy read_study(std::string_view text) {
  const json j = parse_json(text);
  check_schema(j);
  PlanningStudy study;
  study.mva_base = get<double>(j, "mva_base", "study");
  study.network = read_network_json(field(j, "network", "study"));

  const json& cand = field(j, "candidates", "study");
  for (const auto& p : get<json>(cand, "psts", "candidates")) {
    const auto id = get<std::string>(p, "branch", "PST candidate");
    auto it = std::find_if(study.network.branches.begin(), study.network.branches.end(),
                           [&](const Branch& b) { return b.id == id; });
    if (it == study.network.branches.end())
      throw ValidationError("PST candidate " + id, "unknown branch id");
    it->pst = PstCandidate{get<double>(p, "angle_min", "PST " + id), get<double>(p, "angle_max", "PST " + id),
                           get<double>(p, "invest_cost", "PST " + id)};
  }
  for (const auto& l : get<json>(cand, "lines", "candidates")) {
    Branch br;
    br.id = get<std::string>(l, "id", "prospective line");
    br.from_bus = BusId{get<int>(l, "from_bus", "line " + br.id)};
    br.to_bus = BusId{get<int>(l, "to_bus", "line " + br.id)};
    br.reactance_pu = get<double>(l, "reactance", "line " + br.id);
    br.rating_mva = get<double>(l, "rating", "line " + br.id);
    br.kind = ProspectiveLine{get<double>(l, "invest_cost", "line " + br.id)};
    study.network.branches.push_back(std::move(br));
  }

  for (const auto& s : get<json>(j, "scenarios", "study"))
    study.scenarios.push_back({get<double>(s, "load_level", "scenario"),
                               get<std::vector<double>>(s, "wind_cf", "scenario"), get<double>(s, "hours", "scenario")});
  const json& budgets = field(j, "budgets", "study");
  study.pst_budget_musd = read_budget(budgets, "pst", "budgets");
  study.line_budget_musd = read_budget(budgets, "line", "budgets");
  const json& e = field(j, "economics", "study");
  study.economics = Economics{get<double>(e, "interest_rate", "economics"), get<int>(e, "line_lifetime", "economics"),
                              get<int>(e, "pst_lifetime", "economics"), get<double>(e, "pst_unit_cost", "economics")};
  if (j.contains("dual_big_m")) study.dual_big_m = get<double>(j, "dual_big_m", "study");
  return study;
}

void write_study_file(const PlanningStudy& study, const std::string& path) {
  write_text_file(path, write_study(study));
}

PlanningStudy read_study_file(const std::string& path) { return read_study(read_text_file(path)); }

std::string write_network(const NetworkCase& network, double mva_base) {
  ordered_json doc = {{"schema_version", kStudySchemaVersion}, {"mva_base", mva_base},
                      {"network", network_json(network)}};
  return doc.dump(2) + "\n";
}

NetworkCase read_network(std::string_view text, double* mva_base) {
  const json j = parse_json(text);
  check_schema(j);
  if (mva_base) *mva_base = get<double>(j, "mva_base", "document");
  return read_network_json(field(j, "network", "document"));
}

std::string write_expansion_options(const ExpansionOptions& o) {
  ordered_json lines = ordered_json::array(), psts = ordered_json::array(), winds = ordered_json::array();
  for (const auto& l : o.prospective_lines)
    lines.push_back({{"from_bus", l.from_bus}, {"to_bus", l.to_bus}, {"reactance", l.reactance_pu},
                     {"rating", l.rating_mva}, {"invest_cost", l.invest_cost_musd}});
  for (const auto& p : o.pst_candidates)
    psts.push_back({{"branch", p.branch_id}, {"angle_min", p.angle_min_rad}, {"angle_max", p.angle_max_rad}});
  for (const auto& w : o.wind_farms)
    winds.push_back({{"bus", w.bus}, {"capacity", w.capacity_mw}, {"cf_source", profile_json(w.profile)}});
  const auto& e = o.economics;
  ordered_json doc = {
      {"schema_version", kStudySchemaVersion},
      {"prospective_lines", lines},
      {"pst_candidates", psts},
      {"wind_farms", winds},
      {"budgets", {{"pst", budget_value(o.budgets.pst_musd)}, {"line", budget_value(o.budgets.line_musd)}}},
      {"economics",
       {{"interest_rate", e.interest_rate}, {"line_lifetime", e.line_lifetime_years},
        {"pst_lifetime", e.pst_lifetime_years}, {"pst_unit_cost", e.pst_unit_cost_per_kva}}},
      {"dual_big_m", o.dual_big_m}};
  return doc.dump(2) + "\n";
}

ExpansionOptions read_expansion_options(std::string_view text) {
  const json j = parse_json(text);
  check_schema(j);
  ExpansionOptions o;
  for (const auto& l : get<json>(j, "prospective_lines", "expansion"))
    o.prospective_lines.push_back({get<int>(l, "from_bus", "prospective line"), get<int>(l, "to_bus", "prospective line"),
                                   get<double>(l, "reactance", "prospective line"),
                                   get<double>(l, "rating", "prospective line"),
                                   get<double>(l, "invest_cost", "prospective line")});
  for (const auto& p : get<json>(j, "pst_candidates", "expansion"))
    o.pst_candidates.push_back({get<std::string>(p, "branch", "PST candidate"), get<double>(p, "angle_min", "PST candidate"),
                                get<double>(p, "angle_max", "PST candidate")});
  for (const auto& w : get<json>(j, "wind_farms", "expansion"))
    o.wind_farms.push_back({get<int>(w, "bus", "wind farm"), get<double>(w, "capacity", "wind farm"),
                            read_profile(field(w, "cf_source", "wind farm"), "cf_source")});
  const json& budgets = field(j, "budgets", "expansion");
  o.budgets = {read_budget(budgets, "pst", "budgets"), read_budget(budgets, "line", "budgets")};
  const json& e = field(j, "economics", "expansion");
  o.economics = Economics{get<double>(e, "interest_rate", "economics"), get<int>(e, "line_lifetime", "economics"),
                          get<int>(e, "pst_lifetime", "economics"), get<double>(e, "pst_unit_cost", "economics")};
  if (j.contains("dual_big_m")) o.dual_big_m = get<double>(j, "dual_big_m", "expansion");
  return o;
}

std::string write_plan(const Plan& plan, const PlanningStudy& study) {
  const auto& net = study.network;
  const auto psts = net.pst_candidates();
  const auto lines = net.prospective_lines();
  ordered_json p = ordered_json::array(), l = ordered_json::array();
  for (std::size_t i = 0; i < psts.size(); ++i)
    p.push_back({{"branch", net.branches[psts[i]].id}, {"built", static_cast<bool>(plan.pst_built.at(i))}});
  for (std::size_t i = 0; i < lines.size(); ++i)
    l.push_back({{"branch", net.branches[lines[i]].id}, {"built", static_cast<bool>(plan.lines_built.at(i))}});
  ordered_json doc = {{"schema_version", kStudySchemaVersion}, {"psts", p}, {"lines", l}};
  return doc.dump(2) + "\n";
}

Plan read_plan(std::string_view text, const PlanningStudy& study) {
  const json j = parse_json(text);
  check_schema(j);
  const auto& net = study.network;
  Plan plan = Plan::empty_for(study);
  auto fill = [&](const char* key, const std::vector<std::size_t>& slots, std::vector<bool>& out) {
    const json& arr = field(j, key, "plan");
    if (arr.size() != slots.size())
      throw ValidationError("plan", fmt::format("'{}' has {} entries, study has {}", key, arr.size(), slots.size()));
    for (const auto& e : arr) {
      const auto id = get<std::string>(e, "branch", "plan");
      auto it = std::find_if(slots.begin(), slots.end(), [&](std::size_t k) { return net.branches[k].id == id; });
      if (it == slots.end()) throw ValidationError("plan", fmt::format("unknown candidate '{}'", id));
      out[static_cast<std::size_t>(it - slots.begin())] = get<bool>(e, "built", "plan");
    }
  };
  fill("psts", net.pst_candidates(), plan.pst_built);
  fill("lines", net.prospective_lines(), plan.lines_built);
  return plan;
}

}  // namespace tepps
