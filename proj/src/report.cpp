#include "tepps/report.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tepps/errors.hpp"

namespace tepps {

namespace {

using Json = nlohmann::ordered_json;

std::string csv_num(double v) { return fmt::format("{:.12g}", v); }

std::string bus_label(const Bus& b) { return std::to_string(b.id.value); }

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(fmt::format("report: missing field '{}'", key));
  return j.at(key).get<T>();
}

}  // namespace

std::string branch_label(const PlanningStudy& study, std::size_t branch) {
  const auto& br = study.network.branches.at(branch);
  return fmt::format("{}-{}", br.from_bus.value, br.to_bus.value);
}

ReportBundle build_report(const PlanningStudy& study, const PlanReport& rep, const SolveStats& stats,
                          std::string case_name) {
  const auto& net = study.network;
  ReportBundle b;
  const auto psts = net.pst_candidates();
  const auto lines = net.prospective_lines();
  if (rep.plan.pst_built.size() != psts.size() || rep.plan.lines_built.size() != lines.size())
    throw ValidationError("report", "plan dimensions do not match the study");
  for (std::size_t p = 0; p < psts.size(); ++p)
    if (rep.plan.pst_built[p]) b.built_psts.push_back(branch_label(study, psts[p]));
  for (std::size_t l = 0; l < lines.size(); ++l)
    if (rep.plan.lines_built[l]) b.built_lines.push_back(branch_label(study, lines[l]));

  auto& s = b.summary;
  s.case_name = std::move(case_name);
  s.line_investment_musd = rep.line_investment_musd;
  s.pst_investment_musd = rep.pst_investment_musd;
  s.consumer_payment_musd = rep.consumer_payment_musd;
  s.objective_musd = rep.line_investment_musd + rep.pst_investment_musd + rep.consumer_payment_musd;
  s.curtailment_mwh = rep.curtailment_mwh;
  for (double c : rep.curtailment_mwh) s.curtailment_display_mmwh.push_back(c * 1e-6);
  s.penetration_pct = rep.penetration_pct;
  s.solve_time_s = stats.solve_time_s;

  for (const auto& w : net.wind_farms) b.wind_farms.push_back(w.id);
  for (const auto& bus : net.buses) b.buses.push_back(bus_label(bus));
  b.lmp.assign(net.buses.size(), std::vector<double>(rep.dispatch.size(), 0.0));
  for (std::size_t t = 0; t < rep.dispatch.size(); ++t) {
    const auto& d = rep.dispatch[t];
    if (d.lmp.size() != net.buses.size()) throw ValidationError("report", "LMP vector size differs from bus count");
    const int sc = static_cast<int>(t) + 1;
    for (std::size_t i = 0; i < d.lmp.size(); ++i) b.lmp[i][t] = d.lmp[i];
    for (std::size_t n = 0; n < d.generator_mw.size(); ++n)
      b.dispatch.push_back({sc, "generator", net.generators[n].id, d.generator_mw[n]});
    for (std::size_t w = 0; w < d.wind_mw.size(); ++w)
      b.dispatch.push_back({sc, "wind", net.wind_farms[w].id, d.wind_mw[w]});
    for (std::size_t k = 0; k < d.flow_mw.size(); ++k)
      b.dispatch.push_back({sc, "flow", net.branches[k].id, d.flow_mw[k]});
    for (std::size_t p = 0; p < d.pst_angle_rad.size(); ++p)
      if (rep.plan.pst_built[p]) b.dispatch.push_back({sc, "pst_angle", net.branches[psts[p]].id, d.pst_angle_rad[p]});
    for (std::size_t i = 0; i < d.angle_rad.size(); ++i)
      b.dispatch.push_back({sc, "angle", bus_label(net.buses[i]), d.angle_rad[i]});
  }
  b.degenerate_scenarios = rep.degenerate_scenarios;
  b.method = stats.method;
  b.nodes = stats.nodes;
  b.gap = stats.gap;
  b.dual_big_m = stats.dual_big_m;
  return b;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "case,line_investment_musd,pst_investment_musd,consumer_payment_musd,objective_musd";
  const std::size_t nw = rows.empty() ? 0 : rows.front().curtailment_mwh.size();
  for (std::size_t w = 0; w < nw; ++w) out += fmt::format(",curtailment_{}_mwh,curtailment_{}_1e6mwh", w + 1, w + 1);
  out += ",penetration_pct";
  const bool timed = !rows.empty() && rows.front().solve_time_s.has_value();
  if (timed) out += ",solve_time_s";
  out += '\n';
  for (const auto& r : rows) {
    if (r.curtailment_mwh.size() != nw) throw ValidationError("report", "summary rows differ in wind-farm count");
    out += fmt::format("{},{},{},{},{}", r.case_name, csv_num(r.line_investment_musd), csv_num(r.pst_investment_musd),
                       csv_num(r.consumer_payment_musd), csv_num(r.objective_musd));
    for (std::size_t w = 0; w < nw; ++w)
      out += fmt::format(",{},{}", csv_num(r.curtailment_mwh[w]), csv_num(r.curtailment_display_mmwh[w]));
    out += "," + csv_num(r.penetration_pct);
    if (timed) out += "," + (r.solve_time_s ? csv_num(*r.solve_time_s) : std::string());
    out += '\n';
  }
  return out;
}

std::string lmp_csv(const ReportBundle& b) {
  std::string out = "bus";
  const std::size_t nt = b.lmp.empty() ? 0 : b.lmp.front().size();
  for (std::size_t t = 0; t < nt; ++t) out += fmt::format(",scenario_{}", t + 1);
  out += '\n';
  for (std::size_t i = 0; i < b.buses.size(); ++i) {
    out += b.buses[i];
    for (double v : b.lmp[i]) out += "," + csv_num(v);
    out += '\n';
  }
  return out;
}

std::string dispatch_csv(const ReportBundle& b) {
  std::string out = "scenario,kind,id,value\n";
  for (const auto& r : b.dispatch) out += fmt::format("{},{},{},{}\n", r.scenario, r.kind, r.id, csv_num(r.value));
  return out;
}

void write_report(const ReportBundle& b, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::kCsv) {
    out << summary_csv({b.summary}) << '\n' << lmp_csv(b) << '\n' << dispatch_csv(b);
    return;
  }
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["method"] = b.method;
  j["built_psts"] = b.built_psts;
  j["built_lines"] = b.built_lines;
  Json s;
  s["case"] = b.summary.case_name;
  s["line_investment_musd"] = b.summary.line_investment_musd;
  s["pst_investment_musd"] = b.summary.pst_investment_musd;
  s["consumer_payment_musd"] = b.summary.consumer_payment_musd;
  s["objective_musd"] = b.summary.objective_musd;
  s["curtailment_mwh"] = b.summary.curtailment_mwh;
  s["curtailment_1e6mwh"] = b.summary.curtailment_display_mmwh;
  s["penetration_pct"] = b.summary.penetration_pct;
  if (b.summary.solve_time_s) s["solve_time_s"] = *b.summary.solve_time_s;
  j["summary"] = s;
  j["wind_farms"] = b.wind_farms;
  j["buses"] = b.buses;
  j["lmp"] = b.lmp;
  Json rows = Json::array();
  for (const auto& r : b.dispatch)
    rows.push_back(Json{{"scenario", r.scenario}, {"kind", r.kind}, {"id", r.id}, {"value", r.value}});
  j["dispatch"] = rows;
  j["degenerate_scenarios"] = b.degenerate_scenarios;
  j["nodes"] = b.nodes;
  j["gap"] = b.gap;
  j["dual_big_m"] = b.dual_big_m;
  out << j.dump(2) << '\n';
}

std::string write_report(const ReportBundle& bundle, ReportFormat format) {
  std::ostringstream s;
  write_report(bundle, format, s);
  return s.str();
}

ReportBundle read_report_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  try {
    if (get<int>(j, "schema_version") != kReportSchemaVersion) throw ParseError("report: unsupported schema_version");
    ReportBundle b;
    b.method = get<std::string>(j, "method");
    b.built_psts = get<std::vector<std::string>>(j, "built_psts");
    b.built_lines = get<std::vector<std::string>>(j, "built_lines");
    const auto& s = j.at("summary");
    b.summary.case_name = get<std::string>(s, "case");
    b.summary.line_investment_musd = get<double>(s, "line_investment_musd");
    b.summary.pst_investment_musd = get<double>(s, "pst_investment_musd");
    b.summary.consumer_payment_musd = get<double>(s, "consumer_payment_musd");
    b.summary.objective_musd = get<double>(s, "objective_musd");
    b.summary.curtailment_mwh = get<std::vector<double>>(s, "curtailment_mwh");
    b.summary.curtailment_display_mmwh = get<std::vector<double>>(s, "curtailment_1e6mwh");
    b.summary.penetration_pct = get<double>(s, "penetration_pct");
    if (s.contains("solve_time_s")) b.summary.solve_time_s = s.at("solve_time_s").get<double>();
    b.wind_farms = get<std::vector<std::string>>(j, "wind_farms");
    b.buses = get<std::vector<std::string>>(j, "buses");
    b.lmp = get<std::vector<std::vector<double>>>(j, "lmp");
    for (const auto& r : j.at("dispatch"))
      b.dispatch.push_back({get<int>(r, "scenario"), get<std::string>(r, "kind"), get<std::string>(r, "id"),
                            get<double>(r, "value")});
    b.degenerate_scenarios = get<std::vector<int>>(j, "degenerate_scenarios");
    b.nodes = get<long>(j, "nodes");
    b.gap = get<double>(j, "gap");
    b.dual_big_m = get<double>(j, "dual_big_m");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

std::vector<LmpPair> lmp_comparison(const ReportBundle& a, const ReportBundle& b, const std::vector<int>& scenarios) {
  if (a.buses != b.buses) throw ValidationError("lmp comparison", "bundles have different bus sets");
  const int nt_a = a.lmp.empty() ? 0 : static_cast<int>(a.lmp.front().size());
  const int nt_b = b.lmp.empty() ? 0 : static_cast<int>(b.lmp.front().size());
  std::vector<LmpPair> out;
  for (int t : scenarios) {
    if (t < 1 || t > nt_a || t > nt_b)
      throw ValidationError("lmp comparison", fmt::format("scenario {} out of range", t));
    for (std::size_t i = 0; i < a.buses.size(); ++i)
      out.push_back({a.buses[i], t, a.lmp[i][static_cast<std::size_t>(t - 1)], b.lmp[i][static_cast<std::size_t>(t - 1)]});
  }
  return out;
}

std::string lmp_comparison_csv(const std::vector<LmpPair>& pairs) {
  std::string out = "scenario,bus,lmp_a,lmp_b,difference\n";
  for (const auto& p : pairs)
    out += fmt::format("{},{},{},{},{}\n", p.scenario, p.bus, csv_num(p.lmp_a), csv_num(p.lmp_b), csv_num(p.difference()));
  return out;
}

}  // namespace tepps
