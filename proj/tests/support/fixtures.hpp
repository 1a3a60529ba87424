#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tepps/data_model.hpp"

namespace tepps::testing {

inline Branch line(std::string id, int from, int to, double x, double rating) {
  Branch b;
  b.id = std::move(id);
  b.from_bus = BusId{from};
  b.to_bus = BusId{to};
  b.reactance_pu = x;
  b.rating_mva = rating;
  return b;
}

inline Branch prospective(std::string id, int from, int to, double x, double rating, double cost) {
  Branch b = line(std::move(id), from, to, x, rating);
  b.kind = ProspectiveLine{cost};
  return b;
}

inline Branch with_pst(Branch b, double angle, double cost) {
  b.pst = PstCandidate{-angle, angle, cost};
  return b;
}

inline std::vector<Bus> buses(int n, int reference = 1) {
  std::vector<Bus> out;
  for (int i = 1; i <= n; ++i) out.push_back({BusId{i}, i == reference});
  return out;
}

inline void set_wind(PlanningStudy& s, std::size_t farm, const std::vector<double>& cf) {
  s.network.wind_farms.at(farm).cf_source = cf;
  for (std::size_t t = 0; t < s.scenarios.size(); ++t) {
    s.scenarios[t].wind_cf.resize(s.network.wind_farms.size(), 0.0);
    s.scenarios[t].wind_cf[farm] = cf.at(t);
  }
}

inline PlanningStudy base_study() {
  PlanningStudy s;
  s.pst_budget_musd = kInfinity;
  s.line_budget_musd = kInfinity;
  return s;
}

/// Two buses, cheap generation at bus 1, expensive at bus 2, all load at
/// bus 2, one 100 MW line. No candidates.
inline PlanningStudy two_bus_congested() {
  PlanningStudy s = base_study();
  auto& n = s.network;
  n.buses = buses(2);
  n.generators = {{"G1", BusId{1}, 10.0, 0.0, 400.0}, {"G2", BusId{2}, 30.0, 0.0, 400.0}};
  n.loads = {{"D2", BusId{2}, 150.0}};
  n.branches = {line("L1", 1, 2, 0.1, 100.0)};
  s.scenarios = {{1.0, {}, 1000.0}};
  return s;
}

/// Two buses with a prospective reinforcement of the congested line.
inline PlanningStudy two_bus_reinforcement() {
  PlanningStudy s = two_bus_congested();
  s.network.branches.push_back(prospective("P1", 1, 2, 0.1, 100.0, 0.5));
  s.scenarios = {{1.0, {}, 2000.0}, {0.6, {}, 3000.0}};
  return s;
}

/// Triangle with wind at bus 2, one PST candidate and one prospective line.
inline PlanningStudy three_bus_pst() {
  PlanningStudy s = base_study();
  auto& n = s.network;
  n.buses = buses(3);
  n.generators = {{"G1", BusId{1}, 10.0, 0.0, 300.0}, {"G2", BusId{3}, 30.0, 0.0, 300.0}};
  n.wind_farms = {{"W2", BusId{2}, 50.0, std::vector<double>{}}};
  n.loads = {{"D2", BusId{2}, 200.0}};
  n.branches = {line("L1", 1, 2, 0.1, 80.0), with_pst(line("L2", 1, 3, 0.1, 200.0), 0.0872665, 1.0),
                line("L3", 2, 3, 0.1, 200.0), prospective("P1", 1, 2, 0.1, 100.0, 5.0)};
  s.scenarios = {{1.0, {}, 1000.0}, {0.7, {}, 3000.0}};
  set_wind(s, 0, {0.5, 0.9});
  s.pst_budget_musd = 10.0;
  s.line_budget_musd = 10.0;
  return s;
}

/// Four-bus ring with two PST candidates and a diagonal prospective line.
inline PlanningStudy four_bus_ring() {
  PlanningStudy s = base_study();
  auto& n = s.network;
  n.buses = buses(4);
  n.generators = {{"G1", BusId{1}, 8.0, 0.0, 250.0}, {"G2", BusId{3}, 25.0, 0.0, 250.0},
                  {"G3", BusId{4}, 60.0, 0.0, 300.0}};
  n.wind_farms = {{"W1", BusId{1}, 120.0, std::vector<double>{}}};
  n.loads = {{"D2", BusId{2}, 160.0}, {"D4", BusId{4}, 90.0}};
  n.branches = {with_pst(line("L1", 1, 2, 0.08, 90.0), 0.1, 0.8), line("L2", 2, 3, 0.12, 120.0),
                line("L3", 3, 4, 0.1, 120.0), with_pst(line("L4", 4, 1, 0.06, 70.0), 0.1, 0.6),
                prospective("P1", 1, 3, 0.15, 100.0, 2.0)};
  s.scenarios = {{1.0, {}, 2500.0}, {0.55, {}, 4000.0}, {0.8, {}, 2260.0}};
  set_wind(s, 0, {0.3, 0.8, 0.55});
  s.pst_budget_musd = 1.0;
  return s;
}

/// Five-bus system with parallel prospective corridors and a PST.
inline PlanningStudy five_bus_corridors() {
  PlanningStudy s = base_study();
  auto& n = s.network;
  n.buses = buses(5, 3);
  n.generators = {{"G1", BusId{1}, 12.0, 20.0, 300.0}, {"G2", BusId{3}, 40.0, 0.0, 200.0},
                  {"G3", BusId{5}, 22.0, 0.0, 150.0}};
  n.wind_farms = {{"W4", BusId{4}, 150.0, std::vector<double>{}}};
  n.loads = {{"D2", BusId{2}, 180.0}, {"D3", BusId{3}, 120.0}, {"D5", BusId{5}, 60.0}};
  n.branches = {line("L1", 1, 2, 0.05, 110.0),         line("L2", 2, 3, 0.07, 90.0),
                with_pst(line("L3", 1, 4, 0.09, 150.0), 0.08, 1.2), line("L4", 4, 3, 0.06, 100.0),
                line("L5", 3, 5, 0.1, 80.0),           line("L6", 5, 2, 0.11, 80.0),
                prospective("P1", 1, 2, 0.05, 110.0, 3.0), prospective("P2", 4, 5, 0.08, 90.0, 2.5),
                prospective("P3", 1, 3, 0.2, 60.0, 1.5)};
  s.scenarios = {{1.0, {}, 3000.0}, {0.65, {}, 5760.0}};
  set_wind(s, 0, {0.25, 0.7});
  s.line_budget_musd = 6.0;
  return s;
}

/// Two buses where the wind farm is stranded without the prospective line.
inline PlanningStudy two_bus_stranded_wind() {
  PlanningStudy s = base_study();
  auto& n = s.network;
  n.buses = buses(2);
  n.generators = {{"G1", BusId{1}, 45.0, 0.0, 500.0}};
  n.wind_farms = {{"W2", BusId{2}, 200.0, std::vector<double>{}}};
  n.loads = {{"D1", BusId{1}, 250.0}};
  n.branches = {line("L1", 1, 2, 0.2, 40.0), prospective("P1", 1, 2, 0.1, 150.0, 4.0),
                prospective("P2", 1, 2, 0.1, 150.0, 9.0)};
  s.scenarios = {{1.0, {}, 4000.0}, {0.7, {}, 4760.0}};
  set_wind(s, 0, {0.6, 0.35});
  return s;
}

inline std::vector<PlanningStudy> hand_fixtures() {
  return {two_bus_reinforcement(), three_bus_pst(), four_bus_ring(), five_bus_corridors(),
          two_bus_stranded_wind()};
}

/// Small random study: 2-5 buses, 1-3 scenarios, at most 4 candidates. A
/// peaking generator at every load bus keeps every plan feasible.
inline PlanningStudy random_study(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

  PlanningStudy s = base_study();
  auto& n = s.network;
  const int nb = pick(2, 5);
  n.buses = buses(nb, pick(1, nb));
  int gid = 1, lid = 1, pid = 1;
  for (int i = 1; i <= nb; ++i) {
    if (pick(0, 2) == 0 || i == 1)
      n.generators.push_back({"G" + std::to_string(gid++), BusId{i}, uni(5.0, 40.0), 0.0, uni(50.0, 250.0)});
  }
  for (int i = 1; i <= nb; ++i) {
    if (i == 1 || pick(0, 1) == 0) continue;
    const double d = uni(20.0, 150.0);
    n.loads.push_back({"D" + std::to_string(i), BusId{i}, d});
    n.generators.push_back({"G" + std::to_string(gid++), BusId{i}, uni(80.0, 150.0), 0.0, 1.2 * d});
  }
  if (n.loads.empty()) {
    n.loads.push_back({"D" + std::to_string(nb), BusId{nb}, uni(20.0, 150.0)});
    n.generators.push_back({"G" + std::to_string(gid++), BusId{nb}, 120.0, 0.0, 200.0});
  }
  const bool wind = pick(0, 1) == 1;
  if (wind) {
    const int wb = pick(1, nb);
    n.wind_farms.push_back({"W" + std::to_string(wb), BusId{wb}, uni(30.0, 150.0), std::vector<double>{}});
  }

  // spanning tree, then extra edges
  for (int i = 2; i <= nb; ++i)
    n.branches.push_back(line("L" + std::to_string(lid++), pick(1, i - 1), i, uni(0.05, 0.3), uni(20.0, 120.0)));
  const int extra = nb > 2 ? pick(0, 2) : 0;
  for (int e = 0; e < extra; ++e) {
    int a = pick(1, nb), b = pick(1, nb);
    if (a == b) continue;
    n.branches.push_back(line("L" + std::to_string(lid++), a, b, uni(0.05, 0.3), uni(20.0, 120.0)));
  }
  const int n_cand = pick(1, 4);
  for (int c = 0; c < n_cand; ++c) {
    const bool pst = pick(0, 1) == 1;
    if (pst) {
      std::vector<std::size_t> free;
      for (std::size_t k = 0; k < n.branches.size(); ++k)
        if (!n.branches[k].is_prospective() && !n.branches[k].pst) free.push_back(k);
      if (!free.empty()) {
        auto& br = n.branches[free[static_cast<std::size_t>(pick(0, static_cast<int>(free.size()) - 1))]];
        br.pst = PstCandidate{-uni(0.03, 0.15), uni(0.03, 0.15), uni(0.1, 2.0)};
        continue;
      }
    }
    int a = pick(1, nb), b = pick(1, nb);
    if (a == b) b = a % nb + 1;
    n.branches.push_back(prospective("P" + std::to_string(pid++), a, b, uni(0.05, 0.3), uni(30.0, 150.0), uni(0.1, 4.0)));
  }
  const int ns = pick(1, 3);
  double left = 8760.0;
  for (int t = 0; t < ns; ++t) {
    const double h = t + 1 == ns ? left : std::round(uni(0.2, 0.5) * left);
    left -= h;
    s.scenarios.push_back({uni(0.4, 1.0), {}, h});
  }
  if (wind) {
    std::vector<double> cf;
    for (int t = 0; t < ns; ++t) cf.push_back(uni(0.0, 1.0));
    set_wind(s, 0, cf);
  }
  if (pick(0, 2) == 0) s.pst_budget_musd = uni(0.5, 3.0);
  if (pick(0, 2) == 0) s.line_budget_musd = uni(0.5, 6.0);
  return s;
}

}  // namespace tepps::testing
