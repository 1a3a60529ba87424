#pragma once

// Domain types for market-based transmission expansion planning with
// phase-shifting transformers (PSTs).
//
// Units: power in MW, reactance in per unit on PlanningStudy::mva_base,
// angles in radians, money in M$, energy in MWh, prices in $/MWh.

#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tepps/errors.hpp"

namespace tepps {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct BusId {
  int value = 0;
  auto operator<=>(const BusId&) const = default;
};

struct Bus {
  BusId id;
  bool is_reference = false;

  bool operator==(const Bus&) const = default;
};

struct Generator {
  std::string id;
  BusId bus;
  double marginal_cost = 0.0;  // $/MWh
  double p_min_mw = 0.0;
  double p_max_mw = 0.0;

  bool operator==(const Generator&) const = default;
};

enum class CfAdjustment { kScale, kOffset };

/// Capacity factors derived from a shared profile: cf = clamp(base * factor)
/// for kScale, cf = clamp(base + factor) for kOffset.
struct ProfileCf {
  std::string profile = "base";
  CfAdjustment adjustment = CfAdjustment::kScale;
  double factor = 1.0;

  double apply(double base_cf) const;
  bool operator==(const ProfileCf&) const = default;
};

using CfSource = std::variant<std::vector<double>, ProfileCf>;

struct WindFarm {
  std::string id;
  BusId bus;
  double capacity_mw = 0.0;
  CfSource cf_source = ProfileCf{};

  bool operator==(const WindFarm&) const = default;
};

struct LoadPoint {
  std::string id;
  BusId bus;
  double peak_demand_mw = 0.0;

  bool operator==(const LoadPoint&) const = default;
};

struct ExistingLine {
  bool operator==(const ExistingLine&) const = default;
};

struct ProspectiveLine {
  double invest_cost_musd = 0.0;
  bool operator==(const ProspectiveLine&) const = default;
};

struct PstCandidate {
  double angle_min_rad = 0.0;
  double angle_max_rad = 0.0;
  double invest_cost_musd = 0.0;

  bool operator==(const PstCandidate&) const = default;
};

struct Branch {
  std::string id;
  BusId from_bus;
  BusId to_bus;
  double reactance_pu = 0.0;
  double rating_mva = 0.0;
  std::variant<ExistingLine, ProspectiveLine> kind = ExistingLine{};
  std::optional<PstCandidate> pst;

  bool is_prospective() const { return std::holds_alternative<ProspectiveLine>(kind); }
  double susceptance_pu() const { return 1.0 / reactance_pu; }
  bool operator==(const Branch&) const = default;
};

struct NetworkCase {
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<WindFarm> wind_farms;
  std::vector<LoadPoint> loads;
  std::vector<Branch> branches;

  /// Position of a bus in `buses`; throws ValidationError when absent.
  std::size_t bus_index(BusId id) const;
  std::optional<std::size_t> find_bus(BusId id) const;
  std::size_t reference_bus_index() const;

  /// Branch positions of PST candidates, in branch order.
  std::vector<std::size_t> pst_candidates() const;
  /// Branch positions of prospective lines, in branch order.
  std::vector<std::size_t> prospective_lines() const;

  bool operator==(const NetworkCase&) const = default;
};

struct Scenario {
  double load_level = 1.0;
  std::vector<double> wind_cf;  // one entry per wind farm
  double hours = 0.0;

  bool operator==(const Scenario&) const = default;
};

struct Economics {
  double interest_rate = 0.05;
  int line_lifetime_years = 20;
  int pst_lifetime_years = 15;
  double pst_unit_cost_per_kva = 100.0;

  bool operator==(const Economics&) const = default;
};

struct PlanningStudy {
  NetworkCase network;
  std::vector<Scenario> scenarios;
  double pst_budget_musd = 0.0;  // kInfinity means unlimited
  double line_budget_musd = 0.0;
  Economics economics;
  double mva_base = 100.0;
  double dual_big_m = 1e5;

  std::size_t num_psts() const { return network.pst_candidates().size(); }
  std::size_t num_prospective() const { return network.prospective_lines().size(); }
  bool operator==(const PlanningStudy&) const = default;
};

/// Investment decisions, aligned with NetworkCase::pst_candidates() and
/// NetworkCase::prospective_lines().
struct Plan {
  std::vector<bool> pst_built;
  std::vector<bool> lines_built;

  static Plan empty_for(const PlanningStudy& study);
  bool operator==(const Plan&) const = default;
};

/// Market clearing outcome of one scenario.
struct ScenarioDispatch {
  std::vector<double> generator_mw;
  std::vector<double> wind_mw;
  std::vector<double> flow_mw;        // per branch (existing and prospective)
  std::vector<double> angle_rad;      // per bus
  std::vector<double> pst_shift_rad;  // auxiliary shift variable, per PST candidate
  std::vector<double> pst_angle_rad;  // recovered PST angle, 0 where no PST is built
  std::vector<double> lmp;            // $/MWh per bus

  bool operator==(const ScenarioDispatch&) const = default;
};

struct PlanReport {
  Plan plan;
  double line_investment_musd = 0.0;  // annualized
  double pst_investment_musd = 0.0;   // annualized
  double consumer_payment_musd = 0.0;
  double objective_musd = 0.0;
  std::vector<double> curtailment_mwh;  // per wind farm
  double penetration_pct = 0.0;
  std::vector<ScenarioDispatch> dispatch;
  std::vector<int> degenerate_scenarios;  // 1-based; LMPs not unique, optimistic duals reported

  bool operator==(const PlanReport&) const = default;
};

std::vector<Violation> validate_study(const PlanningStudy& study);

/// Throws ValidationError carrying every violation, if any.
void require_valid(const PlanningStudy& study);

/// Scenario load at every bus in MW: peak demand of the bus loads times the
/// scenario load level.
std::vector<double> bus_demand_mw(const PlanningStudy& study, std::size_t scenario);

/// Checks flow balance, line flow definitions and limits of a dispatch for a
/// fixed plan. Returns a description of every broken rule.
std::vector<Violation> check_dispatch(const PlanningStudy& study, const Plan& plan,
                                      std::size_t scenario, const ScenarioDispatch& dispatch,
                                      double tolerance_mw = 1e-6);

}  // namespace tepps
