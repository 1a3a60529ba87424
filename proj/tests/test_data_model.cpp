#include <gtest/gtest.h>

#include <algorithm>

#include "support/fixtures.hpp"
#include "tepps/case_ingest.hpp"
#include "tepps/oracle.hpp"

using namespace tepps;
using namespace tepps::testing;

namespace {

bool has_rule(const std::vector<Violation>& v, const std::string& entity, const std::string& rule_part) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) {
    return x.entity == entity && x.rule.find(rule_part) != std::string::npos;
  });
}

}  // namespace

TEST(DataModel, FixturesAreValid) {
  for (const auto& s : hand_fixtures()) EXPECT_TRUE(validate_study(s).empty());
  for (std::uint64_t seed = 1; seed <= 60; ++seed) EXPECT_TRUE(validate_study(random_study(seed)).empty()) << seed;
}

TEST(DataModel, CandidateOrdering) {
  const auto s = five_bus_corridors();
  EXPECT_EQ(s.network.pst_candidates(), (std::vector<std::size_t>{2}));
  EXPECT_EQ(s.network.prospective_lines(), (std::vector<std::size_t>{6, 7, 8}));
  const auto p = Plan::empty_for(s);
  EXPECT_EQ(p.pst_built.size(), 1u);
  EXPECT_EQ(p.lines_built.size(), 3u);
}

TEST(DataModel, BusLookup) {
  const auto s = five_bus_corridors();
  EXPECT_EQ(s.network.bus_index(BusId{4}), 3u);
  EXPECT_EQ(s.network.reference_bus_index(), 2u);
  EXPECT_FALSE(s.network.find_bus(BusId{9}));
  EXPECT_THROW(s.network.bus_index(BusId{9}), ValidationError);
}

TEST(DataModel, ReportsEveryViolation) {
  auto s = three_bus_pst();
  s.network.buses.push_back({BusId{2}, true});
  s.network.generators[0].p_min_mw = 500.0;
  s.network.branches[0].reactance_pu = 0.0;
  s.network.branches[2].to_bus = BusId{7};
  s.network.branches[3].pst = PstCandidate{-0.1, 0.1, 1.0};
  s.network.branches[1].pst->angle_min_rad = 0.05;
  s.scenarios[1].hours = 0.0;
  s.scenarios[0].wind_cf = {1.5};
  s.line_budget_musd = -1.0;
  const auto v = validate_study(s);
  EXPECT_TRUE(has_rule(v, "bus 2", "duplicate"));
  EXPECT_TRUE(has_rule(v, "network", "multiple reference"));
  EXPECT_TRUE(has_rule(v, "generator G1", "p_min"));
  EXPECT_TRUE(has_rule(v, "branch L1", "reactance"));
  EXPECT_TRUE(has_rule(v, "branch L3", "unknown bus 7"));
  EXPECT_TRUE(has_rule(v, "branch P1", "PST on non-existing"));
  EXPECT_TRUE(has_rule(v, "branch L2", "angle_min < 0"));
  EXPECT_TRUE(has_rule(v, "scenario 2", "hours"));
  EXPECT_TRUE(has_rule(v, "scenario 1", "outside [0, 1]"));
  EXPECT_TRUE(has_rule(v, "budgets", "line budget"));
  try {
    require_valid(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.violations(), v);
  }
}

TEST(DataModel, WindVectorLengthChecked) {
  auto s = three_bus_pst();
  s.network.wind_farms[0].cf_source = std::vector<double>{0.2};
  EXPECT_TRUE(has_rule(validate_study(s), "wind farm W2", "length"));
  s.scenarios[0].wind_cf.clear();
  EXPECT_TRUE(has_rule(validate_study(s), "scenario 1", "wind_cf length"));
}

TEST(DataModel, ProfileAdjustments) {
  ProfileCf scale{"base", CfAdjustment::kScale, 0.9};
  EXPECT_DOUBLE_EQ(scale.apply(0.5), 0.45);
  EXPECT_DOUBLE_EQ(ProfileCf({"base", CfAdjustment::kScale, 2.0}).apply(0.8), 1.0);
  EXPECT_DOUBLE_EQ(ProfileCf({"base", CfAdjustment::kOffset, -0.3}).apply(0.2), 0.0);
  EXPECT_DOUBLE_EQ(ProfileCf({"base", CfAdjustment::kOffset, 0.1}).apply(0.2), 0.30000000000000004);
}

TEST(DataModel, BusDemand) {
  const auto s = five_bus_corridors();
  EXPECT_EQ(bus_demand_mw(s, 1), (std::vector<double>{0.0, 180.0 * 0.65, 120.0 * 0.65, 0.0, 60.0 * 0.65}));
}

TEST(DataModel, CheckDispatchCatchesBrokenRules) {
  const auto s = three_bus_pst();
  Plan p = Plan::empty_for(s);
  p.pst_built = {true};
  const auto rep = evaluate_plan(s, p);
  for (std::size_t t = 0; t < s.scenarios.size(); ++t) EXPECT_TRUE(check_dispatch(s, p, t, rep.dispatch[t]).empty());
  auto d = rep.dispatch[0];
  d.generator_mw[0] += 1.0;
  EXPECT_FALSE(check_dispatch(s, p, 0, d).empty());
  d = rep.dispatch[0];
  d.flow_mw[3] = 5.0;  // unbuilt line carries flow
  EXPECT_FALSE(check_dispatch(s, p, 0, d).empty());
  d = rep.dispatch[0];
  d.pst_shift_rad[0] = d.pst_angle_rad[0] = 0.5;
  EXPECT_FALSE(check_dispatch(s, p, 0, d).empty());
  d.lmp.pop_back();
  EXPECT_EQ(check_dispatch(s, p, 0, d).front().rule, "dimension mismatch");
}

TEST(DataModel, StudyJsonRoundTrip) {
  for (const auto& s : hand_fixtures()) EXPECT_EQ(read_study(write_study(s)), s);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = random_study(seed);
    EXPECT_EQ(read_study(write_study(s)), s) << seed;
  }
}

TEST(DataModel, StudyJsonRejectsBadInput) {
  EXPECT_THROW(read_study("{"), ParseError);
  EXPECT_THROW(read_study("[]"), ParseError);
  auto text = write_study(two_bus_congested());
  const auto pos = text.find("\"schema_version\": 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 19, "\"schema_version\": 7");
  EXPECT_THROW(read_study(text), ParseError);
}

TEST(DataModel, PlanJsonRoundTrip) {
  const auto s = five_bus_corridors();
  Plan p = Plan::empty_for(s);
  p.pst_built = {true};
  p.lines_built = {false, true, false};
  EXPECT_EQ(read_plan(write_plan(p, s), s), p);
  EXPECT_THROW(read_plan(write_plan(p, s), three_bus_pst()), Error);
}
