#include <chrono>
#include <cstdint>
#include <functional>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tepps/case_ingest.hpp"
#include "tepps/costs.hpp"
#include "tepps/errors.hpp"
#include "tepps/formulation.hpp"
#include "tepps/mps.hpp"
#include "tepps/oracle.hpp"
#include "tepps/report.hpp"
#include "tepps/scenarios.hpp"

namespace fs = std::filesystem;
using namespace tepps;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kParse = 2, kValidation = 3, kGuard = 4, kInfeasible = 5 };

int log_level() {
  const char* env = std::getenv("TEPPS_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "quiet" || v == "0") return 0;
  if (v == "info" || v == "2") return 2;
  if (v == "debug" || v == "3") return 3;
  return 1;
}

void info(const std::string& m) {
  if (log_level() >= 2) std::cerr << "[tepps] " << m << '\n';
}

void debug(const std::string& m) {
  if (log_level() >= 3) std::cerr << "[tepps] " << m << '\n';
}

void note(const std::string& m) {
  if (log_level() >= 1) std::cout << m << '\n';
}

double parse_budget(const std::string& s) {
  if (s == "inf" || s == "none" || s == "unlimited") return kInfinity;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(fmt::format("invalid budget '{}'", s));
  }
}

struct IngestArgs {
  std::string input;
  double scale_load = 1.0;
  double scale_gen = 1.0;
  double derate = 1.0;
};

RawCaseFile load_case(const IngestArgs& a) {
  RawCaseFile raw = read_matpower_file(a.input);
  for (const auto& w : raw.warnings) info(w);
  return apply_modifiers(std::move(raw), a.scale_load, a.scale_gen, a.derate);
}

void write_outputs(const fs::path& dir, const PlanningStudy& study, const PlanReport& rep, const SolveStats& stats,
                   const std::string& case_name) {
  fs::create_directories(dir);
  const ReportBundle bundle = build_report(study, rep, stats, case_name);
  write_text_file((dir / "plan.json").string(), write_plan(rep.plan, study));
  write_text_file((dir / "report.json").string(), write_report(bundle, ReportFormat::kJson));
  write_text_file((dir / "summary.csv").string(), summary_csv({bundle.summary}));
  write_text_file((dir / "lmp.csv").string(), lmp_csv(bundle));
  write_text_file((dir / "dispatch.csv").string(), dispatch_csv(bundle));
}

std::string plan_line(const PlanningStudy& study, const Plan& plan) {
  std::vector<std::string> psts, lines;
  const auto pc = study.network.pst_candidates();
  const auto pl = study.network.prospective_lines();
  for (std::size_t p = 0; p < pc.size(); ++p)
    if (plan.pst_built[p]) psts.push_back(branch_label(study, pc[p]));
  for (std::size_t l = 0; l < pl.size(); ++l)
    if (plan.lines_built[l]) lines.push_back(branch_label(study, pl[l]));
  return fmt::format("psts [{}] lines [{}]", fmt::join(psts, " "), fmt::join(lines, " "));
}

struct PlanRun {
  PlanReport report;
  PlanningResult result;
  double seconds = 0.0;
};

PlanRun run_plan(const PlanningStudy& study, double mipgap, const std::optional<Plan>& initial) {
  PlanningOptions opt;
  opt.mipgap = mipgap;
  opt.initial_plan = initial;
  opt.log = [](const std::string& m) { debug(m); };
  const auto t0 = std::chrono::steady_clock::now();
  PlanRun run;
  run.result = plan_study(study, opt);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  info(fmt::format("branch and bound: {} nodes, gap {:.3g}, {:.2f} s", run.result.milp.nodes, run.result.milp.gap,
                   run.seconds));
  if (!run.result.audit.passed()) {
    for (const auto& f : run.result.audit.failures) std::cerr << "audit: " << f << '\n';
    throw NumericalError("optimality audit failed");
  }
  run.report = evaluate_plan(study, run.result.solution.plan);
  return run;
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kOk;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    for (const auto& v : e.violations()) std::cerr << "  " << v.entity << ": " << v.rule << '\n';
    return kValidation;
  } catch (const GuardError& e) {
    std::cerr << "guard: " << e.what() << '\n';
    return kGuard;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmission expansion planning with phase-shifting transformers"};
  app.require_subcommand(1);

  IngestArgs ingest;
  std::string ingest_out;
  auto* c_ingest = app.add_subcommand("ingest", "Read a MATPOWER case and write the native network JSON");
  c_ingest->add_option("case", ingest.input, "MATPOWER case file")->required();
  c_ingest->add_option("--scale-load", ingest.scale_load, "Load multiplier")->check(CLI::PositiveNumber);
  c_ingest->add_option("--scale-gen", ingest.scale_gen, "Generation capacity multiplier")->check(CLI::PositiveNumber);
  c_ingest->add_option("--derate", ingest.derate, "Thermal rating multiplier")->check(CLI::PositiveNumber);
  c_ingest->add_option("--out", ingest_out, "Network JSON output")->required();

  IngestArgs asm_case;
  std::string asm_scenarios, asm_expansion, asm_out, asm_pst_budget, asm_line_budget;
  auto* c_asm = app.add_subcommand("assemble", "Combine a case, scenarios and expansion options into a study");
  c_asm->add_option("--case", asm_case.input, "MATPOWER case file")->required();
  c_asm->add_option("--scale-load", asm_case.scale_load, "Load multiplier")->check(CLI::PositiveNumber);
  c_asm->add_option("--scale-gen", asm_case.scale_gen, "Generation capacity multiplier")->check(CLI::PositiveNumber);
  c_asm->add_option("--derate", asm_case.derate, "Thermal rating multiplier")->check(CLI::PositiveNumber);
  c_asm->add_option("--scenarios", asm_scenarios, "Scenario CSV (load_level,wind_cf,hours)")->required();
  c_asm->add_option("--expansion", asm_expansion, "Expansion options JSON")->required();
  c_asm->add_option("--pst-budget", asm_pst_budget, "PST budget in M$ or 'inf'");
  c_asm->add_option("--line-budget", asm_line_budget, "Line budget in M$ or 'inf'");
  c_asm->add_option("--out", asm_out, "Study JSON output")->required();

  std::string red_load, red_wind, red_load_col = "load", red_wind_col = "wind", red_out;
  int red_k = 10;
  std::uint64_t red_seed = 1;
  auto* c_red = app.add_subcommand("reduce", "Cluster hourly load and wind series into scenarios");
  c_red->add_option("--load", red_load, "Load CSV")->required();
  c_red->add_option("--wind", red_wind, "Wind capacity-factor CSV")->required();
  c_red->add_option("--load-column", red_load_col, "Load column name");
  c_red->add_option("--wind-column", red_wind_col, "Wind column name");
  c_red->add_option("--k", red_k, "Number of scenarios")->check(CLI::PositiveNumber);
  c_red->add_option("--seed", red_seed, "Random seed");
  c_red->add_option("--out", red_out, "Scenario CSV output")->required();

  std::string plan_study_path, plan_out, plan_mps, plan_initial, plan_case_name = "case";
  double plan_mipgap = 0.001, plan_big_m = 0.0;
  std::vector<std::string> plan_sweep;
  bool plan_timing = false, plan_free_mps = false;
  auto* c_plan = app.add_subcommand("plan", "Solve the single-level MILP");
  c_plan->add_option("--study", plan_study_path, "Study JSON")->required();
  c_plan->add_option("--mipgap", plan_mipgap, "Relative optimality gap")->check(CLI::Range(0.0, 1.0));
  c_plan->add_option("--dual-big-m", plan_big_m, "Bound on duals in bilinear terms")->check(CLI::PositiveNumber);
  c_plan->add_option("--out", plan_out, "Output directory")->required();
  c_plan->add_option("--export-mps", plan_mps, "Write the MILP as an MPS file");
  c_plan->add_flag("--free-mps", plan_free_mps, "Use free MPS format");
  c_plan->add_option("--initial-plan", plan_initial, "Plan JSON used as the first incumbent");
  c_plan->add_option("--pst-budget-sweep", plan_sweep, "PST budgets in M$ to solve in turn")->delimiter(',');
  c_plan->add_option("--name", plan_case_name, "Case name in the summary");
  c_plan->add_flag("--timing", plan_timing, "Record solve time in the outputs");

  std::string or_study, or_out, or_case_name = "case";
  auto* c_or = app.add_subcommand("oracle", "Enumerate every plan and keep the cheapest");
  c_or->add_option("--study", or_study, "Study JSON")->required();
  c_or->add_option("--out", or_out, "Output directory")->required();
  c_or->add_option("--name", or_case_name, "Case name in the summary");

  std::string ev_study, ev_plan, ev_out, ev_case_name = "case";
  auto* c_ev = app.add_subcommand("evaluate", "Clear the market for a fixed plan");
  c_ev->add_option("--study", ev_study, "Study JSON")->required();
  c_ev->add_option("--plan", ev_plan, "Plan JSON")->required();
  c_ev->add_option("--out", ev_out, "Output directory")->required();
  c_ev->add_option("--name", ev_case_name, "Case name in the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  if (*c_ingest) {
    return guarded([&] {
      const RawCaseFile raw = load_case(ingest);
      const NetworkCase net = network_from_case(raw);
      write_text_file(ingest_out, write_network(net, raw.mva_base));
      note(fmt::format("buses {} generators {} branches {} loads {}", net.buses.size(), net.generators.size(),
                       net.branches.size(), net.loads.size()));
    });
  }

  if (*c_asm) {
    return guarded([&] {
      const RawCaseFile raw = load_case(asm_case);
      const auto rows = read_scenario_csv(read_text_file(asm_scenarios));
      ExpansionOptions opt = read_expansion_options(read_text_file(asm_expansion));
      if (!asm_pst_budget.empty()) opt.budgets.pst_musd = parse_budget(asm_pst_budget);
      if (!asm_line_budget.empty()) opt.budgets.line_musd = parse_budget(asm_line_budget);
      const PlanningStudy study = assemble_study(raw, rows, opt);
      write_text_file(asm_out, write_study(study));
      note(fmt::format("scenarios {} pst candidates {} prospective lines {} wind farms {}", study.scenarios.size(),
                       study.network.pst_candidates().size(), study.network.prospective_lines().size(),
                       study.network.wind_farms.size()));
    });
  }

  if (*c_red) {
    return guarded([&] {
      const auto load = ingest_profile(read_text_file(red_load), red_load_col, SeriesKind::kLoad);
      const auto wind = ingest_profile(read_text_file(red_wind), red_wind_col, SeriesKind::kCapacityFactor);
      const auto rows = kmeans_reduce(load, wind, red_k, red_seed);
      write_text_file(red_out, write_scenario_csv(rows));
      std::vector<std::string> sizes;
      for (const auto& r : rows) sizes.push_back(fmt::format("{:g}", r.hours));
      note(fmt::format("cluster sizes {}", fmt::join(sizes, " ")));
    });
  }

  if (*c_plan) {
    return guarded([&] {
      PlanningStudy study = read_study_file(plan_study_path);
      if (plan_big_m > 0.0) study.dual_big_m = plan_big_m;
      if (!plan_mps.empty()) {
        const auto model = build_single_level_milp(study);
        MpsOptions mo;
        mo.format = plan_free_mps ? MpsFormat::kFree : MpsFormat::kFixed;
        write_text_file(plan_mps, write_mps(model.milp, mo));
        info(fmt::format("wrote {}", plan_mps));
      }
      std::optional<Plan> initial;
      if (!plan_initial.empty()) initial = read_plan(read_text_file(plan_initial), study);

      if (!plan_sweep.empty()) {
        fs::create_directories(plan_out);
        std::string csv = "pst_budget_musd,objective_musd,consumer_payment_musd,pst_investment_musd,line_investment_musd\n";
        for (const auto& b : plan_sweep) {
          const double budget = parse_budget(b);
          PlanningStudy s = study;
          s.pst_budget_musd = budget;
          const PlanRun run = run_plan(s, plan_mipgap, initial);
          initial = run.report.plan;
          const auto& r = run.report;
          csv += fmt::format("{},{:.12g},{:.12g},{:.12g},{:.12g}\n", b, r.objective_musd, r.consumer_payment_musd,
                             r.pst_investment_musd, r.line_investment_musd);
          note(fmt::format("pst budget {} objective {:.6f} payment {:.6f} {}", b, r.objective_musd,
                           r.consumer_payment_musd, plan_line(s, r.plan)));
        }
        write_text_file((fs::path(plan_out) / "pst_budget_sweep.csv").string(), csv);
        return;
      }

      const PlanRun run = run_plan(study, plan_mipgap, initial);
      SolveStats stats{"milp", run.result.milp.nodes, run.result.milp.gap, run.result.dual_big_m_used, std::nullopt};
      if (plan_timing) stats.solve_time_s = run.seconds;
      write_outputs(plan_out, study, run.report, stats, plan_case_name);
      note(fmt::format("objective {:.6f} payment {:.6f} {}", run.report.objective_musd,
                       run.report.consumer_payment_musd, plan_line(study, run.report.plan)));
    });
  }

  if (*c_or) {
    return guarded([&] {
      const PlanningStudy study = read_study_file(or_study);
      const OracleResult res = enumerate_oracle(study);
      write_outputs(or_out, study, res.report, SolveStats{"oracle", 0, 0.0, 0.0, std::nullopt}, or_case_name);
      note(fmt::format("objective {:.6f} plans {} feasible {} {}", res.objective_musd, res.plans_enumerated,
                       res.plans_feasible, plan_line(study, res.plan)));
    });
  }

  if (*c_ev) {
    return guarded([&] {
      const PlanningStudy study = read_study_file(ev_study);
      const Plan plan = read_plan(read_text_file(ev_plan), study);
      const PlanReport rep = evaluate_plan(study, plan);
      write_outputs(ev_out, study, rep, SolveStats{"evaluate", 0, 0.0, 0.0, std::nullopt}, ev_case_name);
      note(fmt::format("objective {:.6f} payment {:.6f}", rep.objective_musd, rep.consumer_payment_musd));
    });
  }
  return kOk;
}
