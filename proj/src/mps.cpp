#include "tepps/mps.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "tepps/errors.hpp"

namespace tepps {

namespace {

bool fits_fixed(const std::string& name) {
  return !name.empty() && name.size() <= 8 && name.find_first_of(" \t") == std::string::npos && name.front() != '$';
}

std::vector<std::string> resolve(const std::vector<std::string>& given, std::size_t count, char prefix,
                                 std::size_t offset, MpsFormat format) {
  std::vector<std::string> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string original = i < given.size() ? given[i] : std::string();
    const bool keep = format == MpsFormat::kFixed
                          ? fits_fixed(original)
                          : !original.empty() && original.find_first_of(" \t") == std::string::npos;
    out[i] = keep ? original : fmt::format("{}{}", prefix, offset + i);
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.12g}", v); }

class Writer {
 public:
  Writer(std::ostream& out, MpsFormat format) : out_(out), fixed_(format == MpsFormat::kFixed) {}

  void section(std::string_view s) { out_ << s << '\n'; }

  void entry(std::string_view type, std::string_view f2, std::string_view f3, std::string_view f4 = {}) {
    std::string line = fixed_ ? fmt::format(" {:<2} {:<8}  {:<8}  {:>12}", type, f2, f3, f4)
                              : fmt::format(" {} {} {} {}", type, f2, f3, f4);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out_ << line << '\n';
  }

 private:
  std::ostream& out_;
  bool fixed_;
};

}  // namespace

MpsNames mps_names(const MilpProblem& milp, MpsFormat format) {
  const auto& lp = milp.lp;
  MpsNames n;
  n.columns = resolve(milp.variable_names, lp.num_variables(), 'C', 0, format);
  n.inequalities = resolve(milp.inequality_names, lp.num_inequalities(), 'R', 0, format);
  n.equalities = resolve(milp.equality_names, lp.num_equalities(), 'R', lp.num_inequalities(), format);

  std::vector<std::string> problems;
  auto check = [&](const std::vector<std::vector<std::string>*>& groups, const char* what,
                   const std::vector<std::string>& reserved) {
    std::map<std::string, int> seen;
    for (const auto& r : reserved) seen[r] = 1;
    for (auto* g : groups)
      for (const auto& name : *g) ++seen[name];
    for (const auto& [name, count] : seen)
      if (count > 1) problems.push_back(fmt::format("{} name '{}' used {} times", what, name, count));
  };
  auto originals = [](const std::vector<std::string>& given) {
    std::vector<std::string> out;
    for (const auto& g : given)
      if (!g.empty()) out.push_back(g);
    return out;
  };
  auto given_cols = originals(milp.variable_names);
  auto given_ineq = originals(milp.inequality_names), given_eq = originals(milp.equality_names);
  check({&given_cols}, "column", {});
  check({&given_ineq, &given_eq}, "row", {});
  if (problems.empty()) {
    check({&n.columns}, "mangled column", {});
    check({&n.inequalities, &n.equalities}, "mangled row", {"OBJ"});
  }
  if (!problems.empty()) {
    std::vector<Violation> v;
    for (auto& p : problems) v.push_back({"mps", p});
    throw ValidationError(std::move(v));
  }
  return n;
}

void write_mps(const MilpProblem& milp, std::ostream& out, const MpsOptions& options) {
  const auto& lp = milp.lp;
  lp.check_dimensions();
  if (milp.objective_offset != 0.0)
    throw ValidationError("mps", "objective has a constant term; the assembler must keep it constant-free");
  const auto names = mps_names(milp, options.format);
  std::vector<bool> is_int(lp.num_variables(), false);
  for (int j : milp.binaries) is_int.at(static_cast<std::size_t>(j)) = true;

  Writer w(out, options.format);
  out << "NAME          " << options.problem_name << '\n';
  w.section("ROWS");
  w.entry("N", "OBJ", "");
  for (const auto& r : names.inequalities) w.entry("L", r, "");
  for (const auto& r : names.equalities) w.entry("E", r, "");

  w.section("COLUMNS");
  bool in_int = false;
  int marker = 0;
  const bool fixed = options.format == MpsFormat::kFixed;
  auto mark = [&](const char* kind) {
    const std::string m = fmt::format("M{}", marker++);
    if (fixed)
      out << fmt::format("    {:<8}  {:<8}  {:>12}   {}\n", m, "'MARKER'", "", kind);
    else
      out << fmt::format(" {} 'MARKER' {}\n", m, kind);
  };
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    if (is_int[j] != in_int) {
      mark(is_int[j] ? "'INTORG'" : "'INTEND'");
      in_int = is_int[j];
    }
    const auto& c = names.columns[j];
    bool any = false;
    if (lp.cost[j] != 0.0) {
      w.entry("", c, "OBJ", num(lp.cost[j]));
      any = true;
    }
    for (SparseMatrix::InnerIterator it(lp.inequality, static_cast<int>(j)); it; ++it)
      if (it.value() != 0.0) {
        w.entry("", c, names.inequalities[it.row()], num(it.value()));
        any = true;
      }
    for (SparseMatrix::InnerIterator it(lp.equality, static_cast<int>(j)); it; ++it)
      if (it.value() != 0.0) {
        w.entry("", c, names.equalities[it.row()], num(it.value()));
        any = true;
      }
    if (!any) w.entry("", c, "OBJ", "0");
  }
  if (in_int) mark("'INTEND'");

  w.section("RHS");
  for (std::size_t i = 0; i < lp.num_inequalities(); ++i)
    if (lp.inequality_rhs[i] != 0.0) w.entry("", "RHS", names.inequalities[i], num(lp.inequality_rhs[i]));
  for (std::size_t i = 0; i < lp.num_equalities(); ++i)
    if (lp.equality_rhs[i] != 0.0) w.entry("", "RHS", names.equalities[i], num(lp.equality_rhs[i]));

  w.section("BOUNDS");
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const double l = lp.lower[j], u = lp.upper[j];
    const auto& c = names.columns[j];
    if (l == u) {
      w.entry("FX", "BND", c, num(l));
      continue;
    }
    if (std::isinf(l) && std::isinf(u)) {
      w.entry("FR", "BND", c);
      continue;
    }
    if (std::isinf(l)) w.entry("MI", "BND", c);
    else if (l != 0.0 || (std::isfinite(u) && u < 0.0) || is_int[j]) w.entry("LO", "BND", c, num(l));
    if (std::isfinite(u)) w.entry("UP", "BND", c, num(u));
  }
  out << "ENDATA\n";
}

std::string write_mps(const MilpProblem& milp, const MpsOptions& options) {
  std::ostringstream s;
  write_mps(milp, s, options);
  return s.str();
}

}  // namespace tepps
