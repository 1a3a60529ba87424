#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "tepps/case_ingest.hpp"

namespace tepps {

namespace {

struct Token {
  std::string_view text;
  std::size_t line;
  std::size_t column;
};

using Row = std::vector<Token>;

struct Matrix {
  std::string name;
  std::size_t line = 0;
  std::vector<Row> rows;
};

// Splits "mpc.<name> = [ ... ];" blocks into rows of numeric tokens. Scalar
// assignments (mpc.baseMVA = 100;) are returned as a single-row matrix.
class CaseScanner {
 public:
  explicit CaseScanner(std::string_view text) : text_(text) {}

  std::vector<Matrix> scan(std::vector<std::string>& warnings) {
    std::vector<Matrix> out;
    while (skip_to_assignment()) {
      Matrix m;
      m.line = line_;
      m.name = read_identifier();
      skip_blank();
      if (peek() != '=') continue;
      advance();
      skip_blank();
      if (peek() == '[') {
        advance();
        m.rows = read_rows(m.name);
        out.push_back(std::move(m));
      } else if (peek() == '{') {
        warnings.push_back(fmt::format("ignored section mpc.{} (line {})", m.name, m.line));
        skip_until('}');
      } else {
        Row row;
        while (pos_ < text_.size() && peek() != ';' && peek() != '\n') {
          if (std::isspace(static_cast<unsigned char>(peek()))) {
            advance();
            continue;
          }
          if (peek() == '\'' || peek() == '"') {
            row.clear();
            skip_line();
            break;
          }
          row.push_back(read_token());
        }
        if (!row.empty()) {
          m.rows.push_back(std::move(row));
          out.push_back(std::move(m));
        }
      }
    }
    return out;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      line_start_ = pos_ + 1;
    }
    ++pos_;
  }

  std::size_t column() const { return pos_ - line_start_ + 1; }

  void skip_line() {
    while (pos_ < text_.size() && peek() != '\n') advance();
  }

  void skip_until(char c) {
    while (pos_ < text_.size() && peek() != c) {
      if (peek() == '%') {
        skip_line();
        continue;
      }
      advance();
    }
    if (pos_ < text_.size()) advance();
  }

  void skip_blank() {
    while (pos_ < text_.size() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }

  // Moves to the character after the next "mpc." that starts a statement.
  bool skip_to_assignment() {
    while (pos_ < text_.size()) {
      if (peek() == '%') {
        skip_line();
        continue;
      }
      if (text_.substr(pos_, 4) == "mpc.") {
        for (int i = 0; i < 4; ++i) advance();
        return true;
      }
      advance();
    }
    return false;
  }

  std::string read_identifier() {
    std::string id;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      id.push_back(peek());
      advance();
    }
    return id;
  }

  Token read_token() {
    Token tok{{}, line_, column()};
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = peek();
      if (std::isspace(static_cast<unsigned char>(c)) || c == ';' || c == ']' || c == ',' || c == '%')
        break;
      advance();
    }
    tok.text = text_.substr(start, pos_ - start);
    return tok;
  }

  std::vector<Row> read_rows(const std::string& name) {
    std::vector<Row> rows;
    Row row;
    auto flush = [&] {
      if (!row.empty()) rows.push_back(std::move(row));
      row.clear();
    };
    while (true) {
      if (pos_ >= text_.size())
        throw ParseError(fmt::format("unterminated matrix mpc.{}", name), line_, column());
      const char c = peek();
      if (c == ']') {
        advance();
        flush();
        return rows;
      }
      if (c == '%') {
        skip_line();
        continue;
      }
      if (c == ';' || c == '\n') {
        advance();
        flush();
        continue;
      }
      if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      row.push_back(read_token());
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
};

double to_number(const Token& tok) {
  std::string s(tok.text);
  if (s == "Inf" || s == "inf") return kInfinity;
  if (s == "-Inf" || s == "-inf") return -kInfinity;
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || s.empty())
    throw ParseError(fmt::format("malformed numeric token '{}'", s), tok.line, tok.column);
  return value;
}

int to_int(const Token& tok) {
  const double v = to_number(tok);
  if (v != std::floor(v) || !std::isfinite(v))
    throw ParseError(fmt::format("expected integer, got '{}'", tok.text), tok.line, tok.column);
  return static_cast<int>(v);
}

const Matrix* find(const std::vector<Matrix>& ms, std::string_view name) {
  for (const auto& m : ms)
    if (m.name == name) return &m;
  return nullptr;
}

const Matrix& require(const std::vector<Matrix>& ms, std::string_view name) {
  if (const auto* m = find(ms, name)) return *m;
  throw ParseError(fmt::format("missing mandatory section mpc.{}", name));
}

void require_columns(const Row& row, std::size_t n, const std::string& section, std::size_t index) {
  if (row.size() < n) {
    const auto& tok = row.empty() ? Token{{}, 0, 0} : row.front();
    throw ParseError(fmt::format("truncated {} row {}: expected at least {} columns, found {}",
                                 section, index + 1, n, row.size()),
                     tok.line, tok.column);
  }
}

}  // namespace

double marginal_cost(const RawGenerator& gen) {
  const auto& c = gen.cost_coefficients;
  if (c.size() <= 1) return 0.0;
  const double linear = c[c.size() - 2];
  const double quadratic = c.size() >= 3 ? c[c.size() - 3] : 0.0;
  if (linear == 0.0 && quadratic != 0.0) return quadratic * gen.p_max_mw;  // 2*c2*(pmax/2)
  return linear;
}

RawCaseFile parse_matpower(std::string_view text) {
  RawCaseFile raw;
  auto matrices = CaseScanner(text).scan(raw.warnings);

  const Matrix& bus = require(matrices, "bus");
  const Matrix& gen = require(matrices, "gen");
  const Matrix& branch = require(matrices, "branch");
  const Matrix* gencost = find(matrices, "gencost");

  if (const auto* base = find(matrices, "baseMVA")) {
    if (base->rows.empty() || base->rows.front().empty())
      throw ParseError("empty mpc.baseMVA", base->line, 1);
    raw.mva_base = to_number(base->rows.front().front());
  } else {
    raw.warnings.push_back("mpc.baseMVA missing; using 100");
  }
  for (const auto& m : matrices) {
    static constexpr std::string_view known[] = {"bus", "gen", "branch", "gencost", "baseMVA"};
    if (std::find(std::begin(known), std::end(known), m.name) == std::end(known))
      raw.warnings.push_back(fmt::format("ignored section mpc.{} (line {})", m.name, m.line));
  }

  for (std::size_t r = 0; r < bus.rows.size(); ++r) {
    const Row& row = bus.rows[r];
    require_columns(row, 3, "bus", r);
    raw.buses.push_back({to_int(row[0]), to_int(row[1]), to_number(row[2])});
  }

  std::vector<std::optional<std::vector<double>>> costs;
  if (gencost) {
    for (std::size_t r = 0; r < gencost->rows.size(); ++r) {
      const Row& row = gencost->rows[r];
      require_columns(row, 4, "gencost", r);
      const int model = to_int(row[0]);
      const int n = to_int(row[3]);
      const std::size_t needed = 4 + static_cast<std::size_t>(model == 1 ? 2 * n : n);
      require_columns(row, needed, "gencost", r);
      std::vector<double> coeffs;
      if (model == 2) {
        for (int i = 0; i < n; ++i) coeffs.push_back(to_number(row[4 + i]));
      } else if (model == 1) {
        // piecewise linear: use the average slope between the end points
        const double p0 = to_number(row[4]), f0 = to_number(row[5]);
        const double p1 = to_number(row[4 + 2 * (n - 1)]), f1 = to_number(row[5 + 2 * (n - 1)]);
        const double slope = p1 != p0 ? (f1 - f0) / (p1 - p0) : 0.0;
        coeffs = {slope, 0.0};
        raw.warnings.push_back(fmt::format("gencost row {} is piecewise linear; using average slope", r + 1));
      } else {
        throw ParseError(fmt::format("unsupported gencost model {} in row {}", model, r + 1),
                         row[0].line, row[0].column);
      }
      costs.emplace_back(std::move(coeffs));
    }
  } else {
    raw.warnings.push_back("mpc.gencost missing; generator costs set to zero");
  }

  for (std::size_t r = 0; r < gen.rows.size(); ++r) {
    const Row& row = gen.rows[r];
    require_columns(row, 10, "gen", r);
    const int status = to_int(row[7]);
    RawGenerator g{to_int(row[0]), to_number(row[9]), to_number(row[8]), {}};
    if (r < costs.size() && costs[r]) g.cost_coefficients = *costs[r];
    if (status <= 0) {
      raw.warnings.push_back(fmt::format("gen row {} out of service; skipped", r + 1));
      continue;
    }
    if (g.p_max_mw <= 0.0 && g.p_min_mw <= 0.0) {
      raw.warnings.push_back(fmt::format("gen row {} has no active capacity (synchronous condenser); skipped", r + 1));
      continue;
    }
    raw.generators.push_back(std::move(g));
  }

  for (std::size_t r = 0; r < branch.rows.size(); ++r) {
    const Row& row = branch.rows[r];
    require_columns(row, 6, "branch", r);
    if (row.size() >= 11 && to_int(row[10]) <= 0) {
      raw.warnings.push_back(fmt::format("branch row {} out of service; skipped", r + 1));
      continue;
    }
    raw.branches.push_back({to_int(row[0]), to_int(row[1]), to_number(row[3]), to_number(row[5])});
  }

  if (raw.buses.empty()) throw ParseError("mpc.bus is empty", bus.line, 1);
  if (raw.generators.empty()) throw ParseError("mpc.gen has no usable rows", gen.line, 1);
  if (raw.branches.empty()) throw ParseError("mpc.branch is empty", branch.line, 1);

  auto has_bus = [&raw](int id) {
    return std::any_of(raw.buses.begin(), raw.buses.end(), [id](const RawBus& b) { return b.id == id; });
  };
  for (const auto& g : raw.generators)
    if (!has_bus(g.bus)) throw ParseError(fmt::format("generator references unknown bus {}", g.bus));
  for (const auto& b : raw.branches)
    if (!has_bus(b.from_bus) || !has_bus(b.to_bus))
      throw ParseError(fmt::format("branch {}-{} references unknown bus", b.from_bus, b.to_bus));
  return raw;
}

RawCaseFile read_matpower_file(const std::string& path) {
  return parse_matpower(read_text_file(path));
}

std::string print_matpower(const RawCaseFile& raw) {
  std::string out = "function mpc = tepps_case\nmpc.version = '2';\n";
  out += fmt::format("mpc.baseMVA = {:.17g};\n\n", raw.mva_base);
  out += "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\nmpc.bus = [\n";
  for (const auto& b : raw.buses)
    out += fmt::format("\t{}\t{}\t{:.17g}\t0\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;\n", b.id, b.type, b.load_mw);
  out += "];\n\n%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\nmpc.gen = [\n";
  for (const auto& g : raw.generators)
    out += fmt::format("\t{}\t0\t0\t0\t0\t1\t100\t1\t{:.17g}\t{:.17g};\n", g.bus, g.p_max_mw, g.p_min_mw);
  out += "];\n\n%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\nmpc.branch = [\n";
  for (const auto& b : raw.branches)
    out += fmt::format("\t{}\t{}\t0\t{:.17g}\t0\t{:.17g}\t0\t0\t0\t0\t1\t-360\t360;\n", b.from_bus,
                       b.to_bus, b.reactance_pu, b.rating_mva);
  out += "];\n\n%% 2 startup shutdown n c(n-1) ... c0\nmpc.gencost = [\n";
  for (const auto& g : raw.generators) {
    out += fmt::format("\t2\t0\t0\t{}", g.cost_coefficients.size());
    for (double c : g.cost_coefficients) out += fmt::format("\t{:.17g}", c);
    out += ";\n";
  }
  out += "];\n";
  return out;
}

RawCaseFile apply_modifiers(RawCaseFile raw, double load_scale, double gen_scale,
                            double thermal_derate) {
  if (!(load_scale > 0.0) || !(gen_scale > 0.0) || !(thermal_derate > 0.0))
    throw ValidationError("modifiers", "scaling factors must be positive");
  for (auto& b : raw.buses) b.load_mw *= load_scale;
  for (auto& g : raw.generators) {
    g.p_min_mw *= gen_scale;
    g.p_max_mw *= gen_scale;
  }
  for (auto& br : raw.branches) br.rating_mva *= thermal_derate;
  return raw;
}

}  // namespace tepps
