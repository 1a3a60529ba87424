#include "tepps/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "tepps/errors.hpp"

namespace tepps {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(std::string_view cell, std::size_t line, std::size_t column) {
  double v = 0.0;
  const char* first = cell.data();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError(fmt::format("non-numeric cell '{}'", cell), line, column);
  return v;
}

double sq(double x) { return x * x; }

}  // namespace

HourlySeries ingest_profile(std::istream& csv, std::string_view column, SeriesKind kind) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(csv, header_line)) {
    ++line_no;
    if (!trim(header_line).empty()) break;
  }
  if (trim(header_line).empty()) throw ParseError("empty CSV file");
  if (header_line.size() >= 3 && header_line.compare(0, 3, "\xEF\xBB\xBF") == 0) header_line.erase(0, 3);
  header = split_csv(header_line);
  auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw ParseError(fmt::format("CSV has no column named '{}'", column), line_no, 1);
  const auto col = static_cast<std::size_t>(it - header.begin());

  HourlySeries series{kind, {}};
  while (std::getline(csv, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() <= col) throw ParseError(fmt::format("row has no '{}' cell", column), line_no, 1);
    series.values.push_back(parse_cell(cells[col], line_no, col + 1));
  }
  if (series.values.empty()) throw ParseError("CSV has no data rows");

  if (kind == SeriesKind::kLoad) {
    const double peak = *std::max_element(series.values.begin(), series.values.end());
    if (!(peak > 0.0)) throw ParseError("load profile has no positive value to normalize by");
    for (double& v : series.values) v /= peak;
  } else {
    for (std::size_t h = 0; h < series.values.size(); ++h)
      if (series.values[h] < 0.0 || series.values[h] > 1.0)
        throw ParseError(fmt::format("capacity factor {} outside [0, 1] in data row {}", series.values[h], h + 1));
  }
  return series;
}

HourlySeries ingest_profile(std::string_view csv_text, std::string_view column, SeriesKind kind) {
  std::istringstream in{std::string(csv_text)};
  return ingest_profile(in, column, kind);
}

KMeansResult kmeans_cluster(const HourlySeries& load, const HourlySeries& wind, int k,
                            std::uint64_t seed, int max_iterations) {
  const std::size_t n = load.length();
  if (wind.length() != n) throw ValidationError("profiles", "load and wind series differ in length");
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw ValidationError("kmeans", fmt::format("k = {} outside [1, {}]", k, n));
  std::set<std::pair<double, double>> distinct;
  for (std::size_t h = 0; h < n; ++h) distinct.emplace(load.values[h], wind.values[h]);
  if (static_cast<std::size_t>(k) > distinct.size())
    throw ValidationError("kmeans", fmt::format("k = {} exceeds the {} distinct points", k, distinct.size()));

  const auto kk = static_cast<std::size_t>(k);
  auto dist2 = [&](std::size_t h, double cx, double cy) {
    return sq(load.values[h] - cx) + sq(wind.values[h] - cy);
  };

  // k-means++ seeding
  std::mt19937_64 rng(seed);
  std::vector<double> cx, cy;
  {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t first = pick(rng);
    cx.push_back(load.values[first]);
    cy.push_back(wind.values[first]);
    std::vector<double> d2(n);
    for (std::size_t h = 0; h < n; ++h) d2[h] = dist2(h, cx[0], cy[0]);
    while (cx.size() < kk) {
      double total = 0.0;
      for (double v : d2) total += v;
      std::size_t chosen = n;
      if (total > 0.0) {
        const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        double acc = 0.0;
        for (std::size_t h = 0; h < n; ++h) {
          acc += d2[h];
          if (d2[h] > 0.0 && acc >= target) {
            chosen = h;
            break;
          }
        }
        if (chosen == n)  // rounding at the tail
          for (std::size_t h = n; h-- > 0;)
            if (d2[h] > 0.0) {
              chosen = h;
              break;
            }
      }
      cx.push_back(load.values[chosen]);
      cy.push_back(wind.values[chosen]);
      for (std::size_t h = 0; h < n; ++h) d2[h] = std::min(d2[h], dist2(h, cx.back(), cy.back()));
    }
  }

  KMeansResult result;
  result.assignment.assign(n, -1);
  std::vector<std::size_t> count(kk);

  auto assign_all = [&] {
    bool changed = false;
    for (std::size_t h = 0; h < n; ++h) {
      int best = 0;
      double best_d = dist2(h, cx[0], cy[0]);
      for (std::size_t c = 1; c < kk; ++c) {
        const double d = dist2(h, cx[c], cy[c]);
        if (d < best_d) {  // ties keep the lowest cluster index
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (result.assignment[h] != best) {
        result.assignment[h] = best;
        changed = true;
      }
    }
    return changed;
  };

  auto wcss = [&] {
    double s = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      const auto c = static_cast<std::size_t>(result.assignment[h]);
      s += dist2(h, cx[c], cy[c]);
    }
    return s;
  };

  auto update_centroids = [&] {
    std::vector<double> sx(kk, 0.0), sy(kk, 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t h = 0; h < n; ++h) {
      const auto c = static_cast<std::size_t>(result.assignment[h]);
      sx[c] += load.values[h];
      sy[c] += wind.values[h];
      ++count[c];
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (count[c] > 0) {
        cx[c] = sx[c] / static_cast<double>(count[c]);
        cy[c] = sy[c] / static_cast<double>(count[c]);
      }
    }
  };

  // Empty clusters take the point farthest from its own centroid.
  auto repair_empty = [&] {
    bool repaired = false;
    for (std::size_t c = 0; c < kk; ++c) {
      if (count[c] > 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t h = 0; h < n; ++h) {
        const auto own = static_cast<std::size_t>(result.assignment[h]);
        if (count[own] <= 1) continue;
        const double d = dist2(h, cx[own], cy[own]);
        if (d > far_d) {
          far_d = d;
          far = h;
        }
      }
      if (far == n) throw Error("kmeans: cannot repair empty cluster");
      --count[static_cast<std::size_t>(result.assignment[far])];
      result.assignment[far] = static_cast<int>(c);
      count[c] = 1;
      cx[c] = load.values[far];
      cy[c] = wind.values[far];
      repaired = true;
    }
    return repaired;
  };

  assign_all();
  update_centroids();
  while (repair_empty()) update_centroids();
  result.wcss_history.push_back(wcss());
  for (int it = 0; it < max_iterations; ++it) {
    const bool changed = assign_all();
    update_centroids();
    while (repair_empty()) update_centroids();
    const double w = wcss();
    result.wcss_history.push_back(w);
    ++result.iterations;
    if (!changed) break;
  }

  for (std::size_t c = 0; c < kk; ++c)
    result.scenarios.push_back({cx[c], cy[c], static_cast<double>(count[c])});
  return result;
}

std::vector<ScenarioRow> kmeans_reduce(const HourlySeries& load, const HourlySeries& wind, int k,
                                       std::uint64_t seed) {
  return kmeans_cluster(load, wind, k, seed).scenarios;
}

std::vector<ScenarioRow> scenarios_from_table(const std::vector<ScenarioRow>& rows) {
  for (std::size_t t = 0; t < rows.size(); ++t)
    if (!(rows[t].hours > 0.0))
      throw ValidationError(fmt::format("scenario {}", t + 1), "hours must be positive");
  return rows;
}

std::vector<ScenarioRow> rts24_reference_scenarios() {
  return {{0.8307, 0.4287, 355},  {0.5456, 0.7280, 742},  {0.5220, 0.0946, 1323},
          {0.6999, 0.7739, 553},  {0.7301, 0.1523, 927},  {0.5224, 0.5454, 780},
          {0.6496, 0.3616, 1057}, {0.4999, 0.3577, 900},  {0.5556, 0.2185, 1328},
          {0.6713, 0.5659, 795}};
}

std::string write_scenario_csv(const std::vector<ScenarioRow>& rows) {
  std::string out = "load_level,wind_cf,hours\n";
  for (const auto& r : rows) out += fmt::format("{:.17g},{:.17g},{:.17g}\n", r.load_level, r.wind_cf, r.hours);
  return out;
}

std::vector<ScenarioRow> read_scenario_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, header_line)) {
    ++line_no;
    if (!trim(header_line).empty()) break;
  }
  header = split_csv(header_line);
  auto col = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(fmt::format("scenario CSV has no column '{}'", name), line_no, 1);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cl = col("load_level"), cw = col("wind_cf"), ch = col("hours");
  std::vector<ScenarioRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() < header.size()) throw ParseError("truncated scenario row", line_no, 1);
    rows.push_back({parse_cell(cells[cl], line_no, cl + 1), parse_cell(cells[cw], line_no, cw + 1),
                    parse_cell(cells[ch], line_no, ch + 1)});
  }
  return scenarios_from_table(rows);
}

}  // namespace tepps
