#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tepps {

enum class SeriesKind { kLoad, kCapacityFactor };

/// Hourly profile. Load profiles are normalized so that max == 1.
struct HourlySeries {
  SeriesKind kind = SeriesKind::kLoad;
  std::vector<double> values;

  std::size_t length() const { return values.size(); }
};

/// One joint load-wind operating point: system load level (fraction of
/// peak), base wind capacity factor, and the hours it represents.
struct ScenarioRow {
  double load_level = 0.0;
  double wind_cf = 0.0;
  double hours = 0.0;

  bool operator==(const ScenarioRow&) const = default;
};

/// Reads one named column of a CSV with a header row. Accepts LF or CRLF.
HourlySeries ingest_profile(std::istream& csv, std::string_view column, SeriesKind kind);
HourlySeries ingest_profile(std::string_view csv_text, std::string_view column, SeriesKind kind);

struct KMeansResult {
  std::vector<ScenarioRow> scenarios;
  std::vector<int> assignment;          // cluster of every hour
  std::vector<double> wcss_history;     // within-cluster sum of squares per iteration
  int iterations = 0;
};

/// Clusters the hourly (load, wind cf) points into k joint scenarios with
/// k-means++ initialization and Lloyd iterations.
KMeansResult kmeans_cluster(const HourlySeries& load, const HourlySeries& wind, int k,
                            std::uint64_t seed, int max_iterations = 300);

std::vector<ScenarioRow> kmeans_reduce(const HourlySeries& load, const HourlySeries& wind, int k,
                                       std::uint64_t seed);

std::vector<ScenarioRow> scenarios_from_table(const std::vector<ScenarioRow>& rows);

/// The ten reduced load-wind scenarios of the IEEE 24-bus planning study.
std::vector<ScenarioRow> rts24_reference_scenarios();

/// CSV with header load_level,wind_cf,hours.
std::string write_scenario_csv(const std::vector<ScenarioRow>& rows);
std::vector<ScenarioRow> read_scenario_csv(std::string_view text);

}  // namespace tepps
