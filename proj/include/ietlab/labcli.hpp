#pragma once

// Experiment runner: configuration, dispatch to the library, CSV/JSON reports
// and SVG plots.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ietlab::lab {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// gauge, constants, tau, discrepancy, cf, liouville, akc, induce, tower,
/// towerbook, mix3, bc-measure, decisive.
const std::vector<std::string>& experiment_names();
bool is_experiment(std::string_view name);

struct ExperimentConfig {
  std::string experiment;
  std::string target;  // IET/rotation literal, alpha, or point-sequence spec
  std::map<std::string, std::string> params;
  std::uint64_t seed = 42;
  std::string horizons;  // "dyadic", "decade", or "N1,N2,..."; empty: experiment default
  std::map<std::string, std::string> outputs;  // csv, json

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// [experiment] name/target/seed/horizons, [params] free keys, [output] csv/json.
ExperimentConfig parse_ini(std::string_view text);
std::string to_ini(const ExperimentConfig& cfg);
ExperimentConfig parse_config_json(std::string_view text);
std::string to_json(const ExperimentConfig& cfg);
/// INI or JSON by file extension (.json means JSON).
ExperimentConfig load_config(const std::string& path);

struct Report {
  nlohmann::json json;  // config echo, version, result payload, timing
  std::string csv;      // empty when the experiment has no table
  int exit_code = 0;    // 0 ok, 2 a checked property failed
  std::string failure;  // what failed, when exit_code == 2
};

/// Throws Error(Config) for invalid parameters.
Report run(const ExperimentConfig& cfg);

/// The JSON report without the "timing" member, serialized.
std::string payload_bytes(const Report& r);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

/// Throws Error(BadCsv) on empty input, ragged rows or unterminated quotes.
CsvTable parse_csv(std::string_view text);

enum class PlotKind { Trace, Histogram, LogLog };
PlotKind parse_plot_kind(const std::string& s);

struct PlotOptions {
  std::optional<double> hline;  // horizontal reference line, e.g. an asymptote
  std::string hline_label;
  std::string title;
};

/// Deterministic SVG: fixed 640x400 viewBox, fixed number formatting.
/// trace: horizon against running_min per sample_id (log x axis).
/// histogram: counts per bin for each horizon.
/// loglog: first two numeric columns with a least-squares slope in the legend.
std::string emit_plot(const CsvTable& csv, PlotKind kind, const PlotOptions& opt = {});

}  // namespace ietlab::lab
