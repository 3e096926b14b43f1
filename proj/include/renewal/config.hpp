#pragma once

// Run configuration shared by the CLI and the Python bindings. A config is a
// TOML (or JSON) document with flat tables:
//
//   seed = 1
//   [law]        family = "exponential", rate = 1.0
//   [initial]    b = 0.0, b_prime = 0.0
//   [coupling]   theta = 4.0 | "auto" | "optimize"
//   [bounds]     ell = [1.0], beta = "auto" | [0.1], rel_tol, abs_tol, tv_column
//   [simulation] replicas, event_cap, tau_csv
//   [tv]         t_grid, replicas, bins
//   [lorden]     replicas, horizon
//   [output]     dir
//
// Every field has a default except the law.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "renewal/quadrature.hpp"

namespace renewal {

enum class ThresholdMode { fixed, automatic, optimize };

/// Which bound fills the `analytic_bound` column of tv_curve.csv.
enum class TvColumn { best, poly, exp };

struct RunConfig {
  nlohmann::json law;  // {family, params}
  double b = 0.0;
  double b_prime = 0.0;
  ThresholdMode threshold_mode = ThresholdMode::automatic;
  double threshold = 0.0;  // used when threshold_mode == fixed
  std::vector<double> ell{1.0};
  std::optional<std::vector<double>> beta;  // empty optional: beta0 / 2
  std::vector<double> t_grid{5.0, 10.0, 20.0, 50.0};
  std::size_t replicas = 100000;
  std::size_t tv_replicas = 0;  // 0: same as replicas
  std::size_t tv_bins = 0;      // 0: ceil(N^{1/3})
  std::size_t lorden_replicas = 10000;
  std::optional<double> lorden_horizon;  // default 50 E xi
  std::uint64_t seed = 1;
  std::uint64_t event_cap = 1'000'000;
  bool tau_csv = false;
  std::string output_dir;
  quad::Options quad;
  TvColumn tv_column = TvColumn::best;
};

/// Converts TOML text to the equivalent JSON document. Throws ConfigError
/// with the parser's line/column on malformed input.
nlohmann::json toml_to_json(std::string_view text, std::string_view source = "config");

/// Validates and fills defaults. ConfigError names the offending field as a
/// dotted path ("coupling.theta", "law.params.C", ...).
RunConfig config_from_json(const nlohmann::json& doc);

/// Inverse of config_from_json; round-trips exactly.
nlohmann::json config_to_json(const RunConfig& config);

/// Reads a `.toml` or `.json` file.
RunConfig load_config(const std::filesystem::path& path);

std::string_view to_string(ThresholdMode mode);
std::string_view to_string(TvColumn column);

}  // namespace renewal
