#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>
#include <json.hpp>

#include "spdope/minimize.hpp"
#include "spdope/propagate.hpp"
#include "spdope/stability.hpp"

namespace spdope {

/// Parses the TOML subset used by run configs: [tables], dotted keys,
/// strings, numbers, booleans, arrays and inline tables. Errors are
/// ConfigError with the line number in the message.
nlohmann::json parse_toml(const std::string& text);

/// One scalar or array value in TOML syntax; bare words fall back to strings.
nlohmann::json parse_toml_value(const std::string& text);

/// Applies `a.b.c=value` to a parsed document.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct GridConfig {
  std::size_t N = 32;
  double L = 16.0;
};

struct ScanConfig {
  std::vector<double> mu;
  bool warm_start = true;
};

struct MuStarConfig {
  double lo = 0.0;
  double hi = 0.0;
  double tol = 1e-2;
};

struct SubaddConfig {
  double mu = 0.0;
  std::vector<double> fractions{0.3, 0.5, 0.7};
};

struct FloorConfig {
  std::vector<double> boxes{8.0, 16.0};
};

struct StabilityConfig {
  double delta = 1e-2;
  PerturbationKind perturbation = PerturbationKind::random_h1;
  Vec3 direction{1.0, 0.0, 0.0};
  /// Pass threshold as a multiple of delta (harness convention).
  double threshold_factor = 5.0;
};

struct EvolveConfig {
  /// "minimizer", "gaussian" or "file".
  std::string init = "minimizer";
  std::string path;
  double width = 1.0;
};

struct RunConfig {
  GridConfig grid;
  PhysParams params;
  DopingProfile profile = DopingProfile::zero();
  MinimizeConfig minimize;
  double mu = 1.0;
  PropagatorConfig propagate;
  ScanConfig scan;
  MuStarConfig mu_star;
  SubaddConfig subadd;
  FloorConfig floor;
  StabilityConfig stability;
  EvolveConfig evolve;
  std::string check_field;
  std::string output = "out";
  std::uint64_t seed = 1;

  /// Validates every block; unknown keys are errors.
  static RunConfig from_json(const nlohmann::json& doc);
  /// Canonical document; from_json(to_json()) reproduces the config.
  nlohmann::ordered_json to_json() const;
  /// SHA-256 of the canonical document, hex encoded.
  std::string hash() const;
};

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

nlohmann::ordered_json profile_to_json(const DopingProfile& profile);
DopingProfile profile_from_json(const nlohmann::json& block);

}  // namespace spdope
