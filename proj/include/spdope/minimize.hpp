#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>
#include <json.hpp>

#include "spdope/energy.hpp"

namespace spdope {

enum class StepControl { backtracking, barzilai_borwein };
enum class InitKind { gaussian, file, previous };

StepControl parse_step_control(const std::string& s);
InitKind parse_init_kind(const std::string& s);
const char* to_string(StepControl s);
const char* to_string(InitKind k);

struct MinimizeConfig {
  double tau0 = 0.05;
  std::size_t max_iters = 4000;
  /// Stop when ||grad E + omega u|| / ||u||_{H1} falls below this.
  double grad_tol = 1e-6;
  /// Energy changes below this (relative to max(1, |E|)) count as a stall.
  double energy_tol = 1e-12;
  StepControl step = StepControl::barzilai_borwein;
  InitKind init = InitKind::gaussian;
  /// Gaussian initializer width; 0 picks it from a scan of trial energies.
  double init_width = 0.0;
  /// Snapshot path for InitKind::file.
  std::string init_path;
  std::uint64_t seed = 1;
  std::size_t restarts = 3;
  /// Relative size of the seeded perturbation added to each restart.
  double perturbation = 1e-3;

  void validate() const;
  double eps_neg() const noexcept { return 10.0 * energy_tol; }
};

struct IdentityResiduals {
  Residual nehari;
  Residual pohozaev;
  Residual energy_identity;
  double gradient = 0.0;
};

struct MinimizerResult {
  double mu = 0.0;
  ComplexField u_min;
  EnergyBreakdown breakdown;
  double omega = 0.0;
  IdentityResiduals residuals;
  std::size_t iterations = 0;
  bool converged = false;
  /// Share of |u|^2 in the outer two-cell shell.
  double boundary_leak = 0.0;
  std::vector<std::string> warnings;

  double c_value() const noexcept { return breakdown.E; }
  nlohmann::ordered_json to_json() const;
};

/// Minimizes E on ||u||^2 = mu by a normalized gradient flow with restarts.
/// `extra_starts` are rescaled to mass mu and tried in addition to the
/// configured initializer (warm starts, minimizers of related problems).
MinimizerResult minimize_at_mass(double mu, const DopingProfile& profile, const PhysParams& params,
                                 const MinimizeConfig& config, SpectralWorkspace& ws,
                                 std::span<const ComplexField> extra_starts = {});

struct CurveRow {
  double mu;
  double c;
  double omega;
  IdentityResiduals residuals;
  std::size_t iters;
  bool converged;
};

struct CurveTable {
  std::vector<CurveRow> rows;
  /// c nonincreasing in mu within 2 energy_tol.
  bool monotone = true;
  std::vector<MinimizerResult> results;

  static std::string csv_header();
  std::string csv() const;
};

/// Warm-started sweep over ascending mu values; never aborts on a bad row.
CurveTable c_curve(std::span<const double> mus, const DopingProfile& profile, const PhysParams& params,
                   const MinimizeConfig& config, SpectralWorkspace& ws);

/// Invalid bisection bracket; carries the measured endpoint energies.
class BracketError : public std::invalid_argument {
 public:
  BracketError(const std::string& what, double c_lo, double c_hi)
      : std::invalid_argument(what), c_lo_(c_lo), c_hi_(c_hi) {}
  double c_lo() const noexcept { return c_lo_; }
  double c_hi() const noexcept { return c_hi_; }

 private:
  double c_lo_;
  double c_hi_;
};

struct MuStarResult {
  double mu_star;
  double lo;
  double hi;
  double c_lo;
  double c_hi;
  std::size_t evaluations;
  std::optional<std::string> warning;
};

/// c_infinity(mu), the doping-free problem.
MinimizerResult c_infinity(double mu, const PhysParams& params, const MinimizeConfig& config, SpectralWorkspace& ws,
                           std::span<const ComplexField> extra_starts = {});

/// Bisection on the predicate c_inf(mu) < -eps_neg.
MuStarResult mu_star(const PhysParams& params, const MinimizeConfig& config, double bracket_lo, double bracket_hi,
                     double tol, SpectralWorkspace& ws);

struct SubaddRow {
  double fraction;
  double mu_part;
  double c_part;       // c(mu')
  double cinf_rest;    // c_inf(mu - mu')
  double c_total;      // c(mu)
  double margin;       // c(mu') + c_inf(mu - mu') - c(mu)
  bool converged;
};

struct HomogeneityRow {
  double lambda;
  double s;
  double c_scaled;     // c(lambda s)
  double lambda_c;     // lambda c(s)
  double difference;   // c(lambda s) - lambda c(s)
};

struct SubaddReport {
  double mu;
  std::vector<SubaddRow> rows;
  std::vector<HomogeneityRow> homogeneity;
  std::optional<std::string> warning;

  static std::string csv_header();
  std::string csv() const;
  nlohmann::ordered_json to_json() const;
};

/// Strict sub-additivity margins. All values are upper bounds from a
/// heuristic flow, so positive margins are consistent with the inequality,
/// not a proof of it.
SubaddReport subadditivity_scan(double mu, std::span<const double> fractions, const DopingProfile& profile,
                                const PhysParams& params, const MinimizeConfig& config, SpectralWorkspace& ws);

struct FloorRow {
  double box_length;
  double floor;
  double grad_res;
  bool converged;
};

/// inf over ||u|| = 1 of ||grad u||^2 + 2 e^2 <S2 u, u> on boxes of the
/// given side lengths, N points per axis.
std::vector<FloorRow> spectral_floor(const DopingProfile& profile, double e, std::span<const double> boxes,
                                     std::size_t points_per_axis, const MinimizeConfig& config);

/// Seeded smooth random field: white noise filtered by exp(-|k|^2 l^2 / 2)
/// and shaped by a Gaussian envelope of width `envelope` at the origin.
ComplexField smooth_random_field(const Grid3& grid, std::uint64_t seed, double correlation_length, double envelope,
                                 SpectralWorkspace& ws);

/// sqrt(||u||^2 + ||grad u||^2).
double h1_norm(const ComplexField& u, SpectralWorkspace& ws);

}  // namespace spdope
