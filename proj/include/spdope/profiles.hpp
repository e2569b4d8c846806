#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spdope/field.hpp"
#include "spdope/grid.hpp"

namespace spdope {

struct BallSpec {
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 1.0;
  double amplitude = 1.0;
};

struct ZeroProfile {};
/// rho = epsilon exp(-alpha |x|^2)
struct GaussianProfile {
  double epsilon;
  double alpha;
};
/// rho = epsilon / (1 + |x|)^alpha, alpha > 2
struct PowerLawProfile {
  double epsilon;
  double alpha;
};
/// rho = sum alpha_i 1_{B_i}, pairwise disjoint balls
struct BallsProfile {
  std::vector<BallSpec> balls;
};

/// Nonnegative background charge density. Construct through the factories,
/// which enforce positivity of amplitudes, the decay exponent and disjointness.
class DopingProfile {
 public:
  using Variant = std::variant<ZeroProfile, GaussianProfile, PowerLawProfile, BallsProfile>;

  DopingProfile() = default;
  static DopingProfile zero();
  static DopingProfile gaussian(double epsilon, double alpha);
  static DopingProfile power_law(double epsilon, double alpha);
  static DopingProfile balls(std::vector<BallSpec> balls);

  const Variant& variant() const noexcept { return v_; }
  bool is_zero() const noexcept { return std::holds_alternative<ZeroProfile>(v_); }
  bool is_smooth() const noexcept {
    return std::holds_alternative<GaussianProfile>(v_) || std::holds_alternative<PowerLawProfile>(v_);
  }
  const std::vector<BallSpec>* ball_list() const noexcept;
  std::string type_name() const;

  /// rho(x).
  double value(const Vec3& x) const;
  /// x . grad rho(x); throws UnsupportedDerivative for ball indicators.
  double x_grad(const Vec3& x) const;
  /// Same profile with every amplitude multiplied by `factor` > 0.
  DopingProfile scaled(double factor) const;
  /// Canonical text form; equal profiles give equal keys.
  std::string key() const;

  friend bool operator==(const DopingProfile& a, const DopingProfile& b) { return a.key() == b.key(); }

 private:
  explicit DopingProfile(Variant v) : v_(std::move(v)) {}
  Variant v_{ZeroProfile{}};
};

/// Nodal samples of rho. Ball indicators are sampled sharply ({0, alpha}).
/// Throws std::invalid_argument when a ball comes within 2h of the box edge.
RealField sample_rho(const DopingProfile& profile, const Grid3& grid);
RealField sample_x_grad_rho(const DopingProfile& profile, const Grid3& grid);

struct RhoNorms {
  double rho_65 = 0.0;                   // ||rho||_{6/5}
  std::optional<double> x_grad_rho_65;   // ||x . grad rho||_{6/5}, absent for balls
  /// Upper bound on the part of ||rho||_{6/5}^{6/5} lying outside the box
  /// (inscribed-ball tail integral); zero for compact profiles.
  double tail_bound = 0.0;
};
RhoNorms rho_norms(const DopingProfile& profile, const Grid3& grid);

struct BallGeometry {
  double extent;   // sup over the boundary of |x|
  double volume;
  double surface;
  double kappa1;   // surface / volume
  double kappa2;   // sup |grad w| on the boundary for the torsion function w
  double d_omega;  // extent |vol|^{1/6} |surf|^{1/2} (kappa1 |vol|^{1/3} + kappa2)^{1/2}
};
BallGeometry ball_geometry(const BallSpec& ball);

/// C with D(Omega) >= C |Omega|^{5/6}, from the isoperimetric inequality and kappa2 >= 1.
double d_omega_lower_bound_constant();

struct SphereQuadrature {
  std::size_t polar = 32;
  std::size_t azimuthal = 64;
};

/// -1/2 sum_i alpha_i  surface integral over dB_i of s1 (x . n_i), with s1
/// interpolated trilinearly. Rejects spheres reaching outside the box.
double a3_boundary(const RealField& s1, const std::vector<BallSpec>& balls, SphereQuadrature q = {});

}  // namespace spdope
