#pragma once

#include <optional>
#include <string>
#include <json.hpp>

#include "spdope/field.hpp"
#include "spdope/profiles.hpp"
#include "spdope/spectral.hpp"

namespace spdope {

/// Nonlinearity exponent p and coupling e.
struct PhysParams {
  double p = 2.2;
  double e = 1.0;

  /// Throws ConfigError unless e > 0 and 1 < p < 5.
  static PhysParams make(double p, double e);
  void validate() const;
  /// Existence and stability theory covers 2 < p < 7/3 only.
  bool in_theory_regime() const noexcept { return p > 2.0 && p < 7.0 / 3.0; }
  std::optional<std::string> regime_warning() const;
};

enum class A3Form { absent, smooth, boundary };
const char* to_string(A3Form form);

struct EnergyBreakdown {
  double p = 0.0;
  double e = 0.0;
  double kinetic = 0.0;       // 1/2 ||grad u||^2
  double power = 0.0;         // ||u||_{p+1}^{p+1} / (p+1)
  double A0 = 0.0;
  double A1 = 0.0;
  double A2 = 0.0;
  double A2prime = 0.0;
  std::optional<double> A3;
  A3Form a3_form = A3Form::absent;
  double E = 0.0;
  double scriptE = 0.0;       // E + e^2 A0
  double mass = 0.0;

  double grad_sq() const noexcept { return 2.0 * kinetic; }
  double lp_power() const noexcept { return (p + 1.0) * power; }
  double a3_or_zero() const noexcept { return A3.value_or(0.0); }

  nlohmann::ordered_json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Value of an integral identity together with its scale-free form
/// value / sum |terms|.
struct Residual {
  double value = 0.0;
  double normalized = 0.0;
};

/// Cached per-profile data plus the energy functional on one grid.
///
/// Holds the workspace by reference; it must outlive the model and must not
/// be used concurrently.
class EnergyModel {
 public:
  EnergyModel(DopingProfile profile, PhysParams params, SpectralWorkspace& ws);

  const Grid3& grid() const noexcept { return ws_->grid(); }
  const DopingProfile& profile() const noexcept { return profile_; }
  const PhysParams& params() const noexcept { return params_; }
  SpectralWorkspace& workspace() const noexcept { return *ws_; }
  const RealField& rho() const noexcept { return *rho_; }
  const RealField& S2() const noexcept { return *s2_; }
  double A0() const noexcept { return a0_; }

  RealField solve_S1(const ComplexField& u) const;
  EnergyBreakdown breakdown(const ComplexField& u) const;
  /// E(u) alone, cheaper than a full breakdown.
  double energy(const ComplexField& u) const;
  /// L2 gradient -Laplace u - |u|^{p-1} u + e^2 (S1(u) + S2) u; optionally also E(u).
  ComplexField gradient(const ComplexField& u, double* energy_out = nullptr) const;

 private:
  struct Parts {
    double kinetic;
    double power;
    double A1;
    double A2prime;
  };
  Parts parts(const ComplexField& u, const ComplexField* u_hat, RealField* s1_out) const;

  DopingProfile profile_;
  PhysParams params_;
  SpectralWorkspace* ws_;
  std::shared_ptr<const RealField> rho_;
  std::shared_ptr<const RealField> s2_;
  std::optional<RealField> x_grad_rho_;
  double a0_ = 0.0;
};

RealField solve_S1(const ComplexField& u, SpectralWorkspace& ws);
/// coulomb_solve(-rho / 2), memoized on (profile, grid).
RealField compute_S2(const DopingProfile& profile, SpectralWorkspace& ws);
EnergyBreakdown energy_breakdown(const ComplexField& u, const DopingProfile& profile, const PhysParams& params,
                                 SpectralWorkspace& ws);
ComplexField grad_E(const ComplexField& u, const DopingProfile& profile, const PhysParams& params,
                    SpectralWorkspace& ws);

/// omega = (||u||_{p+1}^{p+1} - ||grad u||^2 - 4 e^2 A1 - 4 e^2 A2) / ||u||^2.
double lagrange_multiplier(const EnergyBreakdown& b);
Residual nehari_residual(double omega, const EnergyBreakdown& b);
Residual pohozaev_residual(double omega, const EnergyBreakdown& b);
/// (5p-7) E - [2(p-2)||grad u||^2 - (3p-5) omega mu / 2 + 8 e^2 A2 - (3-p) e^2 A3].
/// Identically equal to 2 nehari + (p-3) pohozaev.
Residual energy_identity_residual(double omega, const EnergyBreakdown& b);

/// u(x) = amplitude exp(-|x - center|^2 / (2 width^2)).
struct GaussianState {
  double amplitude = 1.0;
  double width = 1.0;
  Vec3 center{0.0, 0.0, 0.0};

  ComplexField sample(const Grid3& g) const;
  /// lambda^a u(lambda^b x), again a Gaussian.
  GaussianState scaled(double a, double b, double lambda) const;
};

struct ScalingExponent {
  double measured;
  double expected;
};

struct ScalingReport {
  double a, b, lambda;
  ScalingExponent mass;     // 2a - 3b
  ScalingExponent kinetic;  // 2a - b
  ScalingExponent power;    // (p+1) a - 3b
  ScalingExponent A1;       // 4a - 5b
  /// A2(u_lambda) / [lambda^{2a-5b} A2 of u against rho(lambda^{-b} x)];
  /// absent when the profile family is not closed under dilation.
  std::optional<double> A2_ratio;
  /// max |S1(u_lambda)(x) - lambda^{2a-2b} S1(u)(lambda^b x)| / max |S1(u_lambda)|
  /// over nodes x with lambda^b x on the grid.
  std::optional<double> S1_law_error;
};

/// Dilation laws checked on exactly sampled Gaussians.
ScalingReport scaling_check(const GaussianState& u, double a, double b, double lambda, const DopingProfile& profile,
                            const PhysParams& params, SpectralWorkspace& ws);

/// Same profile seen through x -> s x, i.e. rho(x / s); nullopt for power laws.
std::optional<DopingProfile> dilate_profile(const DopingProfile& profile, double s);

}  // namespace spdope
