#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spdope/minimize.hpp"
#include "spdope/propagate.hpp"

namespace spdope {

struct Alignment {
  /// Physical shift y; u_ref(. - y) is compared with psi.
  Vec3 shift{0.0, 0.0, 0.0};
  std::array<long, 3> shift_nodes{0, 0, 0};
  /// psi ~ e^{i theta} u_ref(. - y), theta in [0, 2 pi).
  double theta = 0.0;
  double h1_distance = 0.0;
  double potential_d12_distance = 0.0;
  double combined_distance = 0.0;
};

/// Grid-shift and phase alignment of psi onto the orbit of u_ref.
/// The potential term is ||grad(phi_psi - phi_aligned)|| with
/// phi = (e/2)(-Laplace)^{-1}(|.|^2 - rho); rho cancels in the difference.
Alignment align(const ComplexField& psi, const ComplexField& u_ref, const PhysParams& params, SpectralWorkspace& ws);

/// Distances at a fixed shift and phase (no search).
Alignment distance_at(const ComplexField& psi, const ComplexField& u_ref, const std::array<long, 3>& shift_nodes,
                      double theta, const PhysParams& params, SpectralWorkspace& ws);

enum class PerturbationKind { random_h1, boost };
PerturbationKind parse_perturbation(const std::string& s);
const char* to_string(PerturbationKind k);

struct Perturbation {
  PerturbationKind kind = PerturbationKind::random_h1;
  std::uint64_t seed = 1;
  /// Boost direction; the velocity is delta times this vector.
  Vec3 direction{1.0, 0.0, 0.0};
};

struct StabilityRun {
  double delta = 0.0;
  std::vector<double> times;
  std::vector<Alignment> alignments;
  double sup_distance = 0.0;
  double initial_distance = 0.0;
  TrajectoryRecord trajectory;
  std::vector<std::string> warnings;

  /// Harness convention: sup distance at most `threshold`.
  bool within(double threshold) const noexcept { return sup_distance <= threshold; }
  static std::string csv_header();
  std::string csv() const;
};

/// Unit-H1 smooth random perturbation localized on the support of u.
ComplexField random_h1_direction(const ComplexField& u, std::uint64_t seed, SpectralWorkspace& ws);

/// Perturb u_min, renormalize to its mass, evolve and align at every monitor sample.
StabilityRun stability_experiment(const MinimizerResult& u_min, double delta, const Perturbation& perturbation,
                                  const PropagatorConfig& pcfg, const EnergyModel& model);

}  // namespace spdope
