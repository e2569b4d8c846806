#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spdope/energy.hpp"

namespace spdope {

struct PropagatorConfig {
  double dt = 1e-3;
  double T = 1.0;
  /// Steps between conservation samples.
  std::size_t monitor_stride = 100;
  bool power = true;
  bool hartree = true;
  /// Keep a snapshot every this many monitor samples; 0 keeps none.
  std::size_t snapshot_every = 0;

  void validate() const;
  std::size_t steps() const;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> mass;
  /// Full energy E + e^2 A0 with the disabled terms removed.
  std::vector<double> energy;
  std::vector<double> snapshot_times;
  std::vector<ComplexField> snapshots;
  std::optional<ComplexField> final_state;
  std::size_t steps_taken = 0;
  bool failed = false;
  std::optional<std::string> failure;
  std::vector<std::string> warnings;

  static std::string csv_header();
  std::string csv() const;
};

struct ConservationReport {
  double max_mass_drift_rel;
  double max_energy_drift_rel;
  /// max |E(t) - E(0)|, used for order tests.
  double max_energy_drift_abs;
};

/// Potential e^2 (S1(psi) + S2) - |psi|^{p-1}, honouring the toggles.
RealField split_potential(const ComplexField& psi, const EnergyModel& model, bool power = true, bool hartree = true);

/// One symmetric step: half potential, full kinetic, half potential.
ComplexField strang_step(const ComplexField& psi, double dt, const EnergyModel& model, bool power = true,
                         bool hartree = true);

/// Energy of the toggled system, including e^2 A0 when the Hartree term is on.
double conserved_energy(const ComplexField& psi, const EnergyModel& model, bool power = true, bool hartree = true);

/// Called at every monitor sample with (t, psi(t)).
using SampleObserver = std::function<void(double, const ComplexField&)>;

/// Repeated Strang steps. Consecutive potential half steps are merged, which
/// is exact because the phase rotation leaves |psi| unchanged. Returns a
/// partial record with `failed` set if a non-finite value appears.
TrajectoryRecord evolve(const ComplexField& psi0, const EnergyModel& model, const PropagatorConfig& config,
                        const SampleObserver& observer = {});

ConservationReport conservation_report(const TrajectoryRecord& traj);

/// Least-squares slope of the unwrapped phase arg <u, psi(t)>.
double phase_rate(const std::vector<double>& times, const std::vector<double>& phases);

}  // namespace spdope
