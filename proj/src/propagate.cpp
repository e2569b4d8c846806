#include "spdope/propagate.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "spdope/errors.hpp"
#include "spdope/format.hpp"

namespace spdope {

void PropagatorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("propagate.dt", "must be positive");
  if (!(T >= dt) || !std::isfinite(T)) throw ConfigError("propagate.T", "must be at least dt");
  if (monitor_stride == 0) throw ConfigError("propagate.monitor_stride", "must be positive");
}

std::size_t PropagatorConfig::steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }

std::string TrajectoryRecord::csv_header() { return "t,mass,energy,mass_drift,energy_drift"; }

std::string TrajectoryRecord::csv() const {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double md = std::abs(mass[i] - mass[0]) / std::abs(mass[0]);
    const double ed = std::abs(energy[i] - energy[0]) / std::max(std::abs(energy[0]), 1e-300);
    os << format_double(times[i]) << ',' << format_double(mass[i]) << ',' << format_double(energy[i]) << ','
       << format_double(md) << ',' << format_double(ed) << '\n';
  }
  return os.str();
}

RealField split_potential(const ComplexField& psi, const EnergyModel& model, bool power, bool hartree) {
  const Grid3& g = model.grid();
  RealField v(g);
  if (hartree) {
    const double e2 = model.params().e * model.params().e;
    const RealField s1 = model.solve_S1(psi);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = e2 * (s1[i] + model.S2()[i]);
  }
  if (power) {
    const double half_pm1 = 0.5 * (model.params().p - 1.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] -= std::exp(half_pm1 * std::log(std::max(std::norm(psi[i]), 1e-300)));
    }
  }
  return v;
}

namespace {

void apply_phase(ComplexField& psi, const RealField& v, double t) {
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -t * v[i]);
}

// exp(-i |k|^2 dt) tabulated once per run.
class KineticFlow {
 public:
  KineticFlow(const Grid3& g, double dt) : factor_(g.size()) {
    for (std::size_t i = 0; i < factor_.size(); ++i) factor_[i] = std::polar(1.0, -g.k_squared(i) * dt);
  }
  void apply(ComplexField& psi, SpectralWorkspace& ws) const {
    ws.forward(psi.values());
    for (std::size_t i = 0; i < factor_.size(); ++i) psi[i] *= factor_[i];
    ws.backward(psi.values());
  }

 private:
  std::vector<cplx> factor_;
};

bool finite_sum(const RealField& v) {
  double s = 0.0;
  for (double x : v.values()) s += x;
  return std::isfinite(s);
}

}  // namespace

ComplexField strang_step(const ComplexField& psi, double dt, const EnergyModel& model, bool power, bool hartree) {
  require_same_grid(psi.grid(), model.grid(), "strang_step");
  if (dt == 0.0) return psi;
  // |psi| is invariant under the first half step, so one potential serves both halves.
  const RealField v = split_potential(psi, model, power, hartree);
  ComplexField out = psi;
  apply_phase(out, v, 0.5 * dt);
  out = kinetic_phase(out, model.workspace(), dt);
  apply_phase(out, split_potential(out, model, power, hartree), 0.5 * dt);
  return out;
}

double conserved_energy(const ComplexField& psi, const EnergyModel& model, bool power, bool hartree) {
  const double e2 = model.params().e * model.params().e;
  if (power && hartree) return model.energy(psi) + e2 * model.A0();
  const EnergyBreakdown b = model.breakdown(psi);
  double out = b.kinetic;
  if (power) out -= b.power;
  if (hartree) out += e2 * (b.A1 + 2.0 * b.A2 + b.A0);
  return out;
}

TrajectoryRecord evolve(const ComplexField& psi0, const EnergyModel& model, const PropagatorConfig& config,
                        const SampleObserver& observer) {
  config.validate();
  require_same_grid(psi0.grid(), model.grid(), "evolve");
  if (!psi0.all_finite()) throw NumericalError("evolve: initial state is not finite");
  TrajectoryRecord rec;
  if (model.params().p >= 7.0 / 3.0) {
    rec.warnings.push_back("p >= 7/3: only local well-posedness is known; the run may blow up");
  }
  const bool pw = config.power;
  const bool ht = config.hartree;
  const double dt = config.dt;
  const std::size_t n = config.steps();
  std::size_t samples = 0;

  auto sample = [&](double t, const ComplexField& psi) {
    rec.times.push_back(t);
    rec.mass.push_back(mass(psi));
    rec.energy.push_back(conserved_energy(psi, model, pw, ht));
    if (config.snapshot_every > 0 && samples % config.snapshot_every == 0) {
      rec.snapshot_times.push_back(t);
      rec.snapshots.push_back(psi);
    }
    ++samples;
    if (observer) observer(t, psi);
  };

  const KineticFlow kinetic(model.grid(), dt);
  ComplexField psi = psi0;
  sample(0.0, psi);
  RealField v = split_potential(psi, model, pw, ht);
  apply_phase(psi, v, 0.5 * dt);
  for (std::size_t step = 1; step <= n; ++step) {
    kinetic.apply(psi, model.workspace());
    v = split_potential(psi, model, pw, ht);
    if (!finite_sum(v)) {
      rec.failed = true;
      rec.failure = "non-finite state at step " + std::to_string(step);
      rec.steps_taken = step - 1;
      return rec;
    }
    const bool monitor = step % config.monitor_stride == 0 || step == n;
    if (monitor) {
      apply_phase(psi, v, 0.5 * dt);
      sample(static_cast<double>(step) * dt, psi);
      if (step < n) apply_phase(psi, v, 0.5 * dt);
    } else {
      apply_phase(psi, v, dt);
    }
  }
  rec.steps_taken = n;
  rec.final_state = std::move(psi);
  return rec;
}

ConservationReport conservation_report(const TrajectoryRecord& traj) {
  if (traj.times.empty()) throw std::invalid_argument("conservation_report: empty record");
  ConservationReport r{0.0, 0.0, 0.0};
  const double m0 = traj.mass.front();
  const double e0 = traj.energy.front();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    r.max_mass_drift_rel = std::max(r.max_mass_drift_rel, std::abs(traj.mass[i] - m0) / std::abs(m0));
    r.max_energy_drift_abs = std::max(r.max_energy_drift_abs, std::abs(traj.energy[i] - e0));
  }
  r.max_energy_drift_rel = e0 != 0.0 ? r.max_energy_drift_abs / std::abs(e0) : r.max_energy_drift_abs;
  return r;
}

double phase_rate(const std::vector<double>& times, const std::vector<double>& phases) {
  if (times.size() != phases.size() || times.size() < 2) throw std::invalid_argument("phase_rate: need two samples");
  std::vector<double> un(phases.size());
  un[0] = phases[0];
  for (std::size_t i = 1; i < phases.size(); ++i) {
    double d = phases[i] - phases[i - 1];
    d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
    un[i] = un[i - 1] + d;
  }
  const double n = static_cast<double>(times.size());
  double st = 0.0, sp = 0.0, stt = 0.0, stp = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    st += times[i];
    sp += un[i];
    stt += times[i] * times[i];
    stp += times[i] * un[i];
  }
  return (n * stp - st * sp) / (n * stt - st * st);
}

}  // namespace spdope
