#include "spdope/stability.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "spdope/errors.hpp"
#include "spdope/format.hpp"

namespace spdope {

PerturbationKind parse_perturbation(const std::string& s) {
  if (s == "random-h1" || s == "random_h1") return PerturbationKind::random_h1;
  if (s == "boost") return PerturbationKind::boost;
  throw ConfigError("stability.perturbation", "expected \"random-h1\" or \"boost\", got \"" + s + "\"");
}

const char* to_string(PerturbationKind k) { return k == PerturbationKind::boost ? "boost" : "random-h1"; }

namespace {

long wrap_index(std::size_t i, std::size_t n) {
  const auto li = static_cast<long>(i);
  const auto ln = static_cast<long>(n);
  return li < ln / 2 ? li : li - ln;
}

double canonical_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a < 0.0) a += two_pi;
  return a >= two_pi ? 0.0 : a;
}

}  // namespace

Alignment distance_at(const ComplexField& psi, const ComplexField& u_ref, const std::array<long, 3>& shift_nodes,
                      double theta, const PhysParams& params, SpectralWorkspace& ws) {
  require_same_grid(psi.grid(), u_ref.grid(), "align");
  const Grid3& g = psi.grid();
  const ComplexField moved = shifted(u_ref, shift_nodes);
  const cplx rot = std::polar(1.0, theta);
  ComplexField diff = psi;
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= rot * moved[i];

  Alignment a;
  a.shift_nodes = shift_nodes;
  for (int k = 0; k < 3; ++k) a.shift[k] = static_cast<double>(shift_nodes[k]) * g.spacing();
  a.theta = canonical_angle(theta);
  a.h1_distance = h1_norm(diff, ws);

  RealField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * params.e * (std::norm(psi[i]) - std::norm(moved[i]));
  const RealField w = coulomb_solve(f, ws);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * w[i];
  // ||grad w||^2 = integral f w for w = (-Laplace)^{-1} f; clip roundoff below zero
  a.potential_d12_distance = std::sqrt(std::max(0.0, acc * g.cell_volume()));
  a.combined_distance = a.h1_distance + a.potential_d12_distance;
  return a;
}

Alignment align(const ComplexField& psi, const ComplexField& u_ref, const PhysParams& params, SpectralWorkspace& ws) {
  require_same_grid(psi.grid(), u_ref.grid(), "align");
  if (!(mass(u_ref) > 0.0)) throw std::invalid_argument("align: zero reference state");
  const Grid3& g = psi.grid();
  const std::size_t n = g.points_per_axis();

  ComplexField a(g), b(g);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::norm(psi[i]);
    b[i] = std::norm(u_ref[i]);
  }
  ws.forward(a.values());
  ws.forward(b.values());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= std::conj(b[i]);
  ws.backward(a.values());  // a(y) = sum_x |psi(x)|^2 |u(x - y)|^2

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, a[i].real());
  const double tie = 1e-12 * std::abs(best);
  std::array<long, 3> shift{0, 0, 0};
  long best_r2 = std::numeric_limits<long>::max();
  for (std::size_t iz = 0; iz < n; ++iz) {
    for (std::size_t iy = 0; iy < n; ++iy) {
      for (std::size_t ix = 0; ix < n; ++ix) {
        if (a[g.index(ix, iy, iz)].real() < best - tie) continue;
        const std::array<long, 3> s{wrap_index(ix, n), wrap_index(iy, n), wrap_index(iz, n)};
        const long r2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
        if (r2 < best_r2) {
          best_r2 = r2;
          shift = s;
        }
      }
    }
  }
  const double theta = std::arg(inner(psi, shifted(u_ref, shift)));
  return distance_at(psi, u_ref, shift, theta, params, ws);
}

std::string StabilityRun::csv_header() { return "t,y1,y2,y3,theta,h1_dist,d12_dist,combined"; }

std::string StabilityRun::csv() const {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Alignment& a = alignments[i];
    os << format_double(times[i]) << ',' << format_double(a.shift[0]) << ',' << format_double(a.shift[1]) << ','
       << format_double(a.shift[2]) << ',' << format_double(a.theta) << ',' << format_double(a.h1_distance) << ','
       << format_double(a.potential_d12_distance) << ',' << format_double(a.combined_distance) << '\n';
  }
  return os.str();
}

ComplexField random_h1_direction(const ComplexField& u, std::uint64_t seed, SpectralWorkspace& ws) {
  const Grid3& g = u.grid();
  double m = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double w = std::norm(u[i]);
    m += w;
    r2 += w * norm_sq(g.position(i));
  }
  const double envelope = std::max(std::sqrt(r2 / std::max(m, 1e-300)), 2.0 * g.spacing());
  ComplexField v = smooth_random_field(g, seed, 2.0 * g.spacing(), envelope, ws);
  v *= 1.0 / h1_norm(v, ws);
  return v;
}

StabilityRun stability_experiment(const MinimizerResult& u_min, double delta, const Perturbation& perturbation,
                                  const PropagatorConfig& pcfg, const EnergyModel& model) {
  if (!(delta >= 0.0)) throw ConfigError("stability.delta", "must be nonnegative");
  const ComplexField& u = u_min.u_min;
  require_same_grid(u.grid(), model.grid(), "stability_experiment");
  StabilityRun run;
  run.delta = delta;
  if (!u_min.converged) run.warnings.push_back("reference minimizer is not converged");

  ComplexField psi0 = u;
  if (perturbation.kind == PerturbationKind::random_h1) {
    if (delta > 0.0) {
      const ComplexField v = random_h1_direction(u, perturbation.seed, model.workspace());
      for (std::size_t i = 0; i < psi0.size(); ++i) psi0[i] += delta * v[i];
      psi0 *= std::sqrt(mass(u) / mass(psi0));
    }
  } else {
    const Grid3& g = u.grid();
    for (std::size_t i = 0; i < psi0.size(); ++i) {
      const Vec3 x = g.position(i);
      psi0[i] *= std::polar(1.0, delta * dot(perturbation.direction, x));
    }
  }

  run.trajectory = evolve(psi0, model, pcfg, [&](double t, const ComplexField& psi) {
    run.times.push_back(t);
    run.alignments.push_back(align(psi, u, model.params(), model.workspace()));
  });
  for (const auto& w : run.trajectory.warnings) run.warnings.push_back(w);
  if (run.trajectory.failed) run.warnings.push_back(*run.trajectory.failure);
  for (const auto& a : run.alignments) run.sup_distance = std::max(run.sup_distance, a.combined_distance);
  if (!run.alignments.empty()) run.initial_distance = run.alignments.front().combined_distance;
  return run;
}

}  // namespace spdope
