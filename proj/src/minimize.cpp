#include "spdope/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "spdope/errors.hpp"
#include "spdope/field_io.hpp"
#include "spdope/format.hpp"

namespace spdope {

StepControl parse_step_control(const std::string& s) {
  if (s == "backtracking") return StepControl::backtracking;
  if (s == "bb" || s == "barzilai_borwein") return StepControl::barzilai_borwein;
  throw ConfigError("minimize.step", "expected \"backtracking\" or \"bb\", got \"" + s + "\"");
}

InitKind parse_init_kind(const std::string& s) {
  if (s == "gaussian") return InitKind::gaussian;
  if (s == "file") return InitKind::file;
  if (s == "previous") return InitKind::previous;
  throw ConfigError("minimize.init", "expected \"gaussian\", \"file\" or \"previous\", got \"" + s + "\"");
}

const char* to_string(StepControl s) { return s == StepControl::backtracking ? "backtracking" : "bb"; }

const char* to_string(InitKind k) {
  switch (k) {
    case InitKind::gaussian: return "gaussian";
    case InitKind::file: return "file";
    case InitKind::previous: return "previous";
  }
  return "?";
}

void MinimizeConfig::validate() const {
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ConfigError("minimize.tau0", "must be positive");
  if (max_iters == 0) throw ConfigError("minimize.max_iters", "must be positive");
  if (!(grad_tol > 0.0)) throw ConfigError("minimize.grad_tol", "must be positive");
  if (!(energy_tol > 0.0)) throw ConfigError("minimize.energy_tol", "must be positive");
  if (!(init_width >= 0.0)) throw ConfigError("minimize.init_width", "must be nonnegative");
  if (restarts == 0) throw ConfigError("minimize.restarts", "must be at least 1");
  if (!(perturbation >= 0.0)) throw ConfigError("minimize.perturbation", "must be nonnegative");
  if (init == InitKind::file && init_path.empty()) throw ConfigError("minimize.init_path", "required for init = file");
}

double h1_norm(const ComplexField& u, SpectralWorkspace& ws) { return std::sqrt(mass(u) + grad_norm_sq(u, ws)); }

ComplexField smooth_random_field(const Grid3& grid, std::uint64_t seed, double correlation_length, double envelope,
                                 SpectralWorkspace& ws) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ComplexField f(grid);
  for (auto& v : f.values()) v = cplx(normal(rng), normal(rng));
  ws.forward(f.values());
  const double l2 = correlation_length * correlation_length;
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= std::exp(-0.5 * grid.k_squared(i) * l2);
  ws.backward(f.values());
  if (envelope > 0.0) {
    const double inv = 0.5 / (envelope * envelope);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= std::exp(-norm_sq(grid.position(i)) * inv);
  }
  return f;
}

namespace {

void rescale_to_mass(ComplexField& u, double mu) {
  const double m = mass(u);
  if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("cannot normalize a zero or non-finite field");
  u *= std::sqrt(mu / m);
}

void fix_phase(ComplexField& u) {
  cplx s{0.0, 0.0};
  for (const auto& v : u.values()) s += v;
  if (std::abs(s) > 1e-300) u *= std::polar(1.0, -std::arg(s));
}

struct Objective {
  std::function<double(const ComplexField&)> value;
  std::function<ComplexField(const ComplexField&, double*)> gradient;
};

struct FlowOutcome {
  ComplexField u;
  double value;
  double grad_res;
  std::size_t iters;
  bool converged;
};

// Projected gradient g + w u with w chosen so that Re<r, u> = 0.
ComplexField project(ComplexField g, const ComplexField& u, double mu, double* omega_out) {
  const double w = -inner_real(g, u) / mu;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * u[i];
  if (omega_out != nullptr) *omega_out = w;
  return g;
}

// Normalized gradient flow on the sphere ||u||^2 = mu. Every accepted step
// lowers the objective (up to a roundoff slack).
FlowOutcome run_flow(const Objective& obj, ComplexField u, double mu, const MinimizeConfig& cfg,
                     SpectralWorkspace& ws) {
  rescale_to_mass(u, mu);
  double value = 0.0;
  ComplexField g = obj.gradient(u, &value);
  ComplexField r = project(std::move(g), u, mu, nullptr);
  double tau = cfg.tau0;
  std::size_t stall = 0;
  constexpr std::size_t kStallWindow = 50;
  constexpr int kMaxHalvings = 40;

  for (std::size_t it = 0;; ++it) {
    const double rr = mass(r);
    const double res = std::sqrt(rr) / h1_norm(u, ws);
    if (!std::isfinite(res) || !std::isfinite(value)) throw NumericalError("minimizer produced a non-finite iterate");
    if (res < cfg.grad_tol) return {std::move(u), value, res, it, true};
    if (it >= cfg.max_iters || stall >= kStallWindow) return {std::move(u), value, res, it, false};

    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(value));
    bool accepted = false;
    ComplexField trial(u.grid());
    double trial_value = 0.0;
    ComplexField trial_grad(u.grid());
    for (int h = 0; h < kMaxHalvings; ++h) {
      trial = u;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= tau * r[i];
      rescale_to_mass(trial, mu);
      trial_grad = obj.gradient(trial, &trial_value);
      if (std::isfinite(trial_value) && trial_value <= value - 1e-4 * tau * rr + slack) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) return {std::move(u), value, res, it, false};

    ComplexField r_new = project(std::move(trial_grad), trial, mu, nullptr);
    const double change = value - trial_value;
    stall = (std::abs(change) <= cfg.energy_tol * std::max(1.0, std::abs(value))) ? stall + 1 : 0;

    if (cfg.step == StepControl::barzilai_borwein) {
      double ss = 0.0, sy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const cplx s = trial[i] - u[i];
        const cplx y = r_new[i] - r[i];
        ss += std::norm(s);
        sy += (s * std::conj(y)).real();
        yy += std::norm(y);
      }
      // alternate the two Barzilai-Borwein lengths
      double bb = (it % 2 == 0) ? (sy > 0.0 ? ss / sy : 0.0) : (yy > 0.0 ? sy / yy : 0.0);
      tau = (bb > 0.0 && std::isfinite(bb)) ? std::clamp(bb, 1e-8, 1e4) : 2.0 * tau;
    } else {
      tau = std::min(2.0 * tau, 1e4);
    }
    u = std::move(trial);
    r = std::move(r_new);
    value = trial_value;
  }
}

Vec3 profile_center(const RealField& rho) {
  double total = 0.0;
  Vec3 c{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double w = std::abs(rho[i]);
    if (w == 0.0) continue;
    const Vec3 x = rho.grid().position(i);
    total += w;
    for (int k = 0; k < 3; ++k) c[k] += w * x[k];
  }
  if (total == 0.0) return c;
  for (auto& v : c) v /= total;
  // snap to a node so the seed stays symmetric on the lattice
  const Grid3& g = rho.grid();
  for (auto& v : c) v = std::round(v / g.spacing()) * g.spacing();
  return c;
}

ComplexField gaussian_seed(const Grid3& g, double mu, double width, const Vec3& center) {
  ComplexField u = GaussianState{1.0, width, center}.sample(g);
  rescale_to_mass(u, mu);
  return u;
}

struct SeedWidths {
  double primary;
  std::optional<double> secondary;
};

// Scans Gaussian trial energies; returns the global minimizer and, when it
// differs, the deepest interior local minimum (the concentrated branch).
SeedWidths scan_widths(const EnergyModel& model, double mu, const Vec3& center) {
  const Grid3& g = model.grid();
  const double lo = 1.5 * g.spacing();
  const double hi = g.box_length() / 6.0;
  constexpr int kCount = 28;
  std::vector<double> widths(kCount), values(kCount);
  for (int i = 0; i < kCount; ++i) {
    widths[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kCount - 1));
    values[i] = model.energy(gaussian_seed(g, mu, widths[i], center));
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  SeedWidths out{widths[best], std::nullopt};
  std::optional<std::size_t> local;
  for (std::size_t i = 1; i + 1 < widths.size(); ++i) {
    if (i == best) continue;
    if (values[i] <= values[i - 1] && values[i] <= values[i + 1] && (!local || values[i] < values[*local])) local = i;
  }
  if (local) out.secondary = widths[*local];
  return out;
}

IdentityResiduals identity_residuals(const ComplexField& u, const EnergyBreakdown& b, double omega,
                                     const EnergyModel& model) {
  IdentityResiduals r;
  r.nehari = nehari_residual(omega, b);
  r.pohozaev = pohozaev_residual(omega, b);
  r.energy_identity = energy_identity_residual(omega, b);
  ComplexField g = model.gradient(u);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += omega * u[i];
  r.gradient = std::sqrt(mass(g)) / h1_norm(u, model.workspace());
  return r;
}

nlohmann::ordered_json residuals_json(const IdentityResiduals& r) {
  nlohmann::ordered_json j;
  j["nehari"] = r.nehari.value;
  j["nehari_normalized"] = r.nehari.normalized;
  j["pohozaev"] = r.pohozaev.value;
  j["pohozaev_normalized"] = r.pohozaev.normalized;
  j["energy_identity"] = r.energy_identity.value;
  j["energy_identity_normalized"] = r.energy_identity.normalized;
  j["gradient"] = r.gradient;
  return j;
}

std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

nlohmann::ordered_json MinimizerResult::to_json() const {
  nlohmann::ordered_json j;
  j["mu"] = mu;
  j["c"] = c_value();
  j["omega"] = omega;
  j["converged"] = converged;
  j["iterations"] = iterations;
  j["residuals"] = residuals_json(residuals);
  j["boundary_leak"] = boundary_leak;
  j["energy"] = breakdown.to_json();
  j["warnings"] = warnings;
  return j;
}

MinimizerResult minimize_at_mass(double mu, const DopingProfile& profile, const PhysParams& params,
                                 const MinimizeConfig& config, SpectralWorkspace& ws,
                                 std::span<const ComplexField> extra_starts) {
  config.validate();
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("mu", "must be positive");
  const EnergyModel model(profile, params, ws);
  const Grid3& g = model.grid();

  std::vector<ComplexField> starts;
  if (config.init == InitKind::file) {
    ComplexField f = read_complex_field(config.init_path);
    require_same_grid(f.grid(), g, "initializer snapshot");
    starts.push_back(std::move(f));
  } else if (config.init == InitKind::previous && extra_starts.empty()) {
    throw ConfigError("minimize.init", "\"previous\" needs an earlier minimizer");
  }

  const Vec3 center = profile_center(model.rho());
  SeedWidths widths{config.init_width, std::nullopt};
  if (config.init_width == 0.0) widths = scan_widths(model, mu, center);
  static constexpr double kFactors[] = {1.0, 0.6, 1.6};
  for (std::size_t k = 0; k < config.restarts; ++k) {
    ComplexField u = gaussian_seed(g, mu, widths.primary * kFactors[k % 3], center);
    if (config.perturbation > 0.0) {
      ComplexField v = smooth_random_field(g, config.seed + k, 2.0 * g.spacing(), widths.primary * kFactors[k % 3] * 1.5, ws);
      v *= config.perturbation * std::sqrt(mu / mass(v));
      u += v;
    }
    starts.push_back(std::move(u));
  }
  if (widths.secondary) starts.push_back(gaussian_seed(g, mu, *widths.secondary, center));
  for (const auto& s : extra_starts) {
    require_same_grid(s.grid(), g, "extra initializer");
    starts.push_back(s);
  }

  const Objective obj{[&](const ComplexField& u) { return model.energy(u); },
                      [&](const ComplexField& u, double* v) { return model.gradient(u, v); }};
  std::optional<FlowOutcome> best;
  std::size_t total_iters = 0;
  for (auto& s : starts) {
    FlowOutcome out = run_flow(obj, std::move(s), mu, config, ws);
    total_iters += out.iters;
    if (!best || out.value < best->value - config.energy_tol * std::max(1.0, std::abs(out.value)) ||
        (out.converged && !best->converged && out.value <= best->value + config.energy_tol)) {
      best = std::move(out);
    }
  }

  MinimizerResult res{mu, std::move(best->u), {}, 0.0, {}, 0, false, 0.0, {}};
  fix_phase(res.u_min);
  res.breakdown = model.breakdown(res.u_min);
  res.omega = lagrange_multiplier(res.breakdown);
  res.residuals = identity_residuals(res.u_min, res.breakdown, res.omega, model);
  res.iterations = total_iters;
  res.converged = best->converged;
  res.boundary_leak = boundary_fraction(abs2(res.u_min));
  if (!res.converged) {
    res.warnings.push_back("not converged: gradient residual " + format_double(best->grad_res));
  }
  if (res.boundary_leak > kBoundaryLeakThreshold) {
    res.warnings.push_back("boundary leak " + format_double(res.boundary_leak) + "; enlarge the box");
  }
  if (auto w = params.regime_warning()) res.warnings.push_back(*w);
  return res;
}

MinimizerResult c_infinity(double mu, const PhysParams& params, const MinimizeConfig& config, SpectralWorkspace& ws,
                           std::span<const ComplexField> extra_starts) {
  return minimize_at_mass(mu, DopingProfile::zero(), params, config, ws, extra_starts);
}

// -- sweeps -------------------------------------------------------------------

std::string CurveTable::csv_header() { return "mu,c,omega,nehari,pohozaev,lemma23,grad_res,iters,converged"; }

std::string CurveTable::csv() const {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (const auto& r : rows) {
    os << format_double(r.mu) << ',' << format_double(r.c) << ',' << format_double(r.omega) << ','
       << format_double(r.residuals.nehari.normalized) << ',' << format_double(r.residuals.pohozaev.normalized) << ','
       << format_double(r.residuals.energy_identity.normalized) << ',' << format_double(r.residuals.gradient) << ','
       << r.iters << ',' << flag(r.converged) << '\n';
  }
  return os.str();
}

CurveTable c_curve(std::span<const double> mus, const DopingProfile& profile, const PhysParams& params,
                   const MinimizeConfig& config, SpectralWorkspace& ws) {
  if (!std::is_sorted(mus.begin(), mus.end())) throw ConfigError("scan.mu", "values must be ascending");
  CurveTable table;
  for (double mu : mus) {
    std::vector<ComplexField> warm;
    if (!table.results.empty()) warm.push_back(table.results.back().u_min);
    MinimizerResult r = minimize_at_mass(mu, profile, params, config, ws, warm);
    if (!table.rows.empty()) {
      const double prev = table.rows.back().c;
      if (r.c_value() > prev + 2.0 * config.energy_tol * std::max(1.0, std::abs(prev))) table.monotone = false;
    }
    table.rows.push_back({mu, r.c_value(), r.omega, r.residuals, r.iterations, r.converged});
    table.results.push_back(std::move(r));
  }
  return table;
}

MuStarResult mu_star(const PhysParams& params, const MinimizeConfig& config, double bracket_lo, double bracket_hi,
                     double tol, SpectralWorkspace& ws) {
  if (!(bracket_lo > 0.0) || !(bracket_hi > bracket_lo)) throw ConfigError("mu_star.bracket", "need 0 < lo < hi");
  if (!(tol > 0.0)) throw ConfigError("mu_star.tol", "must be positive");
  const double eps = config.eps_neg();

  MinimizerResult hi_res = c_infinity(bracket_hi, params, config, ws);
  const MinimizerResult lo_res = c_infinity(bracket_lo, params, config, ws);
  std::size_t evals = 2;
  if (!(hi_res.c_value() < -eps) || lo_res.c_value() < -eps) {
    throw BracketError("mu_star: bracket [" + format_double(bracket_lo) + ", " + format_double(bracket_hi) +
                           "] does not straddle the threshold: c_inf(lo) = " + format_double(lo_res.c_value()) +
                           ", c_inf(hi) = " + format_double(hi_res.c_value()),
                       lo_res.c_value(), hi_res.c_value());
  }
  MuStarResult out{0.0, bracket_lo, bracket_hi, lo_res.c_value(), hi_res.c_value(), evals, std::nullopt};
  ComplexField neg = hi_res.u_min;
  while (out.hi - out.lo > tol * out.hi) {
    const double mid = 0.5 * (out.lo + out.hi);
    const ComplexField warm[] = {neg};
    const MinimizerResult r = c_infinity(mid, params, config, ws, warm);
    ++out.evaluations;
    if (r.c_value() < -eps) {
      out.hi = mid;
      out.c_hi = r.c_value();
      neg = r.u_min;
    } else {
      out.lo = mid;
      out.c_lo = r.c_value();
    }
  }
  out.mu_star = 0.5 * (out.lo + out.hi);
  if (auto w = params.regime_warning()) out.warning = *w;
  return out;
}

// -- sub-additivity -------------------------------------------------------------

std::string SubaddReport::csv_header() { return "fraction,mu_part,c_part,cinf_rest,c_total,margin,converged"; }

std::string SubaddReport::csv() const {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (const auto& r : rows) {
    os << format_double(r.fraction) << ',' << format_double(r.mu_part) << ',' << format_double(r.c_part) << ','
       << format_double(r.cinf_rest) << ',' << format_double(r.c_total) << ',' << format_double(r.margin) << ','
       << flag(r.converged) << '\n';
  }
  return os.str();
}

nlohmann::ordered_json SubaddReport::to_json() const {
  nlohmann::ordered_json j;
  j["mu"] = mu;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"fraction", r.fraction}, {"mu_part", r.mu_part}, {"c_part", r.c_part},
                         {"cinf_rest", r.cinf_rest}, {"c_total", r.c_total}, {"margin", r.margin},
                         {"converged", r.converged}});
  }
  j["homogeneity"] = nlohmann::ordered_json::array();
  for (const auto& h : homogeneity) {
    j["homogeneity"].push_back({{"lambda", h.lambda}, {"s", h.s}, {"c_scaled", h.c_scaled},
                                {"lambda_c", h.lambda_c}, {"difference", h.difference}});
  }
  j["warning"] = warning ? nlohmann::ordered_json(*warning) : nlohmann::ordered_json(nullptr);
  return j;
}

SubaddReport subadditivity_scan(double mu, std::span<const double> fractions, const DopingProfile& profile,
                                const PhysParams& params, const MinimizeConfig& config, SpectralWorkspace& ws) {
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("subadd.fractions", "each fraction must lie in (0, 1)");
  }
  std::map<double, MinimizerResult> c_cache;
  auto c_of = [&](double m) -> const MinimizerResult& {
    auto it = c_cache.find(m);
    if (it == c_cache.end()) it = c_cache.emplace(m, minimize_at_mass(m, profile, params, config, ws)).first;
    return it->second;
  };

  SubaddReport rep;
  rep.mu = mu;
  const MinimizerResult& total = c_of(mu);
  bool all_converged = total.converged;
  for (double f : fractions) {
    const MinimizerResult& part = c_of(f * mu);
    const MinimizerResult rest = c_infinity((1.0 - f) * mu, params, config, ws);
    const double margin = part.c_value() + rest.c_value() - total.c_value();
    const bool conv = part.converged && rest.converged && total.converged;
    all_converged = all_converged && conv;
    rep.rows.push_back({f, f * mu, part.c_value(), rest.c_value(), total.c_value(), margin, conv});
  }
  const double s = 0.5 * mu;
  const double cs = c_of(s).c_value();
  for (double lambda : {1.25, 1.5, 2.0}) {
    const double cl = c_of(lambda * s).c_value();
    rep.homogeneity.push_back({lambda, s, cl, lambda * cs, cl - lambda * cs});
  }
  if (!all_converged) rep.warning = "some minimizations did not converge; margins are upper-bound estimates";
  return rep;
}

// -- spectral floor -------------------------------------------------------------

std::vector<FloorRow> spectral_floor(const DopingProfile& profile, double e, std::span<const double> boxes,
                                     std::size_t points_per_axis, const MinimizeConfig& config) {
  config.validate();
  const PhysParams params = PhysParams::make(2.2, e);
  std::vector<FloorRow> rows;
  for (double L : boxes) {
    const Grid3 g(L, points_per_axis);
    SpectralWorkspace ws(g);
    const EnergyModel model(profile, params, ws);
    const RealField& s2 = model.S2();
    const double e2 = e * e;
    // F(u) = 1/2 ||grad u||^2 + e^2 <S2 u, u>; the floor is 2 min F at unit mass.
    auto value = [&](const ComplexField& u) {
      double pot = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) pot += s2[i] * std::norm(u[i]);
      return 0.5 * grad_norm_sq(u, ws) + e2 * g.cell_volume() * pot;
    };
    auto gradient = [&](const ComplexField& u, double* v) {
      if (v != nullptr) *v = value(u);
      ComplexField out = laplacian(u, ws);
      for (std::size_t i = 0; i < u.size(); ++i) out[i] = -out[i] + 2.0 * e2 * s2[i] * u[i];
      return out;
    };
    const Objective obj{value, gradient};

    std::vector<ComplexField> starts;
    ComplexField constant(g);
    for (auto& v : constant.values()) v = 1.0;
    starts.push_back(std::move(constant));
    const Vec3 center = profile_center(model.rho());
    for (double w : {1.0, L / 8.0}) starts.push_back(gaussian_seed(g, 1.0, w, center));

    std::optional<FlowOutcome> best;
    for (auto& s : starts) {
      FlowOutcome out = run_flow(obj, std::move(s), 1.0, config, ws);
      if (!best || out.value < best->value) best = std::move(out);
    }
    rows.push_back({L, 2.0 * best->value, best->grad_res, best->converged});
  }
  return rows;
}

}  // namespace spdope
