#include "spdope/energy.hpp"

#include <cmath>
#include <list>
#include <mutex>
#include <sstream>

#include "spdope/errors.hpp"
#include "spdope/format.hpp"

namespace spdope {

void PhysParams::validate() const {
  if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("params.e", "coupling e must be positive");
  if (!(p > 1.0 && p < 5.0)) throw ConfigError("params.p", "exponent p must lie in (1, 5)");
}

PhysParams PhysParams::make(double p, double e) {
  PhysParams out{p, e};
  out.validate();
  return out;
}

std::optional<std::string> PhysParams::regime_warning() const {
  if (in_theory_regime()) return std::nullopt;
  std::ostringstream os;
  os << "p = " << p << " lies outside 2 < p < 7/3; minimizer existence and orbital stability are not covered";
  return os.str();
}

const char* to_string(A3Form form) {
  switch (form) {
    case A3Form::absent: return "absent";
    case A3Form::smooth: return "smooth";
    case A3Form::boundary: return "boundary";
  }
  return "absent";
}

nlohmann::ordered_json EnergyBreakdown::to_json() const {
  nlohmann::ordered_json j;
  j["kinetic"] = kinetic;
  j["power"] = power;
  j["A0"] = A0;
  j["A1"] = A1;
  j["A2"] = A2;
  j["A2prime"] = A2prime;
  j["A3"] = A3 ? nlohmann::ordered_json(*A3) : nlohmann::ordered_json(nullptr);
  j["A3_form"] = to_string(a3_form);
  j["E"] = E;
  j["scriptE"] = scriptE;
  j["mass"] = mass;
  return j;
}

std::string EnergyBreakdown::csv_header() {
  return "kinetic,power,A0,A1,A2,A2prime,A3,A3_form,E,scriptE,mass";
}

std::string EnergyBreakdown::csv_row() const {
  std::string row;
  for (double v : {kinetic, power, A0, A1, A2, A2prime}) {
    row += format_double(v);
    row += ',';
  }
  row += A3 ? format_double(*A3) : std::string();
  row += ',';
  row += to_string(a3_form);
  for (double v : {E, scriptE, mass}) {
    row += ',';
    row += format_double(v);
  }
  return row;
}

// -- S2 cache ------------------------------------------------------------------

namespace {

struct CacheEntry {
  std::string key;
  std::shared_ptr<const RealField> rho;
  std::shared_ptr<const RealField> s2;
};

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::list<CacheEntry>& cache() {
  static std::list<CacheEntry> entries;
  return entries;
}

constexpr std::size_t kCacheCapacity = 8;

std::string cache_key(const DopingProfile& profile, const SpectralWorkspace& ws) {
  std::ostringstream os;
  os.precision(17);
  os << profile.key() << '|' << ws.grid().points_per_axis() << '|' << ws.grid().box_length() << '|'
     << ws.truncation_radius();
  return os.str();
}

std::pair<std::shared_ptr<const RealField>, std::shared_ptr<const RealField>> cached_rho_s2(
    const DopingProfile& profile, SpectralWorkspace& ws) {
  const std::string key = cache_key(profile, ws);
  {
    std::lock_guard lock(cache_mutex());
    auto& entries = cache();
    for (auto it = entries.begin(); it != entries.end(); ++it) {
      if (it->key == key) {
        entries.splice(entries.begin(), entries, it);
        return {it->rho, it->s2};
      }
    }
  }
  auto rho = std::make_shared<RealField>(sample_rho(profile, ws.grid()));
  auto s2 = std::make_shared<RealField>(ws.grid());
  if (!profile.is_zero()) {
    RealField half = -0.5 * *rho;
    *s2 = coulomb_solve(half, ws);
  }
  std::lock_guard lock(cache_mutex());
  auto& entries = cache();
  entries.push_front({key, rho, s2});
  if (entries.size() > kCacheCapacity) entries.pop_back();
  return {rho, s2};
}

double sum_abs(std::initializer_list<double> terms) {
  double s = 0.0;
  for (double t : terms) s += std::abs(t);
  return s;
}

Residual make_residual(std::initializer_list<double> terms) {
  double v = 0.0;
  for (double t : terms) v += t;
  const double scale = sum_abs(terms);
  return {v, scale > 0.0 ? v / scale : 0.0};
}

// |u|^{p-1} through exp/log so that u = 0 gives 0 for any p > 1.
inline double abs_pow(double abs2_value, double half_exponent) {
  return std::exp(half_exponent * std::log(std::max(abs2_value, 1e-300)));
}

}  // namespace

RealField solve_S1(const ComplexField& u, SpectralWorkspace& ws) {
  RealField half = abs2(u);
  half *= 0.5;
  return coulomb_solve(half, ws);
}

RealField compute_S2(const DopingProfile& profile, SpectralWorkspace& ws) { return *cached_rho_s2(profile, ws).second; }

// -- EnergyModel ---------------------------------------------------------------

EnergyModel::EnergyModel(DopingProfile profile, PhysParams params, SpectralWorkspace& ws)
    : profile_(std::move(profile)), params_(params), ws_(&ws) {
  params_.validate();
  auto [rho, s2] = cached_rho_s2(profile_, ws);
  rho_ = std::move(rho);
  s2_ = std::move(s2);
  if (profile_.is_smooth()) x_grad_rho_ = sample_x_grad_rho(profile_, ws.grid());
  double acc = 0.0;
  for (std::size_t i = 0; i < rho_->size(); ++i) acc += (*s2_)[i] * (*rho_)[i];
  a0_ = -0.25 * grid().cell_volume() * acc;
}

RealField EnergyModel::solve_S1(const ComplexField& u) const {
  require_same_grid(u.grid(), grid(), "solve_S1");
  return spdope::solve_S1(u, *ws_);
}

EnergyModel::Parts EnergyModel::parts(const ComplexField& u, const ComplexField* u_hat, RealField* s1_out) const {
  require_same_grid(u.grid(), grid(), "energy");
  const Grid3& g = grid();
  const double dv = g.cell_volume();
  Parts out{};

  double ksum = 0.0;
  if (u_hat != nullptr) {
    for (std::size_t i = 0; i < u_hat->size(); ++i) ksum += g.k_squared(i) * std::norm((*u_hat)[i]);
    out.kinetic = 0.5 * dv * ksum / static_cast<double>(g.size());
  } else {
    out.kinetic = 0.5 * grad_norm_sq(u, *ws_);
  }

  const double half_p1 = 0.5 * (params_.p + 1.0);
  RealField dens(g);
  double qsum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dens[i] = std::norm(u[i]);
    qsum += abs_pow(dens[i], half_p1);
  }
  out.power = dv * qsum / (params_.p + 1.0);

  RealField s1(g);
  dens *= 0.5;
  ws_->convolve_coulomb(dens.values(), s1.values());
  double a1 = 0.0;
  double a2p = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    a1 += s1[i] * dens[i];
    a2p += (*s2_)[i] * dens[i];
  }
  // dens holds |u|^2 / 2 here
  out.A1 = 0.5 * dv * a1;
  out.A2prime = 0.5 * dv * a2p;
  if (s1_out != nullptr) *s1_out = std::move(s1);
  return out;
}

EnergyBreakdown EnergyModel::breakdown(const ComplexField& u) const {
  RealField s1(grid());
  const Parts pt = parts(u, nullptr, &s1);
  const double dv = grid().cell_volume();
  const double e2 = params_.e * params_.e;

  EnergyBreakdown b;
  b.p = params_.p;
  b.e = params_.e;
  b.kinetic = pt.kinetic;
  b.power = pt.power;
  b.A0 = a0_;
  b.A1 = pt.A1;
  b.A2prime = pt.A2prime;
  double a2 = 0.0;
  for (std::size_t i = 0; i < s1.size(); ++i) a2 += s1[i] * (*rho_)[i];
  b.A2 = -0.25 * dv * a2;
  if (x_grad_rho_) {
    double a3 = 0.0;
    for (std::size_t i = 0; i < s1.size(); ++i) a3 += s1[i] * (*x_grad_rho_)[i];
    b.A3 = 0.5 * dv * a3;
    b.a3_form = A3Form::smooth;
  } else if (const auto* balls = profile_.ball_list()) {
    b.A3 = a3_boundary(s1, *balls);
    b.a3_form = A3Form::boundary;
  }
  b.E = b.kinetic - b.power + e2 * b.A1 + 2.0 * e2 * b.A2;
  b.scriptE = b.E + e2 * b.A0;
  b.mass = mass(u);
  if (!std::isfinite(b.E)) throw NumericalError("energy breakdown produced a non-finite value");
  return b;
}

double EnergyModel::energy(const ComplexField& u) const {
  const Parts pt = parts(u, nullptr, nullptr);
  const double e2 = params_.e * params_.e;
  // A2 and A2' coincide by symmetry of the kernel; the cheap one is used here.
  return pt.kinetic - pt.power + e2 * pt.A1 + 2.0 * e2 * pt.A2prime;
}

ComplexField EnergyModel::gradient(const ComplexField& u, double* energy_out) const {
  require_same_grid(u.grid(), grid(), "gradient");
  const Grid3& g = grid();
  ComplexField hat = u;
  ws_->forward(hat.values());

  RealField s1(g);
  const Parts pt = parts(u, &hat, &s1);
  const double e2 = params_.e * params_.e;
  if (energy_out != nullptr) *energy_out = pt.kinetic - pt.power + e2 * pt.A1 + 2.0 * e2 * pt.A2prime;

  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= g.k_squared(i);
  ws_->backward(hat.values());  // now -Laplace u
  const double half_pm1 = 0.5 * (params_.p - 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = e2 * (s1[i] + (*s2_)[i]) - abs_pow(std::norm(u[i]), half_pm1);
    hat[i] += v * u[i];
  }
  return hat;
}

EnergyBreakdown energy_breakdown(const ComplexField& u, const DopingProfile& profile, const PhysParams& params,
                                 SpectralWorkspace& ws) {
  return EnergyModel(profile, params, ws).breakdown(u);
}

ComplexField grad_E(const ComplexField& u, const DopingProfile& profile, const PhysParams& params,
                    SpectralWorkspace& ws) {
  return EnergyModel(profile, params, ws).gradient(u);
}

// -- identities ----------------------------------------------------------------

double lagrange_multiplier(const EnergyBreakdown& b) {
  if (!(b.mass > 0.0)) throw std::invalid_argument("lagrange_multiplier: zero mass");
  const double e2 = b.e * b.e;
  return (b.lp_power() - b.grad_sq() - 4.0 * e2 * b.A1 - 4.0 * e2 * b.A2) / b.mass;
}

Residual nehari_residual(double omega, const EnergyBreakdown& b) {
  const double e2 = b.e * b.e;
  return make_residual({b.grad_sq(), omega * b.mass, -b.lp_power(), 4.0 * e2 * b.A1, 4.0 * e2 * b.A2});
}

Residual pohozaev_residual(double omega, const EnergyBreakdown& b) {
  const double e2 = b.e * b.e;
  return make_residual({0.5 * b.grad_sq(), 1.5 * omega * b.mass, -3.0 * b.power, 5.0 * e2 * b.A1,
                        10.0 * e2 * b.A2, -e2 * b.a3_or_zero()});
}

Residual energy_identity_residual(double omega, const EnergyBreakdown& b) {
  const double p = b.p;
  const double e2 = b.e * b.e;
  return make_residual({(5.0 * p - 7.0) * b.E, -2.0 * (p - 2.0) * b.grad_sq(), 0.5 * (3.0 * p - 5.0) * omega * b.mass,
                        -8.0 * e2 * b.A2, (3.0 - p) * e2 * b.a3_or_zero()});
}

// -- scaling ------------------------------------------------------------------

ComplexField GaussianState::sample(const Grid3& g) const {
  const double s = 1.0 / (2.0 * width * width);
  return ComplexField::sample(g, [&](const Vec3& x) {
    const Vec3 d{x[0] - center[0], x[1] - center[1], x[2] - center[2]};
    return amplitude * std::exp(-s * norm_sq(d));
  });
}

GaussianState GaussianState::scaled(double a, double b, double lambda) const {
  const double lb = std::pow(lambda, b);
  return {std::pow(lambda, a) * amplitude, width / lb, {center[0] / lb, center[1] / lb, center[2] / lb}};
}

std::optional<DopingProfile> dilate_profile(const DopingProfile& profile, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("dilate_profile: factor must be positive");
  if (profile.is_zero()) return profile;
  if (const auto* g = std::get_if<GaussianProfile>(&profile.variant())) {
    return DopingProfile::gaussian(g->epsilon, g->alpha / (s * s));
  }
  if (const auto* balls = profile.ball_list()) {
    auto copy = *balls;
    for (auto& b : copy) {
      for (double& c : b.center) c *= s;
      b.radius *= s;
    }
    return DopingProfile::balls(std::move(copy));
  }
  return std::nullopt;
}

ScalingReport scaling_check(const GaussianState& u, double a, double b, double lambda, const DopingProfile& profile,
                            const PhysParams& params, SpectralWorkspace& ws) {
  if (!(lambda > 0.0)) throw std::invalid_argument("scaling_check: lambda must be positive");
  const Grid3& g = ws.grid();
  const GaussianState ul = u.scaled(a, b, lambda);
  const ComplexField f0 = u.sample(g);
  const ComplexField f1 = ul.sample(g);

  const EnergyModel base(DopingProfile::zero(), params, ws);
  RealField s0 = base.solve_S1(f0);
  RealField s1 = base.solve_S1(f1);
  const EnergyBreakdown b0 = base.breakdown(f0);
  const EnergyBreakdown b1 = base.breakdown(f1);

  const double ll = std::log(lambda);
  auto exponent = [&](double v1, double v0, double expected) -> ScalingExponent {
    return {lambda == 1.0 ? expected : std::log(v1 / v0) / ll, expected};
  };

  ScalingReport r{};
  r.a = a;
  r.b = b;
  r.lambda = lambda;
  r.mass = exponent(b1.mass, b0.mass, 2 * a - 3 * b);
  r.kinetic = exponent(b1.kinetic, b0.kinetic, 2 * a - b);
  r.power = exponent(b1.power, b0.power, (params.p + 1.0) * a - 3 * b);
  r.A1 = exponent(b1.A1, b0.A1, 4 * a - 5 * b);

  if (auto dilated = dilate_profile(profile, std::pow(lambda, b)); dilated && !profile.is_zero()) {
    const EnergyModel m_orig(profile, params, ws);
    const EnergyModel m_dil(*dilated, params, ws);
    const double lhs = m_orig.breakdown(f1).A2;
    const double rhs = std::pow(lambda, 2 * a - 5 * b) * m_dil.breakdown(f0).A2;
    r.A2_ratio = lhs / rhs;
  }

  // S1 law on nodes whose image lambda^b x is again a node.
  const double lb = std::pow(lambda, b);
  const auto n = static_cast<long>(g.points_per_axis());
  const double pref = std::pow(lambda, 2 * a - 2 * b);
  double err = 0.0;
  double peak = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    peak = std::max(peak, std::abs(s1[i]));
    long img[3];
    bool ok = true;
    const long idx[3] = {static_cast<long>(i % g.points_per_axis()),
                         static_cast<long>((i / g.points_per_axis()) % g.points_per_axis()),
                         static_cast<long>(i / (g.points_per_axis() * g.points_per_axis()))};
    for (int d = 0; d < 3 && ok; ++d) {
      const double t = n / 2 + lb * static_cast<double>(idx[d] - n / 2);
      const double rt = std::round(t);
      ok = std::abs(t - rt) < 1e-9 && rt >= 0 && rt < n;
      img[d] = static_cast<long>(rt);
    }
    if (!ok) continue;
    any = true;
    const double expected =
        pref * s0[g.index(static_cast<std::size_t>(img[0]), static_cast<std::size_t>(img[1]),
                          static_cast<std::size_t>(img[2]))];
    err = std::max(err, std::abs(s1[i] - expected));
  }
  if (any && peak > 0.0) r.S1_law_error = err / peak;
  return r;
}

}  // namespace spdope
