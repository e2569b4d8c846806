#include "spdope/profiles.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "spdope/errors.hpp"
#include "spdope/spectral.hpp"

namespace spdope {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("profile: ") + what + " must be positive");
}

void require_inside(const BallSpec& b, const Grid3& g, double margin) {
  const double lo = -0.5 * g.box_length() + margin;
  const double hi = 0.5 * g.box_length() - g.spacing() - margin;
  for (double c : b.center) {
    if (c - b.radius < lo || c + b.radius > hi) {
      throw std::invalid_argument("ball of radius " + std::to_string(b.radius) + " reaches the box boundary");
    }
  }
}

}  // namespace

DopingProfile DopingProfile::zero() { return DopingProfile(ZeroProfile{}); }

DopingProfile DopingProfile::gaussian(double epsilon, double alpha) {
  require_positive(epsilon, "gaussian epsilon");
  require_positive(alpha, "gaussian alpha");
  return DopingProfile(GaussianProfile{epsilon, alpha});
}

DopingProfile DopingProfile::power_law(double epsilon, double alpha) {
  require_positive(epsilon, "power-law epsilon");
  if (!(alpha > 2.0) || !std::isfinite(alpha)) throw std::invalid_argument("profile: power-law alpha must exceed 2");
  return DopingProfile(PowerLawProfile{epsilon, alpha});
}

DopingProfile DopingProfile::balls(std::vector<BallSpec> balls) {
  if (balls.empty()) throw std::invalid_argument("profile: ball list is empty");
  for (const auto& b : balls) {
    require_positive(b.radius, "ball radius");
    require_positive(b.amplitude, "ball amplitude");
  }
  for (std::size_t i = 0; i < balls.size(); ++i) {
    for (std::size_t j = i + 1; j < balls.size(); ++j) {
      const Vec3 d{balls[i].center[0] - balls[j].center[0], balls[i].center[1] - balls[j].center[1],
                   balls[i].center[2] - balls[j].center[2]};
      if (std::sqrt(norm_sq(d)) < balls[i].radius + balls[j].radius) {
        throw std::invalid_argument("profile: balls " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      }
    }
  }
  return DopingProfile(BallsProfile{std::move(balls)});
}

const std::vector<BallSpec>* DopingProfile::ball_list() const noexcept {
  const auto* b = std::get_if<BallsProfile>(&v_);
  return b ? &b->balls : nullptr;
}

std::string DopingProfile::type_name() const {
  return std::visit(Overloaded{[](const ZeroProfile&) { return "zero"; },
                               [](const GaussianProfile&) { return "gaussian"; },
                               [](const PowerLawProfile&) { return "power-law"; },
                               [](const BallsProfile&) { return "balls"; }},
                    v_);
}

double DopingProfile::value(const Vec3& x) const {
  return std::visit(
      Overloaded{[](const ZeroProfile&) { return 0.0; },
                 [&](const GaussianProfile& g) { return g.epsilon * std::exp(-g.alpha * norm_sq(x)); },
                 [&](const PowerLawProfile& p) { return p.epsilon / std::pow(1.0 + std::sqrt(norm_sq(x)), p.alpha); },
                 [&](const BallsProfile& bp) {
                   for (const auto& b : bp.balls) {
                     const Vec3 d{x[0] - b.center[0], x[1] - b.center[1], x[2] - b.center[2]};
                     if (norm_sq(d) <= b.radius * b.radius) return b.amplitude;
                   }
                   return 0.0;
                 }},
      v_);
}

double DopingProfile::x_grad(const Vec3& x) const {
  return std::visit(
      Overloaded{[](const ZeroProfile&) { return 0.0; },
                 [&](const GaussianProfile& g) {
                   const double r2 = norm_sq(x);
                   return -2.0 * g.alpha * g.epsilon * r2 * std::exp(-g.alpha * r2);
                 },
                 [&](const PowerLawProfile& p) {
                   const double r = std::sqrt(norm_sq(x));
                   return -p.alpha * p.epsilon * r / std::pow(1.0 + r, p.alpha + 1.0);
                 },
                 [](const BallsProfile&) -> double {
                   throw UnsupportedDerivative(
                       "x . grad rho does not exist for indicator profiles; use the boundary form a3_boundary");
                 }},
      v_);
}

DopingProfile DopingProfile::scaled(double factor) const {
  require_positive(factor, "scale factor");
  return std::visit(Overloaded{[](const ZeroProfile&) { return zero(); },
                               [&](const GaussianProfile& g) { return gaussian(factor * g.epsilon, g.alpha); },
                               [&](const PowerLawProfile& p) { return power_law(factor * p.epsilon, p.alpha); },
                               [&](const BallsProfile& bp) {
                                 auto copy = bp.balls;
                                 for (auto& b : copy) b.amplitude *= factor;
                                 return balls(std::move(copy));
                               }},
                    v_);
}

std::string DopingProfile::key() const {
  std::ostringstream os;
  os.precision(17);
  os << type_name();
  std::visit(Overloaded{[](const ZeroProfile&) {},
                        [&](const GaussianProfile& g) { os << ':' << g.epsilon << ':' << g.alpha; },
                        [&](const PowerLawProfile& p) { os << ':' << p.epsilon << ':' << p.alpha; },
                        [&](const BallsProfile& bp) {
                          for (const auto& b : bp.balls) {
                            os << ":[" << b.center[0] << ',' << b.center[1] << ',' << b.center[2] << ';' << b.radius
                               << ';' << b.amplitude << ']';
                          }
                        }},
             v_);
  return os.str();
}

RealField sample_rho(const DopingProfile& profile, const Grid3& grid) {
  if (const auto* balls = profile.ball_list()) {
    for (const auto& b : *balls) require_inside(b, grid, 2.0 * grid.spacing());
  }
  return RealField::sample(grid, [&](const Vec3& x) { return profile.value(x); });
}

RealField sample_x_grad_rho(const DopingProfile& profile, const Grid3& grid) {
  if (profile.ball_list() != nullptr) {
    throw UnsupportedDerivative("x . grad rho does not exist for indicator profiles; use the boundary form a3_boundary");
  }
  return RealField::sample(grid, [&](const Vec3& x) { return profile.x_grad(x); });
}

RhoNorms rho_norms(const DopingProfile& profile, const Grid3& grid) {
  RhoNorms out;
  if (profile.is_zero()) {
    out.x_grad_rho_65 = 0.0;
    return out;
  }
  constexpr double q = 6.0 / 5.0;
  out.rho_65 = lp_norm(sample_rho(profile, grid), q);
  if (profile.ball_list() == nullptr) out.x_grad_rho_65 = lp_norm(sample_x_grad_rho(profile, grid), q);

  // Tail of the 6/5-power outside the inscribed ball of radius L/2.
  const double r0 = 0.5 * grid.box_length();
  if (const auto* p = std::get_if<PowerLawProfile>(&profile.variant())) {
    // integral_{r0}^inf 4 pi r^2 eps^q (1+r)^{-q alpha} dr <= 4 pi eps^q (1+r0)^{3-q alpha}/(q alpha - 3)
    const double qa = q * p->alpha;
    out.tail_bound = qa > 3.0 ? 4.0 * std::numbers::pi * std::pow(p->epsilon, q) * std::pow(1.0 + r0, 3.0 - qa) / (qa - 3.0)
                              : std::numeric_limits<double>::infinity();
  } else if (const auto* g = std::get_if<GaussianProfile>(&profile.variant())) {
    // eps^q exp(-q alpha r^2) radial tail, bounded via erfc
    const double a = q * g->alpha;
    const double tail = 4.0 * std::numbers::pi *
                        (r0 * std::exp(-a * r0 * r0) / (2.0 * a) +
                         std::sqrt(std::numbers::pi) / (4.0 * a * std::sqrt(a)) * std::erfc(std::sqrt(a) * r0));
    out.tail_bound = std::pow(g->epsilon, q) * tail;
  }
  return out;
}

BallGeometry ball_geometry(const BallSpec& ball) {
  if (!(ball.radius > 0.0)) throw std::invalid_argument("ball_geometry: radius must be positive");
  const double r = ball.radius;
  BallGeometry g{};
  g.extent = std::sqrt(norm_sq(ball.center)) + r;
  g.volume = 4.0 * std::numbers::pi * r * r * r / 3.0;
  g.surface = 4.0 * std::numbers::pi * r * r;
  g.kappa1 = g.surface / g.volume;
  // Torsion function w = |x - c|^2 / (2R): Laplace w = 3/R = kappa1 and |grad w| = 1 on the sphere.
  g.kappa2 = 1.0;
  g.d_omega = g.extent * std::pow(g.volume, 1.0 / 6.0) * std::sqrt(g.surface) *
              std::sqrt(g.kappa1 * std::cbrt(g.volume) + g.kappa2);
  return g;
}

double d_omega_lower_bound_constant() {
  const double unit = 4.0 * std::numbers::pi / 3.0;
  return std::sqrt(3.0) * std::pow(unit, -1.0 / 6.0) * std::sqrt(3.0 * std::cbrt(unit) + 1.0);
}

namespace {

double trilinear(const RealField& f, const Vec3& x) {
  const Grid3& g = f.grid();
  const std::size_t n = g.points_per_axis();
  const double h = g.spacing();
  std::size_t i0[3];
  double t[3];
  for (int d = 0; d < 3; ++d) {
    const double s = (x[d] + 0.5 * g.box_length()) / h;
    const double fl = std::floor(s);
    i0[d] = static_cast<std::size_t>(fl);
    t[d] = s - fl;
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const std::size_t ix = std::min(i0[0] + (c & 1), n - 1);
    const std::size_t iy = std::min(i0[1] + ((c >> 1) & 1), n - 1);
    const std::size_t iz = std::min(i0[2] + ((c >> 2) & 1), n - 1);
    const double w = ((c & 1) ? t[0] : 1.0 - t[0]) * (((c >> 1) & 1) ? t[1] : 1.0 - t[1]) *
                     (((c >> 2) & 1) ? t[2] : 1.0 - t[2]);
    acc += w * f[g.index(ix, iy, iz)];
  }
  return acc;
}

template <unsigned Points>
double sphere_integral(const RealField& s1, const BallSpec& b, std::size_t azimuthal) {
  using Rule = boost::math::quadrature::gauss<double, Points>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  const double dphi = 2.0 * std::numbers::pi / static_cast<double>(azimuthal);
  const double r = b.radius;
  double total = 0.0;
  auto ring = [&](double cos_t, double w) {
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    double acc = 0.0;
    for (std::size_t j = 0; j < azimuthal; ++j) {
      const double phi = dphi * (static_cast<double>(j) + 0.5);
      const Vec3 n{sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t};
      const Vec3 x{b.center[0] + r * n[0], b.center[1] + r * n[1], b.center[2] + r * n[2]};
      acc += trilinear(s1, x) * dot(x, n);
    }
    total += w * acc * dphi;
  };
  // boost stores the nonnegative half of a symmetric rule
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    if (abscissa[i] == 0.0) {
      ring(0.0, weights[i]);
    } else {
      ring(abscissa[i], weights[i]);
      ring(-abscissa[i], weights[i]);
    }
  }
  return r * r * total;
}

}  // namespace

double a3_boundary(const RealField& s1, const std::vector<BallSpec>& balls, SphereQuadrature q) {
  const Grid3& g = s1.grid();
  for (const auto& b : balls) {
    if (!(b.radius > 0.0)) throw std::invalid_argument("a3_boundary: radius must be positive");
    require_inside(b, g, 0.0);
  }
  double sum = 0.0;
  for (const auto& b : balls) {
    double integral = 0.0;
    switch (q.polar) {
      case 32: integral = sphere_integral<32>(s1, b, q.azimuthal); break;
      case 64: integral = sphere_integral<64>(s1, b, q.azimuthal); break;
      default: throw std::invalid_argument("a3_boundary: polar node count must be 32 or 64");
    }
    sum += b.amplitude * integral;
  }
  return -0.5 * sum;
}

}  // namespace spdope
