#include <cmath>
#include <stdexcept>

#include "spdope/field.hpp"
#include "spdope/spectral.hpp"

namespace spdope {

RealField abs2(const ComplexField& u) {
  RealField out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::norm(u[i]);
  return out;
}

ComplexField to_complex(const RealField& f) {
  ComplexField out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
  return out;
}

ComplexField multiply(const RealField& v, const ComplexField& u) {
  require_same_grid(v.grid(), u.grid(), "multiply");
  ComplexField out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = v[i] * u[i];
  return out;
}

double integrate(const RealField& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return f.grid().cell_volume() * sum;
}

namespace {

template <class T>
double lp_norm_impl(const Field<T>& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  double sum = 0.0;
  for (const auto& v : f.values()) sum += std::pow(std::abs(v), p);
  return std::pow(f.grid().cell_volume() * sum, 1.0 / p);
}

void require_ws(const Grid3& g, SpectralWorkspace& ws, const char* what) {
  require_same_grid(g, ws.grid(), what);
}

}  // namespace

double lp_norm(const RealField& f, double p) { return lp_norm_impl(f, p); }
double lp_norm(const ComplexField& f, double p) { return lp_norm_impl(f, p); }

cplx inner(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  cplx sum{};
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * std::conj(b[i]);
  return a.grid().cell_volume() * sum;
}

double inner_real(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a.grid(), b.grid(), "inner_real");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  }
  return a.grid().cell_volume() * sum;
}

double mass(const ComplexField& u) {
  double sum = 0.0;
  for (const auto& v : u.values()) sum += std::norm(v);
  return u.grid().cell_volume() * sum;
}

ComplexField laplacian(const ComplexField& u, SpectralWorkspace& ws) {
  require_ws(u.grid(), ws, "laplacian");
  ComplexField out = u;
  ws.forward(out.values());
  const Grid3& g = u.grid();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= -g.k_squared(i);
  ws.backward(out.values());
  return out;
}

std::array<ComplexField, 3> gradient(const ComplexField& u, SpectralWorkspace& ws) {
  require_ws(u.grid(), ws, "gradient");
  const Grid3& g = u.grid();
  const std::size_t n = g.points_per_axis();
  const auto k = g.wavenumbers();
  ComplexField hat = u;
  ws.forward(hat.values());
  std::array<ComplexField, 3> out{ComplexField(g), ComplexField(g), ComplexField(g)};
  const cplx I(0.0, 1.0);
  for (std::size_t i = 0; i < hat.size(); ++i) {
    const std::size_t idx[3] = {i % n, (i / n) % n, i / (n * n)};
    for (int d = 0; d < 3; ++d) {
      // the Nyquist row has no odd partner; its derivative is set to zero
      out[d][i] = idx[d] == n / 2 ? cplx{} : I * k[idx[d]] * hat[i];
    }
  }
  for (auto& c : out) ws.backward(c.values());
  return out;
}

double grad_norm_sq(const ComplexField& u, SpectralWorkspace& ws) {
  require_ws(u.grid(), ws, "grad_norm_sq");
  ComplexField hat = u;
  ws.forward(hat.values());
  const Grid3& g = u.grid();
  double sum = 0.0;
  for (std::size_t i = 0; i < hat.size(); ++i) sum += g.k_squared(i) * std::norm(hat[i]);
  // Parseval: sum |u_j|^2 = (1/N^3) sum |hat_k|^2
  return g.cell_volume() * sum / static_cast<double>(g.size());
}

double grad_norm_sq(const RealField& u, SpectralWorkspace& ws) { return grad_norm_sq(to_complex(u), ws); }

RealField coulomb_solve(const RealField& f, SpectralWorkspace& ws) {
  require_ws(f.grid(), ws, "coulomb_solve");
  RealField out(f.grid());
  ws.convolve_coulomb(f.values(), out.values());
  return out;
}

ComplexField kinetic_phase(const ComplexField& u, SpectralWorkspace& ws, double t) {
  require_ws(u.grid(), ws, "kinetic_phase");
  if (t == 0.0) return u;
  ComplexField out = u;
  ws.forward(out.values());
  const Grid3& g = u.grid();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::polar(1.0, -g.k_squared(i) * t);
  ws.backward(out.values());
  return out;
}

double boundary_fraction(const RealField& density) {
  const Grid3& g = density.grid();
  const std::size_t n = g.points_per_axis();
  auto in_shell = [n](std::size_t i) { return i < 2 || i + 2 >= n; };
  double shell = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double v = std::abs(density[i]);
    total += v;
    if (in_shell(i % n) || in_shell((i / n) % n) || in_shell(i / (n * n))) shell += v;
  }
  return total > 0.0 ? shell / total : 0.0;
}

}  // namespace spdope
