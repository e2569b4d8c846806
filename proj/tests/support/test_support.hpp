#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "spdope/field.hpp"

namespace spdope::test {

/// Smooth random complex field: a Gaussian envelope times a few random
/// low-frequency plane waves, so every spectral operator is well resolved.
inline ComplexField random_field(const Grid3& g, unsigned seed, double width = 1.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  struct Mode {
    Vec3 k;
    Vec3 c;
    cplx a;
  };
  std::vector<Mode> modes(4);
  for (auto& m : modes) {
    m.k = {ud(rng), ud(rng), ud(rng)};
    m.c = {0.5 * ud(rng), 0.5 * ud(rng), 0.5 * ud(rng)};
    m.a = {nd(rng), nd(rng)};
  }
  const double s = 1.0 / (2.0 * width * width);
  return ComplexField::sample(g, [&](const Vec3& x) {
    cplx acc{};
    for (const auto& m : modes) {
      const Vec3 d{x[0] - m.c[0], x[1] - m.c[1], x[2] - m.c[2]};
      acc += m.a * std::polar(std::exp(-s * norm_sq(d)), dot(m.k, x));
    }
    return acc;
  });
}

/// O(N^6) direct summation of f * 1/(4 pi |x|). The singular self term uses
/// the corrected punctured trapezoid weight 2.8372974794806 h^2 for 1/|x|.
inline RealField direct_coulomb(const RealField& f) {
  const Grid3& g = f.grid();
  const double h = g.spacing();
  constexpr double kSelf = 2.8372974794806;
  const double inv4pi = 1.0 / (4.0 * std::numbers::pi);
  RealField out(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 xi = g.position(i);
    double acc = kSelf * h * h * f[i];
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (j == i) continue;
      const Vec3 xj = g.position(j);
      const Vec3 d{xi[0] - xj[0], xi[1] - xj[1], xi[2] - xj[2]};
      acc += g.cell_volume() * f[j] / std::sqrt(norm_sq(d));
    }
    out[i] = inv4pi * acc;
  }
  return out;
}

}  // namespace spdope::test
