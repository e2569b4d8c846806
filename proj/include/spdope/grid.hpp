#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace spdope {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm_sq(const Vec3& a) { return dot(a, a); }

/// Uniform periodic cube [-L/2, L/2)^3 sampled by N nodes per axis.
///
/// Node i sits at -L/2 + i h, so node N/2 is the origin. Flat indices are
/// row-major with x fastest: ix + N (iy + N iz). The wavenumber table uses the
/// usual FFT ordering 0, 1, ..., N/2-1, -N/2, ..., -1 in units of 2 pi / L.
class Grid3 {
 public:
  Grid3(double box_length, std::size_t points_per_axis);

  double box_length() const noexcept { return length_; }
  std::size_t points_per_axis() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ * n_ * n_; }
  double spacing() const noexcept { return spacing_; }
  double cell_volume() const noexcept { return spacing_ * spacing_ * spacing_; }
  double volume() const noexcept { return length_ * length_ * length_; }

  double coord(std::size_t i) const noexcept { return -0.5 * length_ + spacing_ * static_cast<double>(i); }
  Vec3 position(std::size_t flat) const noexcept;
  std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const noexcept {
    return ix + n_ * (iy + n_ * iz);
  }

  std::span<const double> wavenumbers() const noexcept { return k_; }
  /// |k|^2 at a flat spectral index.
  double k_squared(std::size_t flat) const noexcept;

  friend bool operator==(const Grid3& a, const Grid3& b) noexcept {
    return a.n_ == b.n_ && a.length_ == b.length_;
  }

 private:
  double length_;
  std::size_t n_;
  double spacing_;
  std::vector<double> k_;
};

/// Throws GridMismatch unless both grids are identical.
void require_same_grid(const Grid3& a, const Grid3& b, const char* what);

}  // namespace spdope
