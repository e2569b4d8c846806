#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spdope/errors.hpp"
#include "spdope/grid.hpp"

namespace spdope {

using cplx = std::complex<double>;

/// Scalar field sampled on the nodes of a Grid3.
template <class T>
class Field {
 public:
  using value_type = T;

  explicit Field(Grid3 grid) : grid_(std::move(grid)), values_(grid_.size(), T{}) {}

  Field(Grid3 grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw std::invalid_argument("field: value count does not match N^3");
    }
  }

  /// Pointwise evaluation of `fn(Vec3)` at every node.
  template <class Fn>
  static Field sample(const Grid3& grid, Fn&& fn) {
    Field out(grid);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.values_[i] = static_cast<T>(fn(grid.position(i)));
    }
    return out;
  }

  const Grid3& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](const T& v) {
      if constexpr (std::is_same_v<T, double>) {
        return std::isfinite(v);
      } else {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
      }
    });
  }

  Field& operator+=(const Field& other) {
    require_same_grid(grid_, other.grid_, "field +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  Field& operator-=(const Field& other) {
    require_same_grid(grid_, other.grid_, "field -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }
  template <class S>
  Field& operator*=(S scale) {
    for (auto& v : values_) v *= scale;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  template <class S>
  friend Field operator*(S scale, Field a) {
    return a *= scale;
  }

 private:
  Grid3 grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

/// |u|^2 pointwise.
RealField abs2(const ComplexField& u);
ComplexField to_complex(const RealField& f);
/// Pointwise product of a real potential and a complex field.
ComplexField multiply(const RealField& v, const ComplexField& u);

/// Integer grid shift with periodic wrap: out(x) = in(x - shift h).
template <class T>
Field<T> shifted(const Field<T>& in, const std::array<long, 3>& shift) {
  const auto n = static_cast<long>(in.grid().points_per_axis());
  auto wrap = [n](long i) { return static_cast<std::size_t>(((i % n) + n) % n); };
  Field<T> out(in.grid());
  for (long iz = 0; iz < n; ++iz) {
    for (long iy = 0; iy < n; ++iy) {
      for (long ix = 0; ix < n; ++ix) {
        out[in.grid().index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy),
                            static_cast<std::size_t>(iz))] =
            in[in.grid().index(wrap(ix - shift[0]), wrap(iy - shift[1]), wrap(iz - shift[2]))];
      }
    }
  }
  return out;
}

}  // namespace spdope
