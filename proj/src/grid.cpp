#include "spdope/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "spdope/errors.hpp"

namespace spdope {

namespace {

bool fft_friendly(std::size_t n) {
  if (n % 2 != 0) return false;
  for (std::size_t p : {2u, 3u, 5u}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

}  // namespace

Grid3::Grid3(double box_length, std::size_t points_per_axis)
    : length_(box_length), n_(points_per_axis), spacing_(0.0) {
  if (!(box_length > 0.0) || !std::isfinite(box_length)) {
    throw std::invalid_argument("grid: box length must be positive and finite");
  }
  if (n_ < 8 || !fft_friendly(n_)) {
    throw std::invalid_argument("grid: points per axis must be even, >= 8 and have no prime factor above 5, got " +
                                std::to_string(n_));
  }
  spacing_ = length_ / static_cast<double>(n_);
  k_.resize(n_);
  const double dk = 2.0 * std::numbers::pi / length_;
  const auto half = static_cast<long>(n_ / 2);
  for (std::size_t j = 0; j < n_; ++j) {
    const long m = static_cast<long>(j) < half ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n_);
    k_[j] = dk * static_cast<double>(m);
  }
}

Vec3 Grid3::position(std::size_t flat) const noexcept {
  const std::size_t ix = flat % n_;
  const std::size_t iy = (flat / n_) % n_;
  const std::size_t iz = flat / (n_ * n_);
  return {coord(ix), coord(iy), coord(iz)};
}

double Grid3::k_squared(std::size_t flat) const noexcept {
  const double kx = k_[flat % n_];
  const double ky = k_[(flat / n_) % n_];
  const double kz = k_[flat / (n_ * n_)];
  return kx * kx + ky * ky + kz * kz;
}

void require_same_grid(const Grid3& a, const Grid3& b, const char* what) {
  if (!(a == b)) {
    throw GridMismatch(std::string(what) + ": grid mismatch");
  }
}

}  // namespace spdope
