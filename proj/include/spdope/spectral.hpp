#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>

#include "spdope/field.hpp"
#include "spdope/grid.hpp"

namespace spdope {

struct WorkspaceOptions {
  /// Build the zero-padded (2N)^3 plans and the Coulomb kernel.
  bool padded = true;
  /// Truncation radius of the Coulomb kernel; defaults to sqrt(3) L.
  std::optional<double> truncation_radius;
  /// Use FFTW_MEASURE planning instead of FFTW_ESTIMATE.
  bool measure = false;
};

/// Fourier transform of the truncated kernel 1_{|x|<T} / (4 pi |x|):
/// (1 - cos(T k)) / k^2, with the limit T^2 / 2 at k = 0.
double truncated_kernel_hat(double k, double radius) noexcept;

/// FFT plans and the free-space Coulomb kernel for one grid.
///
/// The kernel is the band-limited truncated Green's function: its spectrum is
/// sampled on a 4x oversampled frequency lattice, brought back to real space on
/// [-L, L]^3 with a cosine transform, and re-transformed on the (2N)^3 padded
/// lattice. Convolving zero-padded data with it reproduces the aperiodic
/// convolution against 1/(4 pi |x|) for every pair of nodes in the box.
///
/// Not safe for concurrent use; give each worker its own workspace.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(const Grid3& grid, WorkspaceOptions options = {});
  ~SpectralWorkspace();
  SpectralWorkspace(SpectralWorkspace&&) noexcept;
  SpectralWorkspace& operator=(SpectralWorkspace&&) noexcept;
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  const Grid3& grid() const noexcept;
  bool has_padded() const noexcept;
  double truncation_radius() const noexcept;

  /// Unnormalized forward DFT, in place.
  void forward(std::span<cplx> data);
  /// Inverse DFT including the 1/N^3 factor, in place.
  void backward(std::span<cplx> data);

  /// Aperiodic convolution of `source` with 1/(4 pi |x|), cropped to the box.
  void convolve_coulomb(std::span<const double> source, std::span<double> out);

  /// Effective kernel spectrum on the padded half-complex lattice,
  /// (2N) x (2N) x (N + 1) with the halved axis fastest.
  std::span<const double> padded_kernel_spectrum() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// -- quadrature and spectral operators ---------------------------------------

/// h^3 * sum of values (periodic trapezoid rule).
double integrate(const RealField& f);
/// (integral |f|^p)^(1/p); p < 1 is rejected.
double lp_norm(const RealField& f, double p);
double lp_norm(const ComplexField& f, double p);
/// Re of the L2 pairing  integral a conj(b).
double inner_real(const ComplexField& a, const ComplexField& b);
/// L2 pairing  integral a conj(b).
cplx inner(const ComplexField& a, const ComplexField& b);
double mass(const ComplexField& u);

ComplexField laplacian(const ComplexField& u, SpectralWorkspace& ws);
/// Spectral first derivatives; the Nyquist plane is dropped for odd symbols.
std::array<ComplexField, 3> gradient(const ComplexField& u, SpectralWorkspace& ws);
/// integral |grad u|^2 via Parseval.
double grad_norm_sq(const ComplexField& u, SpectralWorkspace& ws);
double grad_norm_sq(const RealField& u, SpectralWorkspace& ws);
/// v with -Laplace v = f on free space, i.e. v = f * 1/(4 pi |x|).
RealField coulomb_solve(const RealField& f, SpectralWorkspace& ws);
/// Free Schroedinger flow: each mode multiplied by exp(-i |k|^2 t).
ComplexField kinetic_phase(const ComplexField& u, SpectralWorkspace& ws, double t);

/// Share of |f| carried by the outer two-cell shell of the box.
double boundary_fraction(const RealField& density);
/// Boundary share above which callers should warn about truncation.
inline constexpr double kBoundaryLeakThreshold = 1e-8;

}  // namespace spdope
