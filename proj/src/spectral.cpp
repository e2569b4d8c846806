#include "spdope/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace spdope {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t count) {
  auto* raw = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (raw == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(raw);
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

Plan checked(fftw_plan p) {
  if (p == nullptr) throw std::runtime_error("fftw: plan creation failed");
  return Plan(p);
}

}  // namespace

double truncated_kernel_hat(double k, double radius) noexcept {
  const double tk = radius * k;
  if (tk < 1e-4) {
    // series of (1 - cos x)/x^2 keeps the k -> 0 limit exact
    const double x2 = tk * tk;
    return radius * radius * (0.5 - x2 / 24.0 + x2 * x2 / 720.0);
  }
  // 1 - cos x = 2 sin^2(x/2) avoids cancellation
  const double s = std::sin(0.5 * tk);
  return 2.0 * s * s / (k * k);
}

struct SpectralWorkspace::Impl {
  Grid3 grid;
  bool padded = false;
  double radius = 0.0;

  FftwBuffer<fftw_complex> buffer;
  Plan fwd;
  Plan bwd;

  std::size_t np = 0;  // padded points per axis
  FftwBuffer<double> pad_real;
  FftwBuffer<fftw_complex> pad_hat;
  Plan pad_fwd;
  Plan pad_bwd;
  std::vector<double> kernel_hat;  // (2N)(2N)(N+1), halved axis fastest

  explicit Impl(const Grid3& g) : grid(g) {}

  void build_kernel();
};

void SpectralWorkspace::Impl::build_kernel() {
  const std::size_t n = grid.points_per_axis();
  const double h = grid.spacing();
  const double box = grid.box_length();

  // Stage 1: kernel samples K(j h), j = 0..2N per axis, from the spectrum on
  // the 4L-periodic lattice. The lattice is even in every axis, so a DCT-I of
  // size 2N+1 is the full inverse DFT.
  const std::size_t m1 = 2 * n + 1;
  std::vector<double> stage(m1 * m1 * m1);
  const double dk = 2.0 * std::numbers::pi / (4.0 * box);
  for (std::size_t iz = 0; iz < m1; ++iz) {
    for (std::size_t iy = 0; iy < m1; ++iy) {
      for (std::size_t ix = 0; ix < m1; ++ix) {
        const double k = dk * std::sqrt(static_cast<double>(ix * ix + iy * iy + iz * iz));
        stage[ix + m1 * (iy + m1 * iz)] = truncated_kernel_hat(k, radius);
      }
    }
  }
  {
    Plan plan;
    {
      std::lock_guard lock(planner_mutex());
      const int dims = static_cast<int>(m1);
      plan = checked(fftw_plan_r2r_3d(dims, dims, dims, stage.data(), stage.data(), FFTW_REDFT00,
                                      FFTW_REDFT00, FFTW_REDFT00, FFTW_ESTIMATE));
    }
    fftw_execute(plan.get());
  }
  const double real_scale = 1.0 / std::pow(4.0 * box, 3);

  // Stage 2: crop to |z| <= L (j = 0..N) and transform on the 2L-periodic
  // padded lattice, again via DCT-I by evenness.
  const std::size_t m2 = n + 1;
  std::vector<double> crop(m2 * m2 * m2);
  for (std::size_t iz = 0; iz < m2; ++iz) {
    for (std::size_t iy = 0; iy < m2; ++iy) {
      for (std::size_t ix = 0; ix < m2; ++ix) {
        crop[ix + m2 * (iy + m2 * iz)] = real_scale * stage[ix + m1 * (iy + m1 * iz)];
      }
    }
  }
  stage.clear();
  stage.shrink_to_fit();
  {
    Plan plan;
    {
      std::lock_guard lock(planner_mutex());
      const int dims = static_cast<int>(m2);
      plan = checked(fftw_plan_r2r_3d(dims, dims, dims, crop.data(), crop.data(), FFTW_REDFT00,
                                      FFTW_REDFT00, FFTW_REDFT00, FFTW_ESTIMATE));
    }
    fftw_execute(plan.get());
  }
  const double h3 = h * h * h;

  const std::size_t nh = n + 1;
  kernel_hat.assign(np * np * nh, 0.0);
  auto fold = [this](std::size_t q) { return std::min(q, np - q); };
  for (std::size_t qz = 0; qz < np; ++qz) {
    for (std::size_t qy = 0; qy < np; ++qy) {
      for (std::size_t qx = 0; qx < nh; ++qx) {
        kernel_hat[qx + nh * (qy + np * qz)] = h3 * crop[qx + m2 * (fold(qy) + m2 * fold(qz))];
      }
    }
  }
}

SpectralWorkspace::SpectralWorkspace(const Grid3& grid, WorkspaceOptions options)
    : impl_(std::make_unique<Impl>(grid)) {
  const std::size_t n = grid.points_per_axis();
  const int dims = static_cast<int>(n);
  const unsigned flags = options.measure ? FFTW_MEASURE : FFTW_ESTIMATE;

  impl_->buffer = fftw_buffer<fftw_complex>(grid.size());
  {
    std::lock_guard lock(planner_mutex());
    impl_->fwd = checked(fftw_plan_dft_3d(dims, dims, dims, impl_->buffer.get(), impl_->buffer.get(),
                                          FFTW_FORWARD, flags));
    impl_->bwd = checked(fftw_plan_dft_3d(dims, dims, dims, impl_->buffer.get(), impl_->buffer.get(),
                                          FFTW_BACKWARD, flags));
  }

  impl_->radius = options.truncation_radius.value_or(std::sqrt(3.0) * grid.box_length());
  if (!(impl_->radius > 0.0)) throw std::invalid_argument("workspace: truncation radius must be positive");
  // Kernel images on the 4L lattice must stay out of the cropped [-L, L]^3 block.
  if (impl_->radius > (4.0 - std::sqrt(3.0)) * grid.box_length()) {
    throw std::invalid_argument("workspace: truncation radius exceeds (4 - sqrt 3) L");
  }

  if (options.padded) {
    impl_->padded = true;
    impl_->np = 2 * n;
    const std::size_t np = impl_->np;
    impl_->pad_real = fftw_buffer<double>(np * np * np);
    impl_->pad_hat = fftw_buffer<fftw_complex>(np * np * (n + 1));
    const int pd = static_cast<int>(np);
    {
      std::lock_guard lock(planner_mutex());
      impl_->pad_fwd =
          checked(fftw_plan_dft_r2c_3d(pd, pd, pd, impl_->pad_real.get(), impl_->pad_hat.get(), flags));
      impl_->pad_bwd =
          checked(fftw_plan_dft_c2r_3d(pd, pd, pd, impl_->pad_hat.get(), impl_->pad_real.get(), flags));
    }
    impl_->build_kernel();
  }
}

SpectralWorkspace::~SpectralWorkspace() = default;
SpectralWorkspace::SpectralWorkspace(SpectralWorkspace&&) noexcept = default;
SpectralWorkspace& SpectralWorkspace::operator=(SpectralWorkspace&&) noexcept = default;

const Grid3& SpectralWorkspace::grid() const noexcept { return impl_->grid; }
bool SpectralWorkspace::has_padded() const noexcept { return impl_->padded; }
double SpectralWorkspace::truncation_radius() const noexcept { return impl_->radius; }

void SpectralWorkspace::forward(std::span<cplx> data) {
  if (data.size() != impl_->grid.size()) throw GridMismatch("forward transform: size mismatch");
  std::memcpy(impl_->buffer.get(), data.data(), data.size_bytes());
  fftw_execute(impl_->fwd.get());
  std::memcpy(static_cast<void*>(data.data()), impl_->buffer.get(), data.size_bytes());
}

void SpectralWorkspace::backward(std::span<cplx> data) {
  if (data.size() != impl_->grid.size()) throw GridMismatch("backward transform: size mismatch");
  std::memcpy(impl_->buffer.get(), data.data(), data.size_bytes());
  fftw_execute(impl_->bwd.get());
  // Dividing rounds each entry independently; multiplying by a rounded 1/N^3
  // biases every step the same way, and the mass drifts linearly over long runs.
  const double n = static_cast<double>(data.size());
  const auto* src = reinterpret_cast<const cplx*>(impl_->buffer.get());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = {src[i].real() / n, src[i].imag() / n};
}

void SpectralWorkspace::convolve_coulomb(std::span<const double> source, std::span<double> out) {
  if (!impl_->padded) throw std::logic_error("coulomb solve: workspace was built without padded plans");
  const std::size_t n = impl_->grid.points_per_axis();
  if (source.size() != impl_->grid.size() || out.size() != impl_->grid.size()) {
    throw GridMismatch("coulomb solve: size mismatch");
  }
  const std::size_t np = impl_->np;
  double* pad = impl_->pad_real.get();
  std::fill(pad, pad + np * np * np, 0.0);
  for (std::size_t iz = 0; iz < n; ++iz) {
    for (std::size_t iy = 0; iy < n; ++iy) {
      std::memcpy(pad + np * (iy + np * iz), source.data() + n * (iy + n * iz), n * sizeof(double));
    }
  }
  fftw_execute(impl_->pad_fwd.get());
  const std::size_t half = np * np * (n + 1);
  fftw_complex* hat = impl_->pad_hat.get();
  const double* kernel = impl_->kernel_hat.data();
  for (std::size_t i = 0; i < half; ++i) {
    hat[i][0] *= kernel[i];
    hat[i][1] *= kernel[i];
  }
  fftw_execute(impl_->pad_bwd.get());
  const double scale = 1.0 / static_cast<double>(np * np * np);
  for (std::size_t iz = 0; iz < n; ++iz) {
    for (std::size_t iy = 0; iy < n; ++iy) {
      const double* row = pad + np * (iy + np * iz);
      double* dst = out.data() + n * (iy + n * iz);
      for (std::size_t ix = 0; ix < n; ++ix) dst[ix] = scale * row[ix];
    }
  }
}

std::span<const double> SpectralWorkspace::padded_kernel_spectrum() const {
  if (!impl_->padded) throw std::logic_error("workspace was built without padded plans");
  return impl_->kernel_hat;
}

}  // namespace spdope
