#ifndef DARKRING_FFT_HPP
#define DARKRING_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace darkring {

/// Square 2D complex FFT of side n. Plans are created once per size behind a
/// mutex (FFTW planning is not thread safe) and executed through the
/// new-array interface, which is. Transforms are unnormalized.
class Fft2d {
 public:
  static const Fft2d& of_size(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<Fft2d>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot.reset(new Fft2d(n));
    return *slot;
  }

  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;
  ~Fft2d() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(std::span<std::complex<double>> data) const { execute(forward_, data); }
  void backward(std::span<std::complex<double>> data) const { execute(backward_, data); }
  [[nodiscard]] std::size_t n() const noexcept { return n_; }

 private:
  explicit Fft2d(std::size_t n) : n_(n) {
    std::vector<std::complex<double>> scratch(n * n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    const int side = static_cast<int>(n);
    // FFTW_ESTIMATE keeps the plan (and so the floating point result)
    // independent of timing measurements.
    forward_ = fftw_plan_dft_2d(side, side, p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_dft_2d(side, side, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  void execute(fftw_plan plan, std::span<std::complex<double>> data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
  }

  std::size_t n_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

/// Signed spatial frequency (cycles/m) of FFT bin k on an n-point grid.
inline double fft_frequency(std::size_t k, std::size_t n, double pitch) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return (k < n / 2 ? kk : kk - nn) / (nn * pitch);
}

}  // namespace darkring

#endif  // DARKRING_FFT_HPP
