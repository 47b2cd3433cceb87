#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

namespace bbi::detail {

// FFTW planning is not thread-safe; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

/// Batched in-place 1D transforms over a strided set of lines. Forward is
/// unnormalized; backward divides by the line length.
class FftLines {
 public:
  FftLines() = default;
  // `n` points per line, `howmany` lines, element stride, line distance.
  FftLines(std::vector<std::complex<double>>& data, int n, int howmany, int stride, int dist) : n_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_iodim dim{n, stride, stride};
    fftw_iodim many{howmany, dist, dist};
    forward_ = fftw_plan_guru_dft(1, &dim, 1, &many, as_fftw(data.data()), as_fftw(data.data()), FFTW_FORWARD,
                                  FFTW_ESTIMATE);
    backward_ = fftw_plan_guru_dft(1, &dim, 1, &many, as_fftw(data.data()), as_fftw(data.data()), FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
  }
  FftLines(const FftLines&) = delete;
  FftLines& operator=(const FftLines&) = delete;
  FftLines(FftLines&& o) noexcept { swap(o); }
  FftLines& operator=(FftLines&& o) noexcept {
    swap(o);
    return *this;
  }
  ~FftLines() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }

  void forward(std::vector<std::complex<double>>& data) const {
    fftw_execute_dft(forward_, as_fftw(data.data()), as_fftw(data.data()));
  }
  void backward(std::vector<std::complex<double>>& data) const {
    fftw_execute_dft(backward_, as_fftw(data.data()), as_fftw(data.data()));
    const double s = 1.0 / n_;
    for (auto& v : data) v *= s;
  }
  // Backward without normalization, for callers that fold the factor in.
  void backward_raw(std::vector<std::complex<double>>& data) const {
    fftw_execute_dft(backward_, as_fftw(data.data()), as_fftw(data.data()));
  }
  int length() const { return n_; }

 private:
  void swap(FftLines& o) noexcept {
    std::swap(forward_, o.forward_);
    std::swap(backward_, o.backward_);
    std::swap(n_, o.n_);
  }

  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  int n_ = 0;
};

}  // namespace bbi::detail
