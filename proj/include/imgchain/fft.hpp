#pragma once

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "imgchain/error.hpp"

namespace imgchain::fft {

using Complex = std::complex<double>;

enum class Direction { Forward, Inverse };

namespace detail {

// FFTW's planner is not reentrant; plan execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// A 2-D complex plan with its own aligned buffer. Owned by one thread.
class Plan {
 public:
  Plan(std::size_t rows, std::size_t cols, Direction dir) : n_(rows * cols) {
    buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
    if (!buffer_) throw Error("fftw_malloc failed");
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buffer_, buffer_,
                             dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_) {
      fftw_free(buffer_);
      throw Error("FFTW planning failed");
    }
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buffer_);
  }

  void execute(std::vector<Complex>& data) {
    static_assert(sizeof(Complex) == sizeof(fftw_complex));
    std::memcpy(buffer_, data.data(), sizeof(fftw_complex) * n_);
    fftw_execute(plan_);
    std::memcpy(static_cast<void*>(data.data()), buffer_, sizeof(fftw_complex) * n_);
  }

 private:
  std::size_t n_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan plan_ = nullptr;
};

inline Plan& plan_for(std::size_t rows, std::size_t cols, Direction dir) {
  thread_local std::map<std::tuple<std::size_t, std::size_t, Direction>, std::unique_ptr<Plan>> cache;
  auto& slot = cache[{rows, cols, dir}];
  if (!slot) slot = std::make_unique<Plan>(rows, cols, dir);
  return *slot;
}

}  // namespace detail

/// Unnormalized 2-D DFT in place (row-major). The inverse is NOT scaled by 1/N.
inline void transform(std::vector<Complex>& data, std::size_t rows, std::size_t cols, Direction dir) {
  require(rows > 0 && cols > 0 && data.size() == rows * cols, "fft: data size does not match shape");
  detail::plan_for(rows, cols, dir).execute(data);
}

/// Moves the zero-frequency bin to index floor(n/2) along each axis.
inline std::vector<Complex> shift(const std::vector<Complex>& in, std::size_t rows, std::size_t cols) {
  std::vector<Complex> out(in.size());
  const std::size_t hr = rows / 2, hc = cols / 2;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t rr = (r + hr) % rows;
    for (std::size_t c = 0; c < cols; ++c) out[rr * cols + (c + hc) % cols] = in[r * cols + c];
  }
  return out;
}

/// Inverse of shift().
inline std::vector<Complex> unshift(const std::vector<Complex>& in, std::size_t rows, std::size_t cols) {
  std::vector<Complex> out(in.size());
  const std::size_t hr = rows / 2, hc = cols / 2;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t rr = (r + hr) % rows;
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = in[rr * cols + (c + hc) % cols];
  }
  return out;
}

}  // namespace imgchain::fft
