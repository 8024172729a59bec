#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "imgchain/error.hpp"

namespace imgchain {

/// Row-major 2-D grid of doubles.
class Raster {
 public:
  Raster() = default;
  Raster(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Raster(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, "raster data size does not match its shape");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const noexcept {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double sum() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
  }

  double mean() const noexcept { return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size()); }

  template <typename F>
  Raster map(F&& f) const {
    Raster out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = f(data_[i]);
    return out;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace imgchain
