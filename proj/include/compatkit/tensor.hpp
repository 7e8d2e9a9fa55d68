#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "compatkit/errors.hpp"

namespace compatkit::toy {

/// Dense row-major 2-D array of doubles with an optional gradient buffer of the same shape.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor2 random_normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  bool has_grad() const noexcept { return grad_.has_value(); }
  /// Allocates a zeroed gradient buffer if none exists.
  std::span<double> ensure_grad();
  /// Throws Error when no gradient has been materialized.
  std::span<const double> grad() const;
  void clear_grad() noexcept { grad_.reset(); }

  bool all_finite() const noexcept;
  bool same_shape(const Tensor2& other) const noexcept { return rows_ == other.rows_ && cols_ == other.cols_; }

  /// Shape and values; the gradient buffer is not compared.
  bool operator==(const Tensor2& other) const { return same_shape(other) && values_ == other.values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::optional<std::vector<double>> grad_;
};

/// a (m x k) times b (k x n).
Tensor2 matmul(const Tensor2& a, const Tensor2& b);

}  // namespace compatkit::toy
