#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace iae {

// Dense row-major array of doubles. Every op in the library works on rank-2
// tensors (a scalar is 1x1, a column vector is n x 1); higher ranks are only
// carried through checkpoints.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor column(std::span<const double> values);
  static Tensor row(std::span<const double> values);
  static Tensor scalar(double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // Rank-2 accessors; throw on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Value of a 1x1 tensor.
  double item() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }
  std::span<double> row_span(std::size_t r) {
    return std::span<double>(values_).subspan(r * cols_, cols_);
  }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
  std::size_t cols_ = 0;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace iae
