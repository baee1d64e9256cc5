#include "iae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "iae/error.hpp"

namespace iae {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace {

std::size_t last_dim(const std::vector<std::size_t>& shape) {
  return shape.empty() ? 1 : shape.back();
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)),
      values_(shape_product(shape_), fill),
      cols_(last_dim(shape_)) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)), cols_(last_dim(shape_)) {
  if (values_.size() != shape_product(shape_)) {
    throw InputError("tensor of shape " + shape_string() + " needs " +
                     std::to_string(shape_product(shape_)) + " values, got " +
                     std::to_string(values_.size()));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, std::vector<double>{v}); }

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw InputError("expected rank-2 tensor, got " + shape_string());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw InputError("expected rank-2 tensor, got " + shape_string());
  return shape_[1];
}

double Tensor::item() const {
  if (values_.size() != 1) throw InputError("item() on tensor of shape " + shape_string());
  return values_[0];
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

}  // namespace iae
