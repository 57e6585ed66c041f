#include "umaml/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace umaml {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw std::invalid_argument("tensor rank must be 1 or 2, got shape " +
                                shape_str(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) {
      throw std::invalid_argument("tensor dimensions must be positive, got " +
                                  shape_str(shape));
    }
  }
}

}  // namespace

Tensor::Tensor() : shape_{1}, values_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (values_.size() != shape_size(shape_)) {
    throw std::invalid_argument("tensor of shape " + shape_str(shape_) +
                                " needs " + std::to_string(shape_size(shape_)) +
                                " values, got " + std::to_string(values_.size()));
  }
}

std::size_t Tensor::rows() const { return rank() == 1 ? 1 : shape_[0]; }
std::size_t Tensor::cols() const { return shape_.back(); }

double Tensor::item() const {
  if (values_.size() != 1) {
    throw std::logic_error("item() on tensor of shape " + shape_str(shape_));
  }
  return values_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace umaml
