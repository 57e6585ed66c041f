#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "umaml/tensor.hpp"

namespace umaml {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over an ordered list of tensors. Moment buffers are
// created on the first step and must keep the same layout afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig cfg);

  void step(std::span<Tensor> params, std::span<const Tensor> grads);
  // Drops moments and the step counter.
  void reset();

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace umaml
