#include "umaml/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace umaml {

Adam::Adam(AdamConfig cfg) : cfg_(cfg) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("Adam learning rate must be > 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
}

void Adam::step(std::span<Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Adam: parameter and gradient counts differ");
  }
  if (m_.empty()) {
    for (const Tensor& p : params) {
      m_.emplace_back(p.shape());
      v_.emplace_back(p.shape());
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("Adam: layout changed");

  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape() != grads[k].shape() || params[k].shape() != m_[k].shape()) {
      throw std::invalid_argument("Adam: shape mismatch in tensor " + std::to_string(k));
    }
    auto p = params[k].values();
    auto g = grads[k].values();
    auto m = m_[k].values();
    auto v = v_[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::reset() {
  t_ = 0;
  m_.clear();
  v_.clear();
}

}  // namespace umaml
