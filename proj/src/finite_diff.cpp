#include "umaml/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace umaml {

ParamVector finite_diff_grad(const ScalarFn& f, const ParamVector& theta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be > 0");
  ParamVector grad = theta.zeros_like();
  ParamVector probe = theta;
  const std::size_t n = theta.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = theta.coord(i);
    probe.coord(i) = x + h;
    const double up = f(probe);
    probe.coord(i) = x - h;
    const double down = f(probe);
    probe.coord(i) = x;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("non-finite function value at coordinate " +
                              std::to_string(i));
    }
    grad.coord(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const ParamVector& a, const ParamVector& b, double floor) {
  if (!a.same_layout(b)) throw std::invalid_argument("layout mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double x = a.coord(i), y = b.coord(i);
    const double denom = std::max({std::abs(x), std::abs(y), floor});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

}  // namespace umaml
