#include "umaml/weight_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace umaml {

void WeightConfig::validate() const {
  if (!(threshold > 0.0)) throw std::invalid_argument("weight threshold must be > 0");
  if (!(floor >= 0.0)) throw std::invalid_argument("weight floor must be >= 0");
}

std::vector<double> compute_weights(std::span<const double> support_losses,
                                    std::span<const double> query_losses,
                                    const WeightConfig& cfg) {
  cfg.validate();
  if (support_losses.size() != query_losses.size()) {
    throw std::invalid_argument("support and query loss counts differ");
  }
  if (support_losses.empty()) throw std::invalid_argument("need at least one task");
  const std::size_t n = support_losses.size();

  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = support_losses[i], q = query_losses[i];
    if (std::isnan(s) || std::isnan(q)) throw std::invalid_argument("NaN task loss");
    if (s > cfg.threshold) {
      raw[i] = 1.0;
    } else {
      raw[i] = cfg.allow_signed ? q - s : std::max(q - s, cfg.floor);
    }
  }

  double total = 0.0;
  for (double r : raw) total += r;
  if (total == 0.0) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  for (double& r : raw) r /= total;
  return raw;
}

}  // namespace umaml
