#pragma once

#include <span>
#include <vector>

namespace umaml {

struct WeightConfig {
  // Support losses above this mark a task as not yet fitted; it gets raw weight 1.
  double threshold = 1.0;
  // Lower clamp for the query - support gap of fitted tasks.
  double floor = 0.0;
  // Ablation switch: keep signed gaps, no clamp.
  bool allow_signed = false;

  void validate() const;
};

// Contrast meta-loss weights. For each task the raw weight is 1 if its support
// loss exceeds the threshold, else max(query - support, floor). Raw weights are
// normalized to sum to one; an all-zero raw vector yields uniform weights.
std::vector<double> compute_weights(std::span<const double> support_losses,
                                    std::span<const double> query_losses,
                                    const WeightConfig& cfg);

}  // namespace umaml
