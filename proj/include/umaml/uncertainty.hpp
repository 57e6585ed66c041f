#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "umaml/autodiff.hpp"
#include "umaml/tensor.hpp"

namespace umaml {

enum class TaskKind { kClassification, kRegression };

// Learnable log-variances s_i = log(sigma_i^2), one per meta-batch slot.
struct UncertaintyState {
  std::vector<double> s;

  UncertaintyState() = default;
  explicit UncertaintyState(std::size_t slots) : s(slots, 0.0) {}

  std::size_t size() const { return s.size(); }
  // Effective loss weight exp(-s_i).
  double weight(std::size_t i) const;
};

// softmax(logits / sigma_sq), row-wise.
Tensor scaled_softmax(const Tensor& logits, double sigma_sq);
Var scaled_softmax(Var logits, double sigma_sq);

// Mean negative log-likelihood of integer labels under scaled_softmax.
double scaled_nll(const Tensor& logits, const Tensor& labels, double sigma_sq);

// classification: sum_i exp(-s_i) L_i + s_i / 2
// regression:     sum_i exp(-s_i) L_i / 2 + s_i / 2
// Each s_i must be a {1}-shaped node; so must each loss.
Var combined_loss(std::span<const Var> task_losses, std::span<const Var> s,
                  TaskKind kind);
double combined_loss(std::span<const double> task_losses, std::span<const double> s,
                     TaskKind kind);

// Minimizer of the single-task combined loss for a fixed loss value.
double optimal_s(double loss, TaskKind kind);

}  // namespace umaml
