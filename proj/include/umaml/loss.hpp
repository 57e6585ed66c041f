#pragma once

#include <optional>

#include "umaml/autodiff.hpp"
#include "umaml/mlp.hpp"
#include "umaml/tasks.hpp"

namespace umaml {

// Mean loss of network outputs against [rows x 1] targets.
Var task_loss(Var output, const Tensor& targets, LossKind kind);

// Fraction of rows whose argmax (lowest index on ties) equals the label.
double argmax_accuracy(const Tensor& logits, const Tensor& labels);

struct LossValue {
  double loss = 0.0;
  std::optional<double> accuracy;
};

// Loss (and accuracy for classification) of params on (x, y), no graph kept.
LossValue evaluate_loss(const MlpSpec& spec, const ParamVector& params,
                        const Tensor& x, const Tensor& y, LossKind kind);

}  // namespace umaml
