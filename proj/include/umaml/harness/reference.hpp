#pragma once

#include <span>

#include "umaml/mlp.hpp"
#include "umaml/tasks.hpp"

namespace umaml::reference {

// Plain-loop MLP forward/backward written without the graph, used as an
// independent check on it.

double loss(const MlpSpec& spec, const ParamVector& params, const Tensor& x,
            const Tensor& y, LossKind kind);

ParamVector grad(const MlpSpec& spec, const ParamVector& params, const Tensor& x,
                 const Tensor& y, LossKind kind);

// Mean over episodes of the query loss after `steps` gradient-descent steps on
// the support set, every gradient coming from grad() above.
double maml_objective(const MlpSpec& spec, const ParamVector& theta,
                      std::span<const Episode> episodes, double inner_lr,
                      std::size_t steps, LossKind kind);

}  // namespace umaml::reference
