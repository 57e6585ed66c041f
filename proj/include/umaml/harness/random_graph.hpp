#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "umaml/autodiff.hpp"
#include "umaml/param_vector.hpp"

namespace umaml::verify {

// Leaves A [2x3], B [2x3], M [3x2], v [3] with entries in [-2, 2], each at
// least 1e-3 away from zero.
ParamVector random_graph_inputs(std::uint64_t seed);

struct RandomExpr {
  Var output;                     // scalar
  std::vector<Var> relu_inputs;   // for kink screening
};

// Random scalar expression of depth <= max_depth over the leaves above,
// covering the whole differentiable op set. The structure depends only on
// structure_seed, so rebuilding with other leaf values gives the same function.
RandomExpr build_random_expr(Graph& graph, std::span<const Var> leaves,
                             std::uint64_t structure_seed, int max_depth = 6);

// Smallest |relu input| in the expression.
double relu_margin(const RandomExpr& expr);

}  // namespace umaml::verify
