#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "umaml/autodiff.hpp"
#include "umaml/param_vector.hpp"

namespace umaml {

enum class Activation { kRelu, kTanh };

std::string to_string(Activation a);
Activation parse_activation(std::string_view s);

// Fully-connected network layout. Activation is applied between layers,
// never after the last one.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::kRelu;

  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  void validate() const;
  // Throws unless params has entries W1, b1, ... with matching shapes.
  void check_params(const ParamVector& params) const;
};

// Glorot-uniform weights W_l [out x in], zero biases b_l [out].
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

// x [batch x in] -> [batch x out], recorded in x's graph.
Var forward(const MlpSpec& spec, std::span<const Var> params, Var x);

// Value-only convenience wrapper.
Tensor forward(const MlpSpec& spec, const ParamVector& params, const Tensor& x);

// Adds every parameter entry to the graph as a leaf.
std::vector<Var> add_leaves(Graph& graph, const ParamVector& params);
// Collects values of vars into a ParamVector with the names of `layout`.
ParamVector collect(const ParamVector& layout, std::span<const Var> vars);

}  // namespace umaml
