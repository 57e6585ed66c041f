#include "umaml/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "umaml/rng.hpp"

namespace umaml {

std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("an MLP needs at least input and output sizes");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("layer sizes must be positive");
  }
}

void MlpSpec::check_params(const ParamVector& params) const {
  validate();
  if (params.size() != 2 * num_layers()) {
    throw std::invalid_argument("expected " + std::to_string(2 * num_layers()) +
                                " parameter entries, got " +
                                std::to_string(params.size()));
  }
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const Shape w{layer_sizes[l + 1], layer_sizes[l]};
    const Shape b{layer_sizes[l + 1]};
    if (params[2 * l].value.shape() != w || params[2 * l + 1].value.shape() != b) {
      throw std::invalid_argument("parameter shapes do not match layer " +
                                  std::to_string(l + 1));
    }
  }
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  CounterRng rng(seed, Stream::kInit);
  std::vector<ParamEntry> entries;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t in = spec.layer_sizes[l];
    const std::size_t out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w({out, in});
    for (double& v : w.values()) v = dist(rng);
    const std::string idx = std::to_string(l + 1);
    entries.push_back({"W" + idx, std::move(w)});
    entries.push_back({"b" + idx, Tensor({out})});
  }
  return ParamVector(std::move(entries));
}

Var forward(const MlpSpec& spec, std::span<const Var> params, Var x) {
  spec.validate();
  if (params.size() != 2 * spec.num_layers()) {
    throw std::invalid_argument("parameter count does not match the MLP spec");
  }
  if (x.shape().size() != 2 || x.shape()[1] != spec.input_dim()) {
    throw std::invalid_argument("input of shape " + shape_str(x.shape()) +
                                " does not match input dim " +
                                std::to_string(spec.input_dim()));
  }
  Graph& g = *x.graph;
  Var h = x;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    h = g.add_rowvec(g.matmul(h, g.transpose(params[2 * l])), params[2 * l + 1]);
    if (l + 1 < spec.num_layers()) {
      h = spec.activation == Activation::kRelu ? g.relu(h) : g.tanh(h);
    }
  }
  return h;
}

Tensor forward(const MlpSpec& spec, const ParamVector& params, const Tensor& x) {
  spec.check_params(params);
  Graph g;
  const auto vars = add_leaves(g, params);
  return forward(spec, vars, g.constant(x)).value();
}

std::vector<Var> add_leaves(Graph& graph, const ParamVector& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& e : params) vars.push_back(graph.leaf(e.value));
  return vars;
}

ParamVector collect(const ParamVector& layout, std::span<const Var> vars) {
  if (vars.size() != layout.size()) {
    throw std::invalid_argument("variable count does not match parameter layout");
  }
  ParamVector out = layout;
  for (std::size_t i = 0; i < vars.size(); ++i) out[i].value = vars[i].value();
  return out;
}

}  // namespace umaml
