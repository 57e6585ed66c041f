#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "umaml/meta_engine.hpp"

namespace umaml::verify {

struct CheckResult {
  std::string name;
  double worst_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  // Forces first-order meta-gradients; the second-order checks must then fail.
  bool force_first_order = false;
  int random_graphs = 50;
};

// Relative-error floor used by all checks: |a - b| / max(|a|, |b|, floor).
inline constexpr double kRelFloor = 1e-4;

// Each returns the worst relative error observed.
double check_random_graphs(std::uint64_t seed, int count);
double check_polynomial_second_derivatives(std::uint64_t seed, int count);
double check_backward_linearity(std::uint64_t seed);
double check_mlp_grad_fd(std::uint64_t seed);
double check_mlp_grad_reference(std::uint64_t seed);
// [1,8,1] relu, one inner step, against finite differences of the full
// objective evaluated with the reference MLP.
double check_meta_gradient_fd(std::uint64_t seed, GradOrder order);
// Inner loss linear in the parameters: first- and second-order agree.
double check_linear_probe_orders(std::uint64_t seed);
// Quadratic inner loss with a closed-form meta-gradient.
double check_curved_probe(GradOrder order);
double check_uncertainty_grad(std::uint64_t seed);

std::vector<CheckResult> run_gradcheck(const GradcheckOptions& options);
std::string format_report(const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace umaml::verify
