#pragma once

#include <functional>

#include "umaml/param_vector.hpp"

namespace umaml {

using ScalarFn = std::function<double(const ParamVector&)>;

// Central-difference gradient (f(θ + h e_i) - f(θ - h e_i)) / 2h for every
// coordinate of θ. Throws std::domain_error if f returns a non-finite value.
ParamVector finite_diff_grad(const ScalarFn& f, const ParamVector& theta, double h);

// Worst |a - b| / max(|a|, |b|, floor) over all coordinates.
double max_relative_error(const ParamVector& a, const ParamVector& b,
                          double floor = 1e-8);

}  // namespace umaml
