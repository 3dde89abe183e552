#pragma once

#include <functional>
#include <vector>

#include "cdfm3sf/tensor.hpp"

namespace cdfm3sf {

// Central finite differences (f(x+eps*e) - f(x-eps*e)) / (2 eps) per element,
// evaluated by mutating x in place and restoring it. f must be a pure function
// of x's values.
std::vector<real> finite_difference_grad(const std::function<real(const Tensor&)>& f, Tensor x,
                                         real eps = real(1e-5));

// max over elements of |a - b| / (|b| + 1e-8)
real max_relative_error(const std::vector<real>& a, const std::vector<real>& b);

}  // namespace cdfm3sf
