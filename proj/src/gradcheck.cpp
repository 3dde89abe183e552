#include "cdfm3sf/gradcheck.hpp"

#include <cmath>

namespace cdfm3sf {

std::vector<real> finite_difference_grad(const std::function<real(const Tensor&)>& f, Tensor x,
                                         real eps) {
  check(eps > 0, "finite_difference_grad: eps must be positive");
  std::vector<real> g(x.size());
  real* X = x.data();
  for (int64_t i = 0; i < x.size(); ++i) {
    real saved = X[i];
    X[i] = saved + eps;
    real up = f(x);
    X[i] = saved - eps;
    real down = f(x);
    X[i] = saved;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

real max_relative_error(const std::vector<real>& a, const std::vector<real>& b) {
  check(a.size() == b.size(), "max_relative_error: length mismatch");
  real worst = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    real e = std::abs(a[i] - b[i]) / (std::abs(b[i]) + real(1e-8));
    if (e > worst) worst = e;
  }
  return worst;
}

}  // namespace cdfm3sf
