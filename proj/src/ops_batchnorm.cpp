#include <cmath>
#include <memory>
#include <vector>

#include "cdfm3sf/ops.hpp"
#include "cdfm3sf/parallel.hpp"

namespace cdfm3sf {

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, real momentum, real eps) {
  check_shape(x.rank() == 4, "batch_norm: input must be rank-4 b,h,w,m");
  const int64_t c = x.dim(3);
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean,
                                                              &running_var})
    check_shape(t->defined() && t->rank() == 1 && t->dim(0) == c,
                "batch_norm: parameter extent must equal channel count " + std::to_string(c));
  const int64_t pixels = x.dim(0) * x.dim(1) * x.dim(2);
  check(pixels > 0, "batch_norm: empty input");

  const real* X = x.data();
  const real* G = gamma.data();
  const real* B = beta.data();

  // mean/invstd actually used for normalization (batch stats in train mode,
  // running stats in infer mode); saved for the backward rule.
  auto mean = std::make_shared<std::vector<real>>(c);
  auto invstd = std::make_shared<std::vector<real>>(c);

  if (training) {
    // Statistics reduced serially in a fixed order so results are independent
    // of the worker count.
    std::vector<real> var(c, 0);
    for (int64_t j = 0; j < c; ++j) (*mean)[j] = 0;
    for (int64_t p = 0; p < pixels; ++p) {
      const real* xp = X + p * c;
      for (int64_t j = 0; j < c; ++j) (*mean)[j] += xp[j];
    }
    for (int64_t j = 0; j < c; ++j) (*mean)[j] /= real(pixels);
    for (int64_t p = 0; p < pixels; ++p) {
      const real* xp = X + p * c;
      for (int64_t j = 0; j < c; ++j) {
        real d = xp[j] - (*mean)[j];
        var[j] += d * d;
      }
    }
    for (int64_t j = 0; j < c; ++j) var[j] /= real(pixels);  // biased, per the BN convention
    real* rm = running_mean.data();
    real* rv = running_var.data();
    for (int64_t j = 0; j < c; ++j) {
      rm[j] = momentum * rm[j] + (1 - momentum) * (*mean)[j];
      rv[j] = momentum * rv[j] + (1 - momentum) * var[j];
      (*invstd)[j] = real(1) / std::sqrt(var[j] + eps);
    }
  } else {
    const real* rm = running_mean.data();
    const real* rv = running_var.data();
    for (int64_t j = 0; j < c; ++j) {
      (*mean)[j] = rm[j];
      (*invstd)[j] = real(1) / std::sqrt(rv[j] + eps);
    }
  }

  Tensor y(x.shape());
  real* Y = y.data();
  parallel_for(pixels, [&](int64_t p0, int64_t p1) {
    for (int64_t p = p0; p < p1; ++p) {
      const real* xp = X + p * c;
      real* yp = Y + p * c;
      for (int64_t j = 0; j < c; ++j)
        yp[j] = G[j] * ((xp[j] - (*mean)[j]) * (*invstd)[j]) + B[j];
    }
  });

  if (recording() && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad())) {
    y.set_requires_grad(true);
    Tensor xc = x, gc = gamma, bc = beta, yc = y;
    Tape::current()->record(y, [xc, gc, bc, yc, mean, invstd, pixels, c, training]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      const real* X = xc.data();
      const real* G = gc.data();
      // Per-channel reductions over dy and dy*xhat, shared by all three grads.
      std::vector<real> sum_dy(c, 0), sum_dy_xhat(c, 0);
      for (int64_t p = 0; p < pixels; ++p) {
        const real* dyp = dY + p * c;
        const real* xp = X + p * c;
        for (int64_t j = 0; j < c; ++j) {
          real xhat = (xp[j] - (*mean)[j]) * (*invstd)[j];
          sum_dy[j] += dyp[j];
          sum_dy_xhat[j] += dyp[j] * xhat;
        }
      }
      if (gc.requires_grad()) {
        real* dG = gc.grad_data();
        for (int64_t j = 0; j < c; ++j) dG[j] += sum_dy_xhat[j];
      }
      if (bc.requires_grad()) {
        real* dB = bc.grad_data();
        for (int64_t j = 0; j < c; ++j) dB[j] += sum_dy[j];
      }
      if (xc.requires_grad()) {
        real* dX = xc.grad_data();
        if (training) {
          const real inv_n = real(1) / real(pixels);
          parallel_for(pixels, [&](int64_t p0, int64_t p1) {
            for (int64_t p = p0; p < p1; ++p) {
              const real* dyp = dY + p * c;
              const real* xp = X + p * c;
              real* dxp = dX + p * c;
              for (int64_t j = 0; j < c; ++j) {
                real xhat = (xp[j] - (*mean)[j]) * (*invstd)[j];
                dxp[j] += G[j] * (*invstd)[j] *
                          (dyp[j] - sum_dy[j] * inv_n - xhat * sum_dy_xhat[j] * inv_n);
              }
            }
          });
        } else {
          parallel_for(pixels, [&](int64_t p0, int64_t p1) {
            for (int64_t p = p0; p < p1; ++p) {
              const real* dyp = dY + p * c;
              real* dxp = dX + p * c;
              for (int64_t j = 0; j < c; ++j) dxp[j] += dyp[j] * G[j] * (*invstd)[j];
            }
          });
        }
      }
    });
  }
  return y;
}

}  // namespace cdfm3sf
