#include <vector>

#include "cdfm3sf/ops.hpp"
#include "cdfm3sf/parallel.hpp"

namespace cdfm3sf {

namespace {

void pool_checks(const Tensor& x, int window, int stride, const char* op) {
  check_shape(x.defined() && x.rank() == 4, std::string(op) + ": input must be rank-4 b,h,w,m");
  check(window >= 1 && stride >= 1, std::string(op) + ": window and stride must be >= 1");
  check_shape(x.dim(1) >= window && x.dim(2) >= window,
              std::string(op) + ": window larger than input extent");
  check_shape((x.dim(1) - window) % stride == 0 && (x.dim(2) - window) % stride == 0,
              std::string(op) + ": input extent " + std::to_string(x.dim(1)) + "x" +
                  std::to_string(x.dim(2)) + " not divisible by stride " + std::to_string(stride));
}

}  // namespace

Tensor max_pool(const Tensor& x, int window, int stride) {
  pool_checks(x, window, stride, "max_pool");
  const int64_t b = x.dim(0), h = x.dim(1), w = x.dim(2), m = x.dim(3);
  const int64_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;

  Tensor y({b, oh, ow, m});
  // argmax flat source index per output element; ties resolved toward the
  // first maximal element in row-major scan order.
  auto argmax = std::make_shared<std::vector<int64_t>>(y.size());
  const real* X = x.data();
  real* Y = y.data();
  int64_t* A = argmax->data();

  parallel_for(b * oh, [&](int64_t begin, int64_t end) {
    for (int64_t row = begin; row < end; ++row) {
      int64_t bi = row / oh, oy = row % oh;
      for (int64_t ox = 0; ox < ow; ++ox)
        for (int64_t c = 0; c < m; ++c) {
          real best = 0;
          int64_t best_idx = -1;
          for (int ky = 0; ky < window; ++ky)
            for (int kx = 0; kx < window; ++kx) {
              int64_t idx = ((bi * h + oy * stride + ky) * w + ox * stride + kx) * m + c;
              if (best_idx < 0 || X[idx] > best) {
                best = X[idx];
                best_idx = idx;
              }
            }
          int64_t oidx = ((bi * oh + oy) * ow + ox) * m + c;
          Y[oidx] = best;
          A[oidx] = best_idx;
        }
    }
  });

  if (recording() && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor xc = x, yc = y;
    Tape::current()->record(y, [xc, yc, argmax]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      real* dX = xc.grad_data();
      const int64_t* A = argmax->data();
      for (int64_t i = 0; i < yc.size(); ++i) dX[A[i]] += dY[i];
    });
  }
  return y;
}

Tensor avg_pool(const Tensor& x, int window, int stride) {
  pool_checks(x, window, stride, "avg_pool");
  const int64_t b = x.dim(0), h = x.dim(1), w = x.dim(2), m = x.dim(3);
  const int64_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  const real inv = real(1) / (real(window) * window);

  Tensor y({b, oh, ow, m});
  const real* X = x.data();
  real* Y = y.data();

  parallel_for(b * oh, [&](int64_t begin, int64_t end) {
    for (int64_t row = begin; row < end; ++row) {
      int64_t bi = row / oh, oy = row % oh;
      for (int64_t ox = 0; ox < ow; ++ox)
        for (int64_t c = 0; c < m; ++c) {
          real s = 0;
          for (int ky = 0; ky < window; ++ky)
            for (int kx = 0; kx < window; ++kx)
              s += X[((bi * h + oy * stride + ky) * w + ox * stride + kx) * m + c];
          Y[((bi * oh + oy) * ow + ox) * m + c] = s * inv;
        }
    }
  });

  if (recording() && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor xc = x, yc = y;
    Tape::current()->record(y, [xc, yc, b, h, w, m, oh, ow, window, stride, inv]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      real* dX = xc.grad_data();
      for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t oy = 0; oy < oh; ++oy)
          for (int64_t ox = 0; ox < ow; ++ox)
            for (int64_t c = 0; c < m; ++c) {
              real g = dY[((bi * oh + oy) * ow + ox) * m + c] * inv;
              for (int ky = 0; ky < window; ++ky)
                for (int kx = 0; kx < window; ++kx)
                  dX[((bi * h + oy * stride + ky) * w + ox * stride + kx) * m + c] += g;
            }
    });
  }
  return y;
}

}  // namespace cdfm3sf
