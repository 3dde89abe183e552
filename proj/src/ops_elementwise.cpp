#include <cmath>

#include "cdfm3sf/ops.hpp"

namespace cdfm3sf {

namespace {

bool want_grad2(const Tensor& a, const Tensor& b) {
  return recording() && (a.requires_grad() || b.requires_grad());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor y(a.shape());
  const real* A = a.data();
  const real* B = b.data();
  real* Y = y.data();
  for (int64_t i = 0; i < y.size(); ++i) Y[i] = A[i] + B[i];
  if (want_grad2(a, b)) {
    y.set_requires_grad(true);
    Tensor ac = a, bc = b, yc = y;
    Tape::current()->record(y, [ac, bc, yc]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      if (ac.requires_grad()) {
        real* dA = ac.grad_data();
        for (int64_t i = 0; i < yc.size(); ++i) dA[i] += dY[i];
      }
      if (bc.requires_grad()) {
        real* dB = bc.grad_data();
        for (int64_t i = 0; i < yc.size(); ++i) dB[i] += dY[i];
      }
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor y(a.shape());
  const real* A = a.data();
  const real* B = b.data();
  real* Y = y.data();
  for (int64_t i = 0; i < y.size(); ++i) Y[i] = A[i] * B[i];
  if (want_grad2(a, b)) {
    y.set_requires_grad(true);
    Tensor ac = a, bc = b, yc = y;
    Tape::current()->record(y, [ac, bc, yc]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      if (ac.requires_grad()) {
        real* dA = ac.grad_data();
        const real* B = bc.data();
        for (int64_t i = 0; i < yc.size(); ++i) dA[i] += dY[i] * B[i];
      }
      if (bc.requires_grad()) {
        real* dB = bc.grad_data();
        const real* A = ac.data();
        for (int64_t i = 0; i < yc.size(); ++i) dB[i] += dY[i] * A[i];
      }
    });
  }
  return y;
}

Tensor scale(const Tensor& x, real c) {
  Tensor y(x.shape());
  const real* X = x.data();
  real* Y = y.data();
  for (int64_t i = 0; i < y.size(); ++i) Y[i] = X[i] * c;
  if (recording() && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor xc = x, yc = y;
    Tape::current()->record(y, [xc, yc, c]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      real* dX = xc.grad_data();
      for (int64_t i = 0; i < yc.size(); ++i) dX[i] += dY[i] * c;
    });
  }
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  const real* X = x.data();
  real* Y = y.data();
  for (int64_t i = 0; i < y.size(); ++i) Y[i] = X[i] > 0 ? X[i] : 0;
  if (recording() && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor xc = x, yc = y;
    Tape::current()->record(y, [xc, yc]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      const real* X = xc.data();
      real* dX = xc.grad_data();
      for (int64_t i = 0; i < yc.size(); ++i)
        if (X[i] > 0) dX[i] += dY[i];
    });
  }
  return y;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.shape());
  const real* X = x.data();
  real* Y = y.data();
  for (int64_t i = 0; i < y.size(); ++i) {
    real v = X[i];
    Y[i] = v >= 0 ? real(1) / (real(1) + std::exp(-v))
                  : std::exp(v) / (real(1) + std::exp(v));
  }
  if (recording() && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor xc = x, yc = y;
    Tape::current()->record(y, [xc, yc]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      const real* Y = yc.data();
      real* dX = xc.grad_data();
      for (int64_t i = 0; i < yc.size(); ++i) dX[i] += dY[i] * Y[i] * (1 - Y[i]);
    });
  }
  return y;
}

Tensor sum(const Tensor& x) {
  real s = 0;
  const real* X = x.data();
  for (int64_t i = 0; i < x.size(); ++i) s += X[i];
  Tensor y = Tensor::scalar(s);
  if (recording() && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor xc = x, yc = y;
    Tape::current()->record(y, [xc, yc]() mutable {
      if (!yc.has_grad()) return;
      real g = yc.grad_data()[0];
      real* dX = xc.grad_data();
      for (int64_t i = 0; i < xc.size(); ++i) dX[i] += g;
    });
  }
  return y;
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
  check(!xs.empty(), "concat_channels: need at least one input");
  const Tensor& first = xs.front();
  check_shape(first.rank() == 4, "concat_channels: inputs must be rank-4 b,h,w,m");
  int64_t total_c = 0;
  bool any_grad = false;
  for (const Tensor& t : xs) {
    check_shape(t.rank() == 4 && t.dim(0) == first.dim(0) && t.dim(1) == first.dim(1) &&
                    t.dim(2) == first.dim(2),
                "concat_channels: b,h,w must match across inputs, got " + shape_str(t.shape()) +
                    " vs " + shape_str(first.shape()));
    total_c += t.dim(3);
    any_grad = any_grad || t.requires_grad();
  }
  const int64_t b = first.dim(0), h = first.dim(1), w = first.dim(2);
  const int64_t pixels = b * h * w;
  Tensor y({b, h, w, total_c});
  real* Y = y.data();
  int64_t base = 0;
  for (const Tensor& t : xs) {
    const real* X = t.data();
    int64_t c = t.dim(3);
    for (int64_t p = 0; p < pixels; ++p)
      for (int64_t j = 0; j < c; ++j) Y[p * total_c + base + j] = X[p * c + j];
    base += c;
  }
  if (recording() && any_grad) {
    y.set_requires_grad(true);
    Tensor yc = y;
    std::vector<Tensor> ins = xs;
    Tape::current()->record(y, [ins, yc, pixels, total_c]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      int64_t base = 0;
      for (Tensor& t : ins) {
        int64_t c = t.dim(3);
        if (t.requires_grad()) {
          real* dX = t.grad_data();
          for (int64_t p = 0; p < pixels; ++p)
            for (int64_t j = 0; j < c; ++j) dX[p * c + j] += dY[p * total_c + base + j];
        }
        base += c;
      }
    });
  }
  return y;
}

Tensor slice_channels(const Tensor& x, int64_t first, int64_t count) {
  check_shape(x.rank() == 4, "slice_channels: input must be rank-4 b,h,w,m");
  check(first >= 0 && count >= 1 && first + count <= x.dim(3),
        "slice_channels: range [" + std::to_string(first) + "," +
            std::to_string(first + count) + ") outside " + std::to_string(x.dim(3)) +
            " channels");
  const int64_t pixels = x.dim(0) * x.dim(1) * x.dim(2), c = x.dim(3);
  Tensor y({x.dim(0), x.dim(1), x.dim(2), count});
  const real* X = x.data();
  real* Y = y.data();
  for (int64_t p = 0; p < pixels; ++p)
    for (int64_t j = 0; j < count; ++j) Y[p * count + j] = X[p * c + first + j];
  if (recording() && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor xc = x, yc = y;
    Tape::current()->record(y, [xc, yc, pixels, c, first, count]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      real* dX = xc.grad_data();
      for (int64_t p = 0; p < pixels; ++p)
        for (int64_t j = 0; j < count; ++j) dX[p * c + first + j] += dY[p * count + j];
    });
  }
  return y;
}

}  // namespace cdfm3sf
