#include <algorithm>
#include <vector>

#include "cdfm3sf/ops.hpp"
#include "cdfm3sf/parallel.hpp"

namespace cdfm3sf {

namespace {

bool want_grad(std::initializer_list<const Tensor*> ins) {
  if (!recording()) return false;
  for (const Tensor* t : ins)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

void check_image(const Tensor& x, const char* op) {
  check_shape(x.defined() && x.rank() == 4,
              std::string(op) + ": input must be rank-4 b,h,w,m");
}

// Maps a transposed-conv output coordinate + kernel tap back to the source
// input coordinate on the zero-interleaved grid; false if the tap lands on an
// interleaved zero or outside the input.
bool deconv_src(int64_t o, int ktap, int64_t off, int stride, int64_t extent, int64_t* src) {
  int64_t t = o + ktap - off;
  if (t < 0 || t % stride != 0) return false;
  int64_t i = t / stride;
  if (i >= extent) return false;
  *src = i;
  return true;
}

struct ConvGeom {
  int64_t b, h, w, m, n;
  int k, stride, dilation;
  int64_t out_h, out_w;
  int64_t pad_top, pad_left;
};

ConvGeom conv_geometry(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride,
                       int dilation, Padding padding, const char* op) {
  check_image(x, op);
  check_shape(kernels.rank() == 4 && kernels.dim(0) == kernels.dim(1),
              std::string(op) + ": kernels must be k,k,in,out with square k, got " +
                  shape_str(kernels.shape()));
  check_shape(kernels.dim(2) == x.dim(3),
              std::string(op) + ": channel axis mismatch, input has " + std::to_string(x.dim(3)) +
                  " channels but kernels expect " + std::to_string(kernels.dim(2)));
  if (bias.defined())
    check_shape(bias.rank() == 1 && bias.dim(0) == kernels.dim(3),
                std::string(op) + ": bias extent must equal output channels " +
                    std::to_string(kernels.dim(3)));
  check(stride >= 1, std::string(op) + ": stride must be >= 1");
  check(dilation >= 1, std::string(op) + ": dilation_rate must be >= 1");

  ConvGeom g;
  g.b = x.dim(0);
  g.h = x.dim(1);
  g.w = x.dim(2);
  g.m = x.dim(3);
  g.n = kernels.dim(3);
  g.k = static_cast<int>(kernels.dim(0));
  g.stride = stride;
  g.dilation = dilation;
  int64_t ek = static_cast<int64_t>(g.k - 1) * dilation + 1;
  if (padding == Padding::same) {
    g.out_h = (g.h + stride - 1) / stride;
    g.out_w = (g.w + stride - 1) / stride;
    int64_t pad_h = std::max<int64_t>((g.out_h - 1) * stride + ek - g.h, 0);
    int64_t pad_w = std::max<int64_t>((g.out_w - 1) * stride + ek - g.w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    check_shape(g.h >= ek && g.w >= ek,
                std::string(op) + ": valid padding needs spatial extent >= effective kernel " +
                    std::to_string(ek));
    g.out_h = (g.h - ek) / stride + 1;
    g.out_w = (g.w - ek) / stride + 1;
    g.pad_top = 0;
    g.pad_left = 0;
  }
  return g;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride,
              int dilation_rate, Padding padding) {
  ConvGeom g = conv_geometry(x, kernels, bias, stride, dilation_rate, padding, "conv2d");
  Tensor y({g.b, g.out_h, g.out_w, g.n});

  const real* X = x.data();
  const real* W = kernels.data();
  const real* B = bias.defined() ? bias.data() : nullptr;
  real* Y = y.data();

  parallel_for(g.b * g.out_h, [&](int64_t begin, int64_t end) {
    std::vector<real> acc(g.n);
    for (int64_t row = begin; row < end; ++row) {
      int64_t bi = row / g.out_h, oy = row % g.out_h;
      for (int64_t ox = 0; ox < g.out_w; ++ox) {
        if (B)
          std::copy(B, B + g.n, acc.begin());
        else
          std::fill(acc.begin(), acc.end(), real(0));
        for (int ky = 0; ky < g.k; ++ky) {
          int64_t iy = oy * g.stride - g.pad_top + int64_t(ky) * g.dilation;
          if (iy < 0 || iy >= g.h) continue;
          for (int kx = 0; kx < g.k; ++kx) {
            int64_t ix = ox * g.stride - g.pad_left + int64_t(kx) * g.dilation;
            if (ix < 0 || ix >= g.w) continue;
            const real* xp = X + ((bi * g.h + iy) * g.w + ix) * g.m;
            const real* wp = W + (int64_t(ky) * g.k + kx) * g.m * g.n;
            for (int64_t ci = 0; ci < g.m; ++ci) {
              real xi = xp[ci];
              const real* wr = wp + ci * g.n;
              for (int64_t co = 0; co < g.n; ++co) acc[co] += xi * wr[co];
            }
          }
        }
        std::copy(acc.begin(), acc.end(), Y + ((bi * g.out_h + oy) * g.out_w + ox) * g.n);
      }
    }
  });

  if (want_grad({&x, &kernels, &bias})) {
    y.set_requires_grad(true);
    Tensor xc = x, wc = kernels, bc = bias, yc = y;
    Tape::current()->record(y, [xc, wc, bc, yc, g]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      const real* X = xc.data();
      const real* W = wc.data();
      if (xc.requires_grad()) {
        real* dX = xc.grad_data();
        parallel_for(g.b, [&](int64_t b0, int64_t b1) {
          for (int64_t bi = b0; bi < b1; ++bi)
            for (int64_t oy = 0; oy < g.out_h; ++oy)
              for (int64_t ox = 0; ox < g.out_w; ++ox) {
                const real* dyp = dY + ((bi * g.out_h + oy) * g.out_w + ox) * g.n;
                for (int ky = 0; ky < g.k; ++ky) {
                  int64_t iy = oy * g.stride - g.pad_top + int64_t(ky) * g.dilation;
                  if (iy < 0 || iy >= g.h) continue;
                  for (int kx = 0; kx < g.k; ++kx) {
                    int64_t ix = ox * g.stride - g.pad_left + int64_t(kx) * g.dilation;
                    if (ix < 0 || ix >= g.w) continue;
                    real* dxp = dX + ((bi * g.h + iy) * g.w + ix) * g.m;
                    const real* wp = W + (int64_t(ky) * g.k + kx) * g.m * g.n;
                    for (int64_t ci = 0; ci < g.m; ++ci) {
                      const real* wr = wp + ci * g.n;
                      real s = 0;
                      for (int64_t co = 0; co < g.n; ++co) s += wr[co] * dyp[co];
                      dxp[ci] += s;
                    }
                  }
                }
              }
        });
      }
      if (wc.requires_grad()) {
        real* dW = wc.grad_data();
        parallel_for(int64_t(g.k) * g.k, [&](int64_t t0, int64_t t1) {
          for (int64_t tap = t0; tap < t1; ++tap) {
            int ky = static_cast<int>(tap / g.k), kx = static_cast<int>(tap % g.k);
            real* dwp = dW + tap * g.m * g.n;
            for (int64_t bi = 0; bi < g.b; ++bi)
              for (int64_t oy = 0; oy < g.out_h; ++oy) {
                int64_t iy = oy * g.stride - g.pad_top + int64_t(ky) * g.dilation;
                if (iy < 0 || iy >= g.h) continue;
                for (int64_t ox = 0; ox < g.out_w; ++ox) {
                  int64_t ix = ox * g.stride - g.pad_left + int64_t(kx) * g.dilation;
                  if (ix < 0 || ix >= g.w) continue;
                  const real* xp = X + ((bi * g.h + iy) * g.w + ix) * g.m;
                  const real* dyp = dY + ((bi * g.out_h + oy) * g.out_w + ox) * g.n;
                  for (int64_t ci = 0; ci < g.m; ++ci) {
                    real xi = xp[ci];
                    real* dwr = dwp + ci * g.n;
                    for (int64_t co = 0; co < g.n; ++co) dwr[co] += xi * dyp[co];
                  }
                }
              }
          }
        });
      }
      if (bc.defined() && bc.requires_grad()) {
        real* dB = bc.grad_data();
        int64_t pixels = g.b * g.out_h * g.out_w;
        for (int64_t p = 0; p < pixels; ++p) {
          const real* dyp = dY + p * g.n;
          for (int64_t co = 0; co < g.n; ++co) dB[co] += dyp[co];
        }
      }
    });
  }
  return y;
}

Tensor pointwise(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  check_shape(kernels.rank() == 4 && kernels.dim(0) == 1 && kernels.dim(1) == 1,
              "pointwise: kernels must be 1,1,m,n, got " + shape_str(kernels.shape()));
  return conv2d(x, kernels, bias, 1, 1, Padding::same);
}

Tensor transposed_conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride) {
  check_image(x, "transposed_conv2d");
  check_shape(kernels.rank() == 4 && kernels.dim(0) == kernels.dim(1),
              "transposed_conv2d: kernels must be k,k,in,out with square k");
  check_shape(kernels.dim(2) == x.dim(3),
              "transposed_conv2d: channel axis mismatch, input has " + std::to_string(x.dim(3)) +
                  " channels but kernels expect " + std::to_string(kernels.dim(2)));
  check(stride >= 1, "transposed_conv2d: stride must be >= 1");
  const int64_t b = x.dim(0), h = x.dim(1), w = x.dim(2), m = x.dim(3);
  const int k = static_cast<int>(kernels.dim(0));
  const int64_t n = kernels.dim(3);
  if (bias.defined())
    check_shape(bias.rank() == 1 && bias.dim(0) == n,
                "transposed_conv2d: bias extent must equal output channels " + std::to_string(n));
  const int64_t out_h = h * stride, out_w = w * stride;
  // Cropping convention: excess e = k - stride; floor(e/2) trimmed at top/left.
  const int64_t off = k - 1 - floor_div(k - stride, 2);

  Tensor y({b, out_h, out_w, n});
  const real* X = x.data();
  const real* W = kernels.data();
  const real* B = bias.defined() ? bias.data() : nullptr;
  real* Y = y.data();

  parallel_for(b * out_h, [&](int64_t begin, int64_t end) {
    std::vector<real> acc(n);
    for (int64_t row = begin; row < end; ++row) {
      int64_t bi = row / out_h, oy = row % out_h;
      for (int64_t ox = 0; ox < out_w; ++ox) {
        if (B)
          std::copy(B, B + n, acc.begin());
        else
          std::fill(acc.begin(), acc.end(), real(0));
        for (int ky = 0; ky < k; ++ky) {
          int64_t iy;
          if (!deconv_src(oy, ky, off, stride, h, &iy)) continue;
          for (int kx = 0; kx < k; ++kx) {
            int64_t ix;
            if (!deconv_src(ox, kx, off, stride, w, &ix)) continue;
            const real* xp = X + ((bi * h + iy) * w + ix) * m;
            const real* wp = W + (int64_t(ky) * k + kx) * m * n;
            for (int64_t ci = 0; ci < m; ++ci) {
              real xi = xp[ci];
              const real* wr = wp + ci * n;
              for (int64_t co = 0; co < n; ++co) acc[co] += xi * wr[co];
            }
          }
        }
        std::copy(acc.begin(), acc.end(), Y + ((bi * out_h + oy) * out_w + ox) * n);
      }
    }
  });

  if (want_grad({&x, &kernels, &bias})) {
    y.set_requires_grad(true);
    Tensor xc = x, wc = kernels, bc = bias, yc = y;
    Tape::current()->record(
        y, [xc, wc, bc, yc, b, h, w, m, n, k, stride, out_h, out_w, off]() mutable {
          if (!yc.has_grad()) return;
          const real* dY = yc.grad_data();
          const real* X = xc.data();
          const real* W = wc.data();
          if (xc.requires_grad()) {
            real* dX = xc.grad_data();
            parallel_for(b, [&](int64_t b0, int64_t b1) {
              for (int64_t bi = b0; bi < b1; ++bi)
                for (int64_t oy = 0; oy < out_h; ++oy)
                  for (int64_t ox = 0; ox < out_w; ++ox) {
                    const real* dyp = dY + ((bi * out_h + oy) * out_w + ox) * n;
                    for (int ky = 0; ky < k; ++ky) {
                      int64_t iy;
                      if (!deconv_src(oy, ky, off, stride, h, &iy)) continue;
                      for (int kx = 0; kx < k; ++kx) {
                        int64_t ix;
                        if (!deconv_src(ox, kx, off, stride, w, &ix)) continue;
                        real* dxp = dX + ((bi * h + iy) * w + ix) * m;
                        const real* wp = W + (int64_t(ky) * k + kx) * m * n;
                        for (int64_t ci = 0; ci < m; ++ci) {
                          const real* wr = wp + ci * n;
                          real s = 0;
                          for (int64_t co = 0; co < n; ++co) s += wr[co] * dyp[co];
                          dxp[ci] += s;
                        }
                      }
                    }
                  }
            });
          }
          if (wc.requires_grad()) {
            real* dW = wc.grad_data();
            parallel_for(int64_t(k) * k, [&](int64_t t0, int64_t t1) {
              for (int64_t tap = t0; tap < t1; ++tap) {
                int ky = static_cast<int>(tap / k), kx = static_cast<int>(tap % k);
                real* dwp = dW + tap * m * n;
                for (int64_t bi = 0; bi < b; ++bi)
                  for (int64_t oy = 0; oy < out_h; ++oy) {
                    int64_t iy;
                    if (!deconv_src(oy, ky, off, stride, h, &iy)) continue;
                    for (int64_t ox = 0; ox < out_w; ++ox) {
                      int64_t ix;
                      if (!deconv_src(ox, kx, off, stride, w, &ix)) continue;
                      const real* xp = X + ((bi * h + iy) * w + ix) * m;
                      const real* dyp = dY + ((bi * out_h + oy) * out_w + ox) * n;
                      for (int64_t ci = 0; ci < m; ++ci) {
                        real xi = xp[ci];
                        real* dwr = dwp + ci * n;
                        for (int64_t co = 0; co < n; ++co) dwr[co] += xi * dyp[co];
                      }
                    }
                  }
              }
            });
          }
          if (bc.defined() && bc.requires_grad()) {
            real* dB = bc.grad_data();
            int64_t pixels = b * out_h * out_w;
            for (int64_t p = 0; p < pixels; ++p) {
              const real* dyp = dY + p * n;
              for (int64_t co = 0; co < n; ++co) dB[co] += dyp[co];
            }
          }
        });
  }
  return y;
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernels, int dilation_rate) {
  check_image(x, "depthwise_conv2d");
  check_shape(kernels.rank() == 3 && kernels.dim(0) == kernels.dim(1),
              "depthwise_conv2d: kernels must be k,k,m, got " + shape_str(kernels.shape()));
  check_shape(kernels.dim(2) == x.dim(3),
              "depthwise_conv2d: channel axis mismatch, input has " + std::to_string(x.dim(3)) +
                  " channels but kernels expect " + std::to_string(kernels.dim(2)));
  check(dilation_rate >= 1, "depthwise_conv2d: dilation_rate must be >= 1");
  const int64_t b = x.dim(0), h = x.dim(1), w = x.dim(2), m = x.dim(3);
  const int k = static_cast<int>(kernels.dim(0));
  const int64_t ek = int64_t(k - 1) * dilation_rate + 1;
  const int64_t pad = (ek - 1) / 2;

  Tensor y({b, h, w, m});
  const real* X = x.data();
  const real* W = kernels.data();
  real* Y = y.data();

  parallel_for(b * h, [&](int64_t begin, int64_t end) {
    std::vector<real> acc(m);
    for (int64_t row = begin; row < end; ++row) {
      int64_t bi = row / h, oy = row % h;
      for (int64_t ox = 0; ox < w; ++ox) {
        std::fill(acc.begin(), acc.end(), real(0));
        for (int ky = 0; ky < k; ++ky) {
          int64_t iy = oy - pad + int64_t(ky) * dilation_rate;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            int64_t ix = ox - pad + int64_t(kx) * dilation_rate;
            if (ix < 0 || ix >= w) continue;
            const real* xp = X + ((bi * h + iy) * w + ix) * m;
            const real* wp = W + (int64_t(ky) * k + kx) * m;
            for (int64_t ci = 0; ci < m; ++ci) acc[ci] += xp[ci] * wp[ci];
          }
        }
        std::copy(acc.begin(), acc.end(), Y + ((bi * h + oy) * w + ox) * m);
      }
    }
  });

  if (want_grad({&x, &kernels})) {
    y.set_requires_grad(true);
    Tensor xc = x, wc = kernels, yc = y;
    int d = dilation_rate;
    Tape::current()->record(y, [xc, wc, yc, b, h, w, m, k, d, pad]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      const real* X = xc.data();
      const real* W = wc.data();
      if (xc.requires_grad()) {
        real* dX = xc.grad_data();
        parallel_for(b, [&](int64_t b0, int64_t b1) {
          for (int64_t bi = b0; bi < b1; ++bi)
            for (int64_t oy = 0; oy < h; ++oy)
              for (int64_t ox = 0; ox < w; ++ox) {
                const real* dyp = dY + ((bi * h + oy) * w + ox) * m;
                for (int ky = 0; ky < k; ++ky) {
                  int64_t iy = oy - pad + int64_t(ky) * d;
                  if (iy < 0 || iy >= h) continue;
                  for (int kx = 0; kx < k; ++kx) {
                    int64_t ix = ox - pad + int64_t(kx) * d;
                    if (ix < 0 || ix >= w) continue;
                    real* dxp = dX + ((bi * h + iy) * w + ix) * m;
                    const real* wp = W + (int64_t(ky) * k + kx) * m;
                    for (int64_t ci = 0; ci < m; ++ci) dxp[ci] += wp[ci] * dyp[ci];
                  }
                }
              }
        });
      }
      if (wc.requires_grad()) {
        real* dW = wc.grad_data();
        parallel_for(int64_t(k) * k, [&](int64_t t0, int64_t t1) {
          for (int64_t tap = t0; tap < t1; ++tap) {
            int ky = static_cast<int>(tap / k), kx = static_cast<int>(tap % k);
            real* dwp = dW + tap * m;
            for (int64_t bi = 0; bi < b; ++bi)
              for (int64_t oy = 0; oy < h; ++oy) {
                int64_t iy = oy - pad + int64_t(ky) * d;
                if (iy < 0 || iy >= h) continue;
                for (int64_t ox = 0; ox < w; ++ox) {
                  int64_t ix = ox - pad + int64_t(kx) * d;
                  if (ix < 0 || ix >= w) continue;
                  const real* xp = X + ((bi * h + iy) * w + ix) * m;
                  const real* dyp = dY + ((bi * h + oy) * w + ox) * m;
                  for (int64_t ci = 0; ci < m; ++ci) dwp[ci] += xp[ci] * dyp[ci];
                }
              }
          }
        });
      }
    });
  }
  return y;
}

Tensor shared_conv2d(const Tensor& x, const Tensor& filter) {
  check_image(x, "shared_conv2d");
  check_shape(filter.rank() == 2 && filter.dim(0) == filter.dim(1),
              "shared_conv2d: filter must be a single square K,K, got " +
                  shape_str(filter.shape()));
  const int64_t b = x.dim(0), h = x.dim(1), w = x.dim(2), m = x.dim(3);
  const int k = static_cast<int>(filter.dim(0));
  const int64_t pad = (k - 1) / 2;

  Tensor y({b, h, w, m});
  const real* X = x.data();
  const real* F = filter.data();
  real* Y = y.data();

  parallel_for(b * h, [&](int64_t begin, int64_t end) {
    std::vector<real> acc(m);
    for (int64_t row = begin; row < end; ++row) {
      int64_t bi = row / h, oy = row % h;
      for (int64_t ox = 0; ox < w; ++ox) {
        std::fill(acc.begin(), acc.end(), real(0));
        for (int ky = 0; ky < k; ++ky) {
          int64_t iy = oy - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            int64_t ix = ox - pad + kx;
            if (ix < 0 || ix >= w) continue;
            real f = F[ky * k + kx];
            const real* xp = X + ((bi * h + iy) * w + ix) * m;
            for (int64_t ci = 0; ci < m; ++ci) acc[ci] += f * xp[ci];
          }
        }
        std::copy(acc.begin(), acc.end(), Y + ((bi * h + oy) * w + ox) * m);
      }
    }
  });

  if (want_grad({&x, &filter})) {
    y.set_requires_grad(true);
    Tensor xc = x, fc = filter, yc = y;
    Tape::current()->record(y, [xc, fc, yc, b, h, w, m, k, pad]() mutable {
      if (!yc.has_grad()) return;
      const real* dY = yc.grad_data();
      const real* X = xc.data();
      const real* F = fc.data();
      if (xc.requires_grad()) {
        real* dX = xc.grad_data();
        parallel_for(b, [&](int64_t b0, int64_t b1) {
          for (int64_t bi = b0; bi < b1; ++bi)
            for (int64_t oy = 0; oy < h; ++oy)
              for (int64_t ox = 0; ox < w; ++ox) {
                const real* dyp = dY + ((bi * h + oy) * w + ox) * m;
                for (int ky = 0; ky < k; ++ky) {
                  int64_t iy = oy - pad + ky;
                  if (iy < 0 || iy >= h) continue;
                  for (int kx = 0; kx < k; ++kx) {
                    int64_t ix = ox - pad + kx;
                    if (ix < 0 || ix >= w) continue;
                    real f = F[ky * k + kx];
                    real* dxp = dX + ((bi * h + iy) * w + ix) * m;
                    for (int64_t ci = 0; ci < m; ++ci) dxp[ci] += f * dyp[ci];
                  }
                }
              }
        });
      }
      if (fc.requires_grad()) {
        real* dF = fc.grad_data();
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            real s = 0;
            for (int64_t bi = 0; bi < b; ++bi)
              for (int64_t oy = 0; oy < h; ++oy) {
                int64_t iy = oy - pad + ky;
                if (iy < 0 || iy >= h) continue;
                for (int64_t ox = 0; ox < w; ++ox) {
                  int64_t ix = ox - pad + kx;
                  if (ix < 0 || ix >= w) continue;
                  const real* xp = X + ((bi * h + iy) * w + ix) * m;
                  const real* dyp = dY + ((bi * h + oy) * w + ox) * m;
                  for (int64_t ci = 0; ci < m; ++ci) s += xp[ci] * dyp[ci];
                }
              }
            dF[ky * k + kx] += s;
          }
      }
    });
  }
  return y;
}

}  // namespace cdfm3sf
