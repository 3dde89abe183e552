// Independent brute-force oracles for the tensor engine. Everything here is a
// plain loop nest over explicit indices, deliberately sharing no code with
// the library's operator implementations.
#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "cdfm3sf/tensor.hpp"

namespace oracle {

using cdfm3sf::Tensor;
using cdfm3sf::real;

inline real at(const Tensor& t, int64_t b, int64_t y, int64_t x, int64_t c) {
  const auto& s = t.shape();
  return t.data()[((b * s[1] + y) * s[2] + x) * s[3] + c];
}

inline Tensor random_tensor(cdfm3sf::Shape shape, uint64_t seed, real lo = -1, real hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<real> d(lo, hi);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = d(rng);
  return t;
}

// same-padding cross-correlation, stride/dilation, bias optional
inline Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias, int stride = 1,
                     int dil = 1, bool same = true) {
  int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), M = x.dim(3);
  int64_t K = k.dim(0), N = k.dim(3);
  int64_t ek = (K - 1) * dil + 1;
  int64_t oh, ow, pt, pl;
  if (same) {
    oh = (H + stride - 1) / stride;
    ow = (W + stride - 1) / stride;
    pt = std::max<int64_t>((oh - 1) * stride + ek - H, 0) / 2;
    pl = std::max<int64_t>((ow - 1) * stride + ek - W, 0) / 2;
  } else {
    oh = (H - ek) / stride + 1;
    ow = (W - ek) / stride + 1;
    pt = pl = 0;
  }
  Tensor y({B, oh, ow, N});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t n = 0; n < N; ++n)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          real acc = bias.defined() ? bias.data()[n] : real(0);
          for (int64_t m = 0; m < M; ++m)
            for (int64_t ky = 0; ky < K; ++ky)
              for (int64_t kx = 0; kx < K; ++kx) {
                int64_t iy = oy * stride - pt + ky * dil;
                int64_t ix = ox * stride - pl + kx * dil;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += at(x, b, iy, ix, m) * k.data()[((ky * K + kx) * M + m) * N + n];
              }
          y.data()[((b * oh + oy) * ow + ox) * N + n] = acc;
        }
  return y;
}

// per-channel (grouped, group size 1) convolution, same padding
inline Tensor depthwise(const Tensor& x, const Tensor& k, int dil = 1) {
  int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), M = x.dim(3);
  int64_t K = k.dim(0);
  int64_t pad = ((K - 1) * dil) / 2;
  Tensor y({B, H, W, M});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t m = 0; m < M; ++m)
      for (int64_t oy = 0; oy < H; ++oy)
        for (int64_t ox = 0; ox < W; ++ox) {
          real acc = 0;
          for (int64_t ky = 0; ky < K; ++ky)
            for (int64_t kx = 0; kx < K; ++kx) {
              int64_t iy = oy - pad + ky * dil, ix = ox - pad + kx * dil;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              acc += at(x, b, iy, ix, m) * k.data()[(ky * K + kx) * M + m];
            }
          y.data()[((b * H + oy) * W + ox) * M + m] = acc;
        }
  return y;
}

inline Tensor max_pool(const Tensor& x, int window, int stride) {
  int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), M = x.dim(3);
  int64_t oh = (H - window) / stride + 1, ow = (W - window) / stride + 1;
  Tensor y({B, oh, ow, M});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t m = 0; m < M; ++m)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          real best = at(x, b, oy * stride, ox * stride, m);
          for (int64_t ky = 0; ky < window; ++ky)
            for (int64_t kx = 0; kx < window; ++kx)
              best = std::max(best, at(x, b, oy * stride + ky, ox * stride + kx, m));
          y.data()[((b * oh + oy) * ow + ox) * M + m] = best;
        }
  return y;
}

inline Tensor avg_pool(const Tensor& x, int window, int stride) {
  int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), M = x.dim(3);
  int64_t oh = (H - window) / stride + 1, ow = (W - window) / stride + 1;
  Tensor y({B, oh, ow, M});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t m = 0; m < M; ++m)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          real s = 0;
          for (int64_t ky = 0; ky < window; ++ky)
            for (int64_t kx = 0; kx < window; ++kx)
              s += at(x, b, oy * stride + ky, ox * stride + kx, m);
          y.data()[((b * oh + oy) * ow + ox) * M + m] = s / (real(window) * window);
        }
  return y;
}

// The two-step deconvolution definition taken literally: materialize the
// zero-interleaved grid, run a stride-1 full convolution over it, then apply
// the fixed crop rule (excess floor((k-s)/2) off the top/left).
inline Tensor transposed_conv2d(const Tensor& x, const Tensor& k, const Tensor& bias,
                                int stride) {
  int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), M = x.dim(3);
  int64_t K = k.dim(0), N = k.dim(3);
  int64_t gh = (H - 1) * stride + 1, gw = (W - 1) * stride + 1;
  std::vector<real> grid(B * gh * gw * M, 0);
  for (int64_t b = 0; b < B; ++b)
    for (int64_t y = 0; y < H; ++y)
      for (int64_t xx = 0; xx < W; ++xx)
        for (int64_t m = 0; m < M; ++m)
          grid[((b * gh + y * stride) * gw + xx * stride) * M + m] = at(x, b, y, xx, m);

  int64_t fh = gh + K - 1, fw = gw + K - 1;  // full conv output extent
  std::vector<real> full(B * fh * fw * N, 0);
  for (int64_t b = 0; b < B; ++b)
    for (int64_t n = 0; n < N; ++n)
      for (int64_t oy = 0; oy < fh; ++oy)
        for (int64_t ox = 0; ox < fw; ++ox) {
          real acc = 0;
          for (int64_t m = 0; m < M; ++m)
            for (int64_t ky = 0; ky < K; ++ky)
              for (int64_t kx = 0; kx < K; ++kx) {
                int64_t iy = oy - (K - 1) + ky, ix = ox - (K - 1) + kx;
                if (iy < 0 || iy >= gh || ix < 0 || ix >= gw) continue;
                acc += grid[((b * gh + iy) * gw + ix) * M + m] *
                       k.data()[((ky * K + kx) * M + m) * N + n];
              }
          full[((b * fh + oy) * fw + ox) * N + n] = acc;
        }

  // crop (or pad, for k < stride) down to stride * extent
  int64_t oh = H * stride, ow = W * stride;
  int64_t crop = cdfm3sf::floor_div(K - stride, 2);
  Tensor y({B, oh, ow, N});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox)
        for (int64_t n = 0; n < N; ++n) {
          int64_t sy = oy + crop, sx = ox + crop;
          real v = (sy < 0 || sy >= fh || sx < 0 || sx >= fw)
                       ? real(0)
                       : full[((b * fh + sy) * fw + sx) * N + n];
          y.data()[((b * oh + oy) * ow + ox) * N + n] =
              v + (bias.defined() ? bias.data()[n] : real(0));
        }
  return y;
}

inline real max_abs_diff(const Tensor& a, const Tensor& b) {
  real worst = 0;
  for (int64_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (int64_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

}  // namespace oracle
