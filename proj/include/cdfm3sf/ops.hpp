#pragma once

#include <vector>

#include "cdfm3sf/tape.hpp"
#include "cdfm3sf/tensor.hpp"

namespace cdfm3sf {

/// Differentiable tensor ops. All image tensors are b,h,w,m channels-last;
/// kernels are k,k,in,out. Every op records its backward rule on the active
/// tape (if any input requires grad); with no tape active the ops run
/// forward-only.

enum class Padding { same, valid };

// Cross-correlation with optional stride/dilation. Same-padding zero-fills so
// that stride-1 outputs keep the input extent.
Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride = 1,
              int dilation_rate = 1, Padding padding = Padding::same);

// Zero-interleave the input by `stride`, then convolve with stride 1; output
// extent is exactly stride*input. Excess floor((k-stride)/2) is trimmed at the
// top/left, the remainder at the bottom/right (negative excess pads instead).
Tensor transposed_conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride);

// conv2d fast path for 1x1 kernels, bit-identical to conv2d with k=1.
Tensor pointwise(const Tensor& x, const Tensor& kernels, const Tensor& bias);

// One k×k filter per input channel, no cross-channel mixing, no bias.
// kernels shape [k,k,m].
Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernels, int dilation_rate = 1);

// A single K×K filter applied identically to every channel; no bias.
// filter shape [K,K].
Tensor shared_conv2d(const Tensor& x, const Tensor& filter);

Tensor max_pool(const Tensor& x, int window, int stride);
Tensor avg_pool(const Tensor& x, int window, int stride);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, real c);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor sum(const Tensor& x);  // scalar

Tensor concat_channels(const std::vector<Tensor>& xs);
Tensor slice_channels(const Tensor& x, int64_t first, int64_t count);

// Train mode normalizes over b,h,w per channel with the batch statistics and
// updates the running buffers in place; infer mode uses the running buffers.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, real momentum = 0.99, real eps = 1e-3);

}  // namespace cdfm3sf
