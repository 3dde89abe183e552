#pragma once

#include <random>
#include <string>
#include <vector>

#include "cdfm3sf/layer_spec.hpp"
#include "cdfm3sf/ops.hpp"

namespace cdfm3sf {

struct ParamEntry {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

// He-uniform draw: U(-sqrt(6/fan_in), +sqrt(6/fan_in)), elements in flat order.
void he_uniform_fill(Tensor& t, int64_t fan_in, std::mt19937_64& rng);

/// Plain convolution (also covers DilatedConv and OutputConv specs).
struct ConvUnit {
  LayerSpec spec;
  Tensor kernel;  // k,k,m,n
  Tensor bias;    // n
  static ConvUnit create(const LayerSpec& spec, std::mt19937_64& rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) const;
};

struct DeconvUnit {
  LayerSpec spec;
  int stride = 2;
  Tensor kernel;  // k,k,m,n
  Tensor bias;    // n
  static DeconvUnit create(const LayerSpec& spec, int stride, std::mt19937_64& rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) const;
};

struct BatchNormUnit {
  LayerSpec spec;
  Tensor gamma, beta;
  Tensor running_mean, running_var;  // non-trainable
  static BatchNormUnit create(int64_t channels);
  Tensor forward(const Tensor& x, bool training);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) const;
};

/// Depth-wise separable convolution: one k×k filter per input channel, then a
/// 1×1 pointwise mix m -> n. No bias (the count formula has none).
struct DscUnit {
  LayerSpec spec;
  Tensor depth;  // k,k,m
  Tensor point;  // 1,1,m,n
  static DscUnit create(const LayerSpec& spec, std::mt19937_64& rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) const;
};

/// Mixed depth-wise separable convolution: p depth stages with distinct
/// kernel sizes, branch outputs concatenated in ascending kernel order, one
/// pointwise stage p*m -> n.
struct MdscUnit {
  LayerSpec spec;
  std::vector<Tensor> depth;  // per branch: ki,ki,m
  Tensor point;               // 1,1,p*m,n
  static MdscUnit create(const LayerSpec& spec, std::mt19937_64& rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) const;
};

struct SharedConvUnit {
  LayerSpec spec;
  Tensor filter;  // K,K
  static SharedConvUnit create(int K, std::mt19937_64& rng);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) const;
};

/// Shared-and-dilated residual block: two basic layers, each
/// shared_conv -> BN -> ReLU -> dilated_conv -> BN -> ReLU, with the input
/// added back after the second basic layer (no activation after the sum).
struct SdrbBlock {
  LayerSpec spec;
  struct BasicLayer {
    SharedConvUnit shared;
    BatchNormUnit bn_shared;
    ConvUnit dilated;
    BatchNormUnit bn_dilated;
  };
  BasicLayer layer1, layer2;
  static SdrbBlock create(const LayerSpec& spec, std::mt19937_64& rng);
  Tensor forward(const Tensor& x, bool training);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) const;
};

/// Concatenation-and-Sum: a + b + MDSC(concat(a, b)), the MDSC output passing
/// batch norm + ReLU first. Both inputs and the result carry c channels.
struct CsUnit {
  LayerSpec spec;
  MdscUnit mdsc;  // 2c -> c
  BatchNormUnit bn;
  static CsUnit create(int64_t c, std::mt19937_64& rng);
  Tensor fuse(const Tensor& a, const Tensor& b, bool training);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) const;
};

int64_t count_trainable(const std::vector<ParamEntry>& params);

}  // namespace cdfm3sf
