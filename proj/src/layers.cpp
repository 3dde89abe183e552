#include "cdfm3sf/layers.hpp"

#include <cmath>

namespace cdfm3sf {

void he_uniform_fill(Tensor& t, int64_t fan_in, std::mt19937_64& rng) {
  real limit = std::sqrt(real(6) / real(fan_in));
  std::uniform_real_distribution<real> dist(-limit, limit);
  real* p = t.data();
  for (int64_t i = 0; i < t.size(); ++i) p[i] = dist(rng);
}

ConvUnit ConvUnit::create(const LayerSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  ConvUnit u;
  u.spec = spec;
  const int64_t k = spec.kernel;
  u.kernel = Tensor({k, k, spec.in_channels, spec.out_channels}, 0, true);
  he_uniform_fill(u.kernel, k * k * spec.in_channels, rng);
  if (spec.has_bias) u.bias = Tensor({spec.out_channels}, 0, true);
  return u;
}

Tensor ConvUnit::forward(const Tensor& x) const {
  return conv2d(x, kernel, bias, 1, spec.dilation_rate, Padding::same);
}

void ConvUnit::collect(const std::string& prefix, std::vector<ParamEntry>& out) const {
  out.push_back({prefix + ".kernel", kernel, true});
  if (bias.defined()) out.push_back({prefix + ".bias", bias, true});
}

DeconvUnit DeconvUnit::create(const LayerSpec& spec, int stride, std::mt19937_64& rng) {
  spec.validate();
  check(stride == 2 || stride == 3, "Deconv stride must be 2 or 3 in this model");
  DeconvUnit u;
  u.spec = spec;
  u.stride = stride;
  const int64_t k = spec.kernel;
  u.kernel = Tensor({k, k, spec.in_channels, spec.out_channels}, 0, true);
  he_uniform_fill(u.kernel, k * k * spec.in_channels, rng);
  if (spec.has_bias) u.bias = Tensor({spec.out_channels}, 0, true);
  return u;
}

Tensor DeconvUnit::forward(const Tensor& x) const {
  return transposed_conv2d(x, kernel, bias, stride);
}

void DeconvUnit::collect(const std::string& prefix, std::vector<ParamEntry>& out) const {
  out.push_back({prefix + ".kernel", kernel, true});
  if (bias.defined()) out.push_back({prefix + ".bias", bias, true});
}

BatchNormUnit BatchNormUnit::create(int64_t channels) {
  BatchNormUnit u;
  u.spec = LayerSpec::batch_norm(channels);
  u.gamma = Tensor({channels}, 1, true);
  u.beta = Tensor({channels}, 0, true);
  u.running_mean = Tensor({channels}, 0, false);
  u.running_var = Tensor({channels}, 1, false);
  return u;
}

Tensor BatchNormUnit::forward(const Tensor& x, bool training) {
  return batch_norm(x, gamma, beta, running_mean, running_var, training);
}

void BatchNormUnit::collect(const std::string& prefix, std::vector<ParamEntry>& out) const {
  out.push_back({prefix + ".gamma", gamma, true});
  out.push_back({prefix + ".beta", beta, true});
  out.push_back({prefix + ".running_mean", running_mean, false});
  out.push_back({prefix + ".running_var", running_var, false});
}

DscUnit DscUnit::create(const LayerSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  DscUnit u;
  u.spec = spec;
  const int64_t k = spec.kernel;
  u.depth = Tensor({k, k, spec.in_channels}, 0, true);
  he_uniform_fill(u.depth, k * k, rng);
  u.point = Tensor({1, 1, spec.in_channels, spec.out_channels}, 0, true);
  he_uniform_fill(u.point, spec.in_channels, rng);
  return u;
}

Tensor DscUnit::forward(const Tensor& x) const {
  return pointwise(depthwise_conv2d(x, depth), point, Tensor());
}

void DscUnit::collect(const std::string& prefix, std::vector<ParamEntry>& out) const {
  out.push_back({prefix + ".depth", depth, true});
  out.push_back({prefix + ".point", point, true});
}

MdscUnit MdscUnit::create(const LayerSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  MdscUnit u;
  u.spec = spec;
  for (int ki : spec.kernels) {
    Tensor d({int64_t(ki), int64_t(ki), spec.in_channels}, 0, true);
    he_uniform_fill(d, int64_t(ki) * ki, rng);
    u.depth.push_back(d);
  }
  const int64_t p = static_cast<int64_t>(spec.kernels.size());
  u.point = Tensor({1, 1, p * spec.in_channels, spec.out_channels}, 0, true);
  he_uniform_fill(u.point, p * spec.in_channels, rng);
  return u;
}

Tensor MdscUnit::forward(const Tensor& x) const {
  std::vector<Tensor> branches;
  branches.reserve(depth.size());
  for (const Tensor& d : depth) branches.push_back(depthwise_conv2d(x, d));
  return pointwise(concat_channels(branches), point, Tensor());
}

void MdscUnit::collect(const std::string& prefix, std::vector<ParamEntry>& out) const {
  for (size_t i = 0; i < depth.size(); ++i)
    out.push_back({prefix + ".depth" + std::to_string(spec.kernels[i]), depth[i], true});
  out.push_back({prefix + ".point", point, true});
}

SharedConvUnit SharedConvUnit::create(int K, std::mt19937_64& rng) {
  SharedConvUnit u;
  u.spec = LayerSpec::shared_conv(K);
  u.filter = Tensor({K, K}, 0, true);
  he_uniform_fill(u.filter, int64_t(K) * K, rng);
  return u;
}

Tensor SharedConvUnit::forward(const Tensor& x) const { return shared_conv2d(x, filter); }

void SharedConvUnit::collect(const std::string& prefix, std::vector<ParamEntry>& out) const {
  out.push_back({prefix + ".filter", filter, true});
}

SdrbBlock SdrbBlock::create(const LayerSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  SdrbBlock b;
  b.spec = spec;
  for (BasicLayer* l : {&b.layer1, &b.layer2}) {
    l->shared = SharedConvUnit::create(spec.shared_kernel, rng);
    l->bn_shared = BatchNormUnit::create(spec.in_channels);
    l->dilated = ConvUnit::create(
        LayerSpec::dilated_conv(spec.in_channels, spec.kernel, spec.out_channels,
                                spec.dilation_rate),
        rng);
    l->bn_dilated = BatchNormUnit::create(spec.out_channels);
  }
  return b;
}

Tensor SdrbBlock::forward(const Tensor& x, bool training) {
  Tensor u = x;
  for (BasicLayer* l : {&layer1, &layer2}) {
    u = relu(l->bn_shared.forward(l->shared.forward(u), training));
    u = relu(l->bn_dilated.forward(l->dilated.forward(u), training));
  }
  check_shape(u.dim(3) == x.dim(3),
              "sdrb_forward: residual sum needs matching channels, block output " +
                  std::to_string(u.dim(3)) + " vs input " + std::to_string(x.dim(3)));
  return add(x, u);
}

void SdrbBlock::collect(const std::string& prefix, std::vector<ParamEntry>& out) const {
  int i = 1;
  for (const BasicLayer* l : {&layer1, &layer2}) {
    std::string base = prefix + ".basic" + std::to_string(i++);
    l->shared.collect(base + ".shared", out);
    l->bn_shared.collect(base + ".bn_shared", out);
    l->dilated.collect(base + ".dilated", out);
    l->bn_dilated.collect(base + ".bn_dilated", out);
  }
}

CsUnit CsUnit::create(int64_t c, std::mt19937_64& rng) {
  CsUnit u;
  u.spec = LayerSpec::cs(c);
  u.mdsc = MdscUnit::create(LayerSpec::mdsc(2 * c, c), rng);
  u.bn = BatchNormUnit::create(c);
  return u;
}

Tensor CsUnit::fuse(const Tensor& a, const Tensor& b, bool training) {
  check_same_shape(a, b, "cs_fuse");
  check_shape(a.dim(3) == spec.out_channels,
              "cs_fuse: inputs carry " + std::to_string(a.dim(3)) + " channels, unit expects " +
                  std::to_string(spec.out_channels));
  Tensor fused = relu(bn.forward(mdsc.forward(concat_channels({a, b})), training));
  return add(add(a, b), fused);
}

void CsUnit::collect(const std::string& prefix, std::vector<ParamEntry>& out) const {
  mdsc.collect(prefix + ".mdsc", out);
  bn.collect(prefix + ".bn", out);
}

int64_t count_trainable(const std::vector<ParamEntry>& params) {
  int64_t n = 0;
  for (const auto& p : params)
    if (p.trainable) n += p.tensor.size();
  return n;
}

}  // namespace cdfm3sf
