#include "cdfm3sf/model.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace cdfm3sf {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::full13: return "full13";
    case Variant::vnir_swir10: return "vnir_swir10";
    case Variant::vnir4: return "vnir4";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "full13") return Variant::full13;
  if (name == "vnir_swir10") return Variant::vnir_swir10;
  if (name == "vnir4") return Variant::vnir4;
  throw ValueError("unknown variant '" + name + "' (full13 | vnir_swir10 | vnir4)");
}

void ModelConfig::validate() const {
  check(width >= 1, "model config: width must be positive");
  check(deconv_width >= 1, "model config: deconv_width must be positive");
}

Model Model::build(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Model m;
  m.cfg_ = cfg;
  const int64_t w = cfg.width;

  m.top_conv_ = ConvUnit::create(LayerSpec::conv(ModelConfig::kVnirBands, 3, w), rng);
  m.top_mdsc_ = MdscUnit::create(LayerSpec::mdsc(w, w), rng);
  m.top_mdsc_bn_ = BatchNormUnit::create(w);
  if (cfg.has_middle_branch()) {
    m.mid_conv_ = ConvUnit::create(LayerSpec::conv(ModelConfig::kVreSwirBands, 3, w), rng);
    m.mid_cs_ = CsUnit::create(w, rng);
  }
  if (cfg.has_bottom_branch()) {
    m.bot_conv_ = ConvUnit::create(LayerSpec::conv(ModelConfig::kCaWvCirBands, 3, w), rng);
    m.bot_cs_ = CsUnit::create(w, rng);
  }
  for (int i = 0; i < 6; ++i)
    m.sdrb_.push_back(
        SdrbBlock::create(LayerSpec::sdrb(w, w, 3, ModelConfig::kSdrbRates[i]), rng));

  const bool skip[3] = {cfg.has_bottom_branch(), cfg.has_middle_branch(), true};
  for (int lvl = 0; lvl < 3; ++lvl) {
    DecoderLevel& d = m.dec_[lvl];
    d.has_skip = skip[lvl];
    d.deconv = DeconvUnit::create(LayerSpec::deconv(w, 4, cfg.deconv_width),
                                  ModelConfig::kDeconvStrides[lvl], rng);
    int64_t dsc_in = cfg.deconv_width + (d.has_skip ? w : 0);
    d.dsc = DscUnit::create(LayerSpec::dsc(dsc_in, 3, w), rng);
    d.bn = BatchNormUnit::create(w);
    d.out = ConvUnit::create(LayerSpec::output_conv(w, 3), rng);
  }
  return m;
}

void Model::validate_input(const PatchBatch& in) const {
  check_shape(in.vnir.defined() && in.vnir.rank() == 4 &&
                  in.vnir.dim(3) == ModelConfig::kVnirBands,
              "forward: vnir input must be b,h,w,4");
  const int64_t H = in.vnir.dim(1), W = in.vnir.dim(2);
  check_shape(H % 12 == 0 && W % 12 == 0,
              "forward: 10 m extent " + std::to_string(H) + "x" + std::to_string(W) +
                  " must be a multiple of 12 (pool plan 2*3*2)");
  if (cfg_.has_middle_branch()) {
    check_shape(in.vre_swir.defined() && in.vre_swir.rank() == 4 &&
                    in.vre_swir.dim(3) == ModelConfig::kVreSwirBands,
                "forward: vre_swir input must be b,h,w,6");
    check_shape(in.vre_swir.dim(1) * 2 == H && in.vre_swir.dim(2) * 2 == W,
                "forward: vre_swir extent must be exactly half the 10 m grid");
    check_shape(in.vre_swir.dim(0) == in.vnir.dim(0), "forward: batch mismatch across stacks");
  }
  if (cfg_.has_bottom_branch()) {
    check_shape(in.ca_wv_cir.defined() && in.ca_wv_cir.rank() == 4 &&
                    in.ca_wv_cir.dim(3) == ModelConfig::kCaWvCirBands,
                "forward: ca_wv_cir input must be b,h,w,3");
    check_shape(in.ca_wv_cir.dim(1) * 6 == H && in.ca_wv_cir.dim(2) * 6 == W,
                "forward: ca_wv_cir extent must be exactly one sixth of the 10 m grid");
    check_shape(in.ca_wv_cir.dim(0) == in.vnir.dim(0), "forward: batch mismatch across stacks");
  }
}

MaskPyramid Model::forward(const PatchBatch& in, bool training) {
  validate_input(in);

  // top branch, 10 m
  Tensor t1 = relu(top_conv_.forward(in.vnir));
  Tensor tm = relu(top_mdsc_bn_.forward(top_mdsc_.forward(t1), training));
  Tensor top_res = add(t1, tm);  // decoder skip, 10 m
  Tensor u = max_pool(top_res, 2, 2);

  Tensor mid_skip, bot_skip;
  if (cfg_.has_middle_branch()) {
    Tensor m1 = relu(mid_conv_.forward(in.vre_swir));
    mid_skip = mid_cs_.fuse(u, m1, training);
    u = max_pool(mid_skip, 3, 3);
  } else {
    u = max_pool(u, 3, 3);
  }
  if (cfg_.has_bottom_branch()) {
    Tensor b1 = relu(bot_conv_.forward(in.ca_wv_cir));
    bot_skip = bot_cs_.fuse(u, b1, training);
    u = max_pool(bot_skip, 2, 2);
  } else {
    u = max_pool(u, 2, 2);
  }

  for (SdrbBlock& blk : sdrb_) u = blk.forward(u, training);

  const Tensor skips[3] = {bot_skip, mid_skip, top_res};
  MaskPyramid out;
  Tensor* masks[3] = {&out.bottom, &out.middle, &out.top};
  for (int lvl = 0; lvl < 3; ++lvl) {
    DecoderLevel& d = dec_[lvl];
    Tensor up = relu(d.deconv.forward(u));
    Tensor cat = d.has_skip ? concat_channels({up, skips[lvl]}) : up;
    u = relu(d.bn.forward(d.dsc.forward(cat), training));
    *masks[lvl] = sigmoid(d.out.forward(u));
  }
  return out;
}

std::vector<ParamEntry> Model::parameters() {
  return static_cast<const Model*>(this)->parameters();
}

std::vector<ParamEntry> Model::parameters() const {
  std::vector<ParamEntry> out;
  top_conv_.collect("enc.top.conv", out);
  top_mdsc_.collect("enc.top.mdsc", out);
  top_mdsc_bn_.collect("enc.top.mdsc_bn", out);
  if (cfg_.has_middle_branch()) {
    mid_conv_.collect("enc.mid.conv", out);
    mid_cs_.collect("enc.mid.cs", out);
  }
  if (cfg_.has_bottom_branch()) {
    bot_conv_.collect("enc.bot.conv", out);
    bot_cs_.collect("enc.bot.cs", out);
  }
  for (size_t i = 0; i < sdrb_.size(); ++i)
    sdrb_[i].collect("neck.sdrb" + std::to_string(i + 1), out);
  const char* lvl_name[3] = {"bottom", "middle", "top"};
  for (int lvl = 0; lvl < 3; ++lvl) {
    std::string base = std::string("dec.") + lvl_name[lvl];
    dec_[lvl].deconv.collect(base + ".deconv", out);
    dec_[lvl].dsc.collect(base + ".dsc", out);
    dec_[lvl].bn.collect(base + ".dsc_bn", out);
    dec_[lvl].out.collect(base + ".out", out);
  }
  return out;
}

std::vector<std::pair<std::string, LayerSpec>> Model::layer_specs() const {
  std::vector<std::pair<std::string, LayerSpec>> out;
  out.emplace_back("enc.top.conv", top_conv_.spec);
  out.emplace_back("enc.top.mdsc", top_mdsc_.spec);
  out.emplace_back("enc.top.mdsc_bn", top_mdsc_bn_.spec);
  if (cfg_.has_middle_branch()) {
    out.emplace_back("enc.mid.conv", mid_conv_.spec);
    out.emplace_back("enc.mid.cs", mid_cs_.spec);
  }
  if (cfg_.has_bottom_branch()) {
    out.emplace_back("enc.bot.conv", bot_conv_.spec);
    out.emplace_back("enc.bot.cs", bot_cs_.spec);
  }
  for (size_t i = 0; i < sdrb_.size(); ++i)
    out.emplace_back("neck.sdrb" + std::to_string(i + 1), sdrb_[i].spec);
  const char* lvl_name[3] = {"bottom", "middle", "top"};
  for (int lvl = 0; lvl < 3; ++lvl) {
    std::string base = std::string("dec.") + lvl_name[lvl];
    out.emplace_back(base + ".deconv", dec_[lvl].deconv.spec);
    out.emplace_back(base + ".dsc", dec_[lvl].dsc.spec);
    out.emplace_back(base + ".dsc_bn", dec_[lvl].bn.spec);
    out.emplace_back(base + ".out", dec_[lvl].out.spec);
  }
  return out;
}

namespace {

int64_t actual_trainable_under(const std::vector<ParamEntry>& params, const std::string& prefix) {
  int64_t n = 0;
  for (const auto& p : params) {
    bool under = p.name.size() > prefix.size() && p.name.compare(0, prefix.size(), prefix) == 0 &&
                 p.name[prefix.size()] == '.';
    if (under && p.trainable) n += p.tensor.size();
  }
  return n;
}

}  // namespace

AuditReport Model::audit() const {
  AuditReport rep;
  auto params = parameters();
  for (const auto& [name, spec] : layer_specs()) {
    AuditRow row;
    row.name = name;
    row.spec = spec;
    row.formula_count = param_count(spec);
    row.expected_count = trainable_count(spec);
    row.actual_count = actual_trainable_under(params, name);
    row.receptive_span = receptive_span(spec);
    rep.rows.push_back(row);
    rep.formula_total += row.formula_count;
    rep.expected_total += row.expected_count;
    rep.actual_total += row.actual_count;
  }
  return rep;
}

bool AuditReport::per_layer_consistent() const {
  for (const auto& r : rows)
    if (r.expected_count != r.actual_count) return false;
  return true;
}

std::string AuditReport::table() const {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-22s %-12s %6s %6s %4s %4s %12s %12s %12s %5s\n", "layer",
                "kind", "m", "n", "k", "r", "formula", "expected", "actual", "span");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-22s %-12s %6lld %6lld %4d %4d %12lld %12lld %12lld %5lld\n",
                  r.name.c_str(), layer_kind_name(r.spec.kind),
                  static_cast<long long>(r.spec.in_channels),
                  static_cast<long long>(r.spec.out_channels), r.spec.kernel, r.spec.dilation_rate,
                  static_cast<long long>(r.formula_count), static_cast<long long>(r.expected_count),
                  static_cast<long long>(r.actual_count), static_cast<long long>(r.receptive_span));
    os << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "total: formula %lld, expected trainable %lld, actual trainable %lld\n",
                static_cast<long long>(formula_total), static_cast<long long>(expected_total),
                static_cast<long long>(actual_total));
  os << buf;
  return os.str();
}

std::string AuditReport::tsv() const {
  std::ostringstream os;
  os << "layer\tkind\tm\tn\tk\tr\tformula\texpected\tactual\tspan\n";
  for (const auto& r : rows)
    os << r.name << '\t' << layer_kind_name(r.spec.kind) << '\t' << r.spec.in_channels << '\t'
       << r.spec.out_channels << '\t' << r.spec.kernel << '\t' << r.spec.dilation_rate << '\t'
       << r.formula_count << '\t' << r.expected_count << '\t' << r.actual_count << '\t'
       << r.receptive_span << '\n';
  os << "total\t\t\t\t\t\t" << formula_total << '\t' << expected_total << '\t' << actual_total
     << "\t\n";
  return os.str();
}

void Model::load_parameters(const std::vector<ParamEntry>& entries) {
  std::map<std::string, const ParamEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  auto mine = parameters();
  for (auto& p : mine) {
    auto it = by_name.find(p.name);
    check(it != by_name.end(), "load_parameters: missing tensor '" + p.name + "'");
    const Tensor& src = it->second->tensor;
    check_shape(src.shape() == p.tensor.shape(),
                "load_parameters: shape mismatch for '" + p.name + "': " +
                    shape_str(src.shape()) + " vs " + shape_str(p.tensor.shape()));
    p.tensor.vec() = src.vec();
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw ValueError("load_parameters: checkpoint has " + std::to_string(by_name.size()) +
                     " tensors this model does not (first: '" + by_name.begin()->first + "')");
}

}  // namespace cdfm3sf
