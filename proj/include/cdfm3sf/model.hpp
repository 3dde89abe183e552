#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdfm3sf/layers.hpp"

namespace cdfm3sf {

enum class Variant { full13, vnir_swir10, vnir4 };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Widths and plans for the three-branch network. Band grouping (4 VNIR,
/// 6 VRE/SWIR, 3 Ca/WV/Cir), pool plan 2/3/2 and deconv strides 2/3/2 are
/// fixed by the architecture; channel widths are configuration so the
/// parameter audit pins the final answer.
struct ModelConfig {
  Variant variant = Variant::full13;
  int64_t width = 64;          // branch, bottleneck and decoder feature width
  int64_t deconv_width = 128;  // feature maps out of each Deconv

  static constexpr int64_t kVnirBands = 4;
  static constexpr int64_t kVreSwirBands = 6;
  static constexpr int64_t kCaWvCirBands = 3;
  static constexpr int kPoolPlan[3] = {2, 3, 2};
  static constexpr int kDeconvStrides[3] = {2, 3, 2};  // bottom, middle, top
  static constexpr int kSdrbRates[6] = {2, 2, 3, 3, 4, 4};
  static constexpr int kSdrbSharedKernels[6] = {5, 5, 7, 7, 9, 9};

  bool has_middle_branch() const { return variant != Variant::vnir4; }
  bool has_bottom_branch() const { return variant == Variant::full13; }
  void validate() const;
};

/// Input batch: the band stacks a variant consumes, channels-last tensors.
/// vre_swir/ca_wv_cir are left undefined for variants without those branches.
struct PatchBatch {
  Tensor vnir;       // b, H,   H,   4
  Tensor vre_swir;   // b, H/2, H/2, 6
  Tensor ca_wv_cir;  // b, H/6, H/6, 3
};

/// Cloud probability (or reference) masks at 10 m, 20 m, 60 m.
struct MaskPyramid {
  Tensor top;     // b, H,   W,   1
  Tensor middle;  // b, H/2, W/2, 1
  Tensor bottom;  // b, H/6, W/6, 1
};

struct AuditRow {
  std::string name;
  LayerSpec spec;
  int64_t formula_count = 0;    // the layer-count formulas, bias as m*n
  int64_t expected_count = 0;   // scalars the layer should allocate
  int64_t actual_count = 0;     // scalars it did allocate
  int64_t receptive_span = 0;
};

struct AuditReport {
  std::vector<AuditRow> rows;
  int64_t formula_total = 0;
  int64_t expected_total = 0;
  int64_t actual_total = 0;
  bool consistent() const { return expected_total == actual_total && per_layer_consistent(); }
  bool per_layer_consistent() const;
  std::string table() const;  // human-readable
  std::string tsv() const;    // machine-readable
};

class Model {
 public:
  static Model build(const ModelConfig& cfg, uint64_t seed);

  MaskPyramid forward(const PatchBatch& in, bool training);

  // Ordered, uniquely named parameters, running statistics included.
  std::vector<ParamEntry> parameters();
  std::vector<ParamEntry> parameters() const;

  AuditReport audit() const;
  const ModelConfig& config() const { return cfg_; }

  // Ordered (name, spec) pairs of every parameterized stage, for
  // cross-variant consistency checks.
  std::vector<std::pair<std::string, LayerSpec>> layer_specs() const;

  // Overwrites parameters and running statistics by name; every model tensor
  // must be matched. Shapes must agree.
  void load_parameters(const std::vector<ParamEntry>& entries);

 private:
  Model() = default;
  void validate_input(const PatchBatch& in) const;

  ModelConfig cfg_;

  // encoder
  ConvUnit top_conv_;
  MdscUnit top_mdsc_;
  BatchNormUnit top_mdsc_bn_;
  ConvUnit mid_conv_;   // if middle branch
  CsUnit mid_cs_;
  ConvUnit bot_conv_;   // if bottom branch
  CsUnit bot_cs_;
  std::vector<SdrbBlock> sdrb_;

  // decoder, bottom -> top
  struct DecoderLevel {
    DeconvUnit deconv;
    DscUnit dsc;
    BatchNormUnit bn;
    ConvUnit out;
    bool has_skip = true;
  };
  DecoderLevel dec_[3];
};

}  // namespace cdfm3sf
