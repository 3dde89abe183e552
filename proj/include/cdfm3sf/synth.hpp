#pragma once

#include <vector>

#include "cdfm3sf/pipeline.hpp"

namespace cdfm3sf {

struct SynthConfig {
  uint64_t seed = 0;
  int n_scenes = 4;
  int64_t size = 96;  // 10 m extent, multiple of 12
  // accepted per-scene cloud-pixel fraction band; scenes outside are redrawn
  double cloud_fraction_lo = 0.05;
  double cloud_fraction_hi = 0.60;

  void validate() const;
};

/// A generated scene together with the latent 10 m fields the 20 m / 60 m
/// stacks were block-averaged from (kept for verification; the scene alone is
/// what the pipeline consumes). Block means are accumulated in f64 row-major
/// and rounded to f32.
struct SynthScene {
  Scene scene;
  std::vector<float> latent_vsw;  // size*size*6 at 10 m
  std::vector<float> latent_cwc;  // size*size*3 at 10 m
};

// Smooth positive "land" backgrounds per band group, elliptical bright clouds
// with brightness consistent across all bands, matching binary truth masks.
// Fully determined by the seed.
std::vector<SynthScene> synth_dataset_full(const SynthConfig& cfg);
std::vector<Scene> synth_dataset(const SynthConfig& cfg);

// Exact 10 m -> (10/factor) m block mean of one channel-interleaved field.
std::vector<float> block_mean(const std::vector<float>& field, int64_t size, int channels,
                              int factor);

}  // namespace cdfm3sf
