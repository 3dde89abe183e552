#pragma once

#include <string>
#include <vector>

#include "cdfm3sf/bstk.hpp"
#include "cdfm3sf/train.hpp"

namespace cdfm3sf {

/// Co-registered scene: 10 m / 20 m / 60 m stacks plus the 10 m reference
/// mask. Alignment invariant: width10 = 2*width20 = 6*width60, same offsets.
struct Scene {
  std::string id;
  BandStack b10;  // 4 channels
  BandStack b20;  // 6 channels
  BandStack b60;  // 3 channels
  CloudMask mask;  // 10 m

  void validate() const;
};

/// One co-registered training patch: three input windows plus the three-level
/// mask pyramid, all sharing a footprint, plus provenance.
struct PatchGroup {
  BandStack vnir;       // window,   window,   4   (10 m, f32)
  BandStack vre_swir;   // window/2, window/2, 6   (20 m, f32)
  BandStack ca_wv_cir;  // window/6, window/6, 3   (60 m, f32)
  CloudMask mask10, mask20, mask60;
  std::string scene_id;
  int64_t origin_x = 0, origin_y = 0;  // window origin on the 10 m grid
  std::string transform = "id";

  std::string group_id() const;
  TrainSample to_sample() const;
};

// Majority-vote downsample over non-overlapping factor x factor windows.
// No-data pixels are excluded from the vote; ties resolve to cloud; an
// all-no-data window stays no-data.
CloudMask downsample_mask(const CloudMask& mask, int factor);

// Half-overlap sliding windows on the 10 m grid (step = window/2); window
// must be a multiple of 12 so the 20 m and 60 m grids tile exactly. Patches
// containing any no-data input pixel are dropped. Output is row-major in
// window origin, deterministic.
std::vector<PatchGroup> tile(const Scene& scene, int window = 384);

enum class Transform : uint8_t { identity = 0, hflip, vflip, rot90, rot180, rot270 };
const char* transform_name(Transform t);

// Applies the index transform to every raster of the group (square patches
// only). Output footprint provenance keeps the source origin.
PatchGroup apply_transform(const PatchGroup& group, Transform t);

// The identity plus 4 transforms drawn deterministically (without
// replacement, seeded) from {hflip, vflip, rot90, rot180, rot270}: a x5
// expansion.
std::vector<PatchGroup> augment(const PatchGroup& group, uint64_t seed);

uint64_t group_seed(uint64_t run_seed, const std::string& scene_id, int64_t ox, int64_t oy);

// Patch directory layout: six BSTK rasters per group plus one tab-separated
// manifest line: vnir, vre_swir, ca_wv_cir, mask10, mask20, mask60 file
// names (relative to the manifest's directory, keeping dataset trees
// relocatable and seed-reproducible byte for byte), then scene id, origin x,
// origin y, transform.
void write_patch_group(const PatchGroup& group, const std::string& dir, std::string* manifest_line);
PatchGroup read_patch_group_line(const std::string& manifest_line, const std::string& base_dir);
std::vector<PatchGroup> read_patch_manifest(const std::string& manifest_path);

}  // namespace cdfm3sf
