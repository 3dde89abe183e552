#pragma once

#include <string>
#include <vector>

#include "cdfm3sf/common.hpp"

namespace cdfm3sf {

enum class Resolution : uint8_t { r10m = 0, r20m = 1, r60m = 2 };
enum class BstkDtype : uint8_t { u16_raw = 0, f32 = 1, u8_mask = 2 };

int resolution_meters(Resolution r);

/// Multiband raster tied to one of the three sensor grids. Payload is
/// row-major, channel-interleaved: index (y*width + x)*channels + c. Exactly
/// one of raw/values/labels is populated, per dtype. A pixel whose every
/// channel is 0 is treated as no-data in input stacks.
struct BandStack {
  int64_t width = 0, height = 0;
  int channels = 1;
  Resolution res = Resolution::r10m;
  BstkDtype dtype = BstkDtype::f32;
  int32_t offset_x = 0, offset_y = 0;  // pixel origin on the 10 m grid

  std::vector<uint16_t> raw;
  std::vector<float> values;
  std::vector<uint8_t> labels;

  int64_t pixel_count() const { return width * height; }
  int64_t scalar_count() const { return pixel_count() * channels; }
  bool pixel_is_nodata(int64_t y, int64_t x) const;
  void validate() const;
};

/// Per-pixel cloud labels: 0 clear, 1 cloud, 255 no-data. Stored on disk as a
/// single-channel BSTK with the u8 dtype code.
struct CloudMask {
  int64_t width = 0, height = 0;
  int32_t offset_x = 0, offset_y = 0;
  Resolution res = Resolution::r10m;
  std::vector<uint8_t> labels;

  void validate() const;
};

/// BSTK container, little-endian: magic "BSTK", u16 version, u16 channels,
/// u32 width, u32 height, u8 resolution tag, u8 dtype, s32 offset-x,
/// s32 offset-y, payload, trailing CRC-32 of the payload bytes.
void write_bandstack(const BandStack& stack, const std::string& path);
BandStack read_bandstack(const std::string& path);

void write_mask(const CloudMask& mask, const std::string& path);
CloudMask read_mask(const std::string& path);

// TOA reflectance scaling: raw integer / 10000, no clipping (reflectance may
// exceed 1 over bright targets). Negative raw values are rejected.
float normalize_toa(int64_t raw_value);
BandStack normalize(const BandStack& raw_stack);

}  // namespace cdfm3sf
