#pragma once

#include <string>
#include <vector>

#include "cdfm3sf/layers.hpp"

namespace cdfm3sf {

/// Checkpoint container. Layout, little-endian throughout:
///   magic "CDFM3SF\0" (8 bytes)
///   u32 version (currently 1)
///   u32 entry count, then per entry:
///     u16 name length, name bytes,
///     u8 dtype (0 = f32, 1 = f64), u8 trainable flag,
///     u8 rank, u32 extents[rank]
///   raw scalar payloads in manifest order
///   u32 CRC-32 over the payload bytes
/// Magic/version mismatch, truncation and checksum failure are reported as
/// distinct errors.
void save_checkpoint(const std::vector<ParamEntry>& entries, const std::string& path);
std::vector<ParamEntry> load_checkpoint(const std::string& path);

}  // namespace cdfm3sf
