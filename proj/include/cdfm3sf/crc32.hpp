#pragma once

#include <cstddef>
#include <cstdint>

namespace cdfm3sf {

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320). Streamable: pass the
// previous return value as `seed` to continue over more data.
uint32_t crc32(const void* data, size_t len, uint32_t seed = 0);

}  // namespace cdfm3sf
