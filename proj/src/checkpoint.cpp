#include "cdfm3sf/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "cdfm3sf/crc32.hpp"

namespace cdfm3sf {

namespace {

constexpr char kMagic[8] = {'C', 'D', 'F', 'M', '3', 'S', 'F', '\0'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::string& buf, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.append(b, sizeof(T));  // little-endian host assumed (x86/arm64)
}

template <typename T>
T take(const std::string& buf, size_t& pos, const char* what) {
  if (pos + sizeof(T) > buf.size())
    throw IoError(std::string("checkpoint truncated while reading ") + what);
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::vector<ParamEntry>& entries, const std::string& path) {
  std::string header(kMagic, 8);
  put<uint32_t>(header, kVersion);
  put<uint32_t>(header, static_cast<uint32_t>(entries.size()));

  std::string payload;
  for (const auto& e : entries) {
    check(e.name.size() < 65536, "checkpoint: tensor name too long");
    put<uint16_t>(header, static_cast<uint16_t>(e.name.size()));
    header.append(e.name);
    header.push_back(sizeof(real) == 4 ? 0 : 1);
    header.push_back(e.trainable ? 1 : 0);
    const auto& shape = e.tensor.shape();
    header.push_back(static_cast<char>(shape.size()));
    for (int64_t d : shape) put<uint32_t>(header, static_cast<uint32_t>(d));
    payload.append(reinterpret_cast<const char*>(e.tensor.data()),
                   e.tensor.size() * sizeof(real));
  }
  uint32_t crc = crc32(payload.data(), payload.size());

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  f.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
  if (!f) throw IoError("checkpoint: write failed for '" + path + "'");
}

std::vector<ParamEntry> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  size_t pos = 0;
  if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 8) != 0)
    throw IoError("checkpoint: bad magic in '" + path + "'");
  pos = 8;
  uint32_t version = take<uint32_t>(buf, pos, "version");
  if (version != kVersion)
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  uint32_t count = take<uint32_t>(buf, pos, "entry count");

  struct Meta {
    std::string name;
    uint8_t dtype;
    bool trainable;
    Shape shape;
  };
  std::vector<Meta> metas;
  metas.reserve(count);
  size_t payload_bytes = 0;
  for (uint32_t i = 0; i < count; ++i) {
    Meta m;
    uint16_t len = take<uint16_t>(buf, pos, "name length");
    if (pos + len > buf.size()) throw IoError("checkpoint truncated while reading name");
    m.name.assign(buf.data() + pos, len);
    pos += len;
    m.dtype = static_cast<uint8_t>(take<char>(buf, pos, "dtype"));
    if (m.dtype > 1) throw IoError("checkpoint: unknown dtype code for '" + m.name + "'");
    m.trainable = take<char>(buf, pos, "trainable flag") != 0;
    uint8_t rank = static_cast<uint8_t>(take<char>(buf, pos, "rank"));
    for (uint8_t r = 0; r < rank; ++r)
      m.shape.push_back(take<uint32_t>(buf, pos, "extent"));
    payload_bytes += static_cast<size_t>(shape_numel(m.shape)) * (m.dtype == 0 ? 4 : 8);
    metas.push_back(std::move(m));
  }

  if (pos + payload_bytes + 4 > buf.size())
    throw IoError("checkpoint truncated: payload or checksum missing");
  uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + pos + payload_bytes, 4);
  uint32_t crc = crc32(buf.data() + pos, payload_bytes);
  if (crc != stored_crc)
    throw IoError("checkpoint: checksum failure (payload corrupted) in '" + path + "'");

  std::vector<ParamEntry> out;
  out.reserve(count);
  for (const Meta& m : metas) {
    int64_t n = shape_numel(m.shape);
    std::vector<real> data(static_cast<size_t>(n));
    if (m.dtype == 0) {
      std::vector<float> tmp(static_cast<size_t>(n));
      std::memcpy(tmp.data(), buf.data() + pos, n * sizeof(float));
      pos += n * sizeof(float);
      for (int64_t i = 0; i < n; ++i) data[i] = static_cast<real>(tmp[i]);
    } else {
      std::vector<double> tmp(static_cast<size_t>(n));
      std::memcpy(tmp.data(), buf.data() + pos, n * sizeof(double));
      pos += n * sizeof(double);
      for (int64_t i = 0; i < n; ++i) data[i] = static_cast<real>(tmp[i]);
    }
    out.push_back({m.name, Tensor::from_data(m.shape, std::move(data)), m.trainable});
  }
  return out;
}

}  // namespace cdfm3sf
