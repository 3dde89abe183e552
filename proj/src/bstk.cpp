#include "cdfm3sf/bstk.hpp"

#include <cstring>
#include <fstream>

#include "cdfm3sf/crc32.hpp"

namespace cdfm3sf {

namespace {

constexpr char kMagic[4] = {'B', 'S', 'T', 'K'};
constexpr uint16_t kVersion = 1;

template <typename T>
void put(std::string& buf, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.append(b, sizeof(T));
}

template <typename T>
T take(const std::string& buf, size_t& pos, const char* what) {
  if (pos + sizeof(T) > buf.size())
    throw IoError(std::string("bandstack truncated while reading ") + what);
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

size_t scalar_bytes(BstkDtype d) {
  switch (d) {
    case BstkDtype::u16_raw: return 2;
    case BstkDtype::f32: return 4;
    case BstkDtype::u8_mask: return 1;
  }
  throw IoError("bandstack: unknown dtype code");
}

}  // namespace

int resolution_meters(Resolution r) {
  switch (r) {
    case Resolution::r10m: return 10;
    case Resolution::r20m: return 20;
    case Resolution::r60m: return 60;
  }
  return 0;
}

bool BandStack::pixel_is_nodata(int64_t y, int64_t x) const {
  int64_t base = (y * width + x) * channels;
  for (int c = 0; c < channels; ++c) {
    switch (dtype) {
      case BstkDtype::u16_raw:
        if (raw[base + c] != 0) return false;
        break;
      case BstkDtype::f32:
        if (values[base + c] != 0.0f) return false;
        break;
      case BstkDtype::u8_mask:
        if (labels[base + c] != 0) return false;
        break;
    }
  }
  return true;
}

void BandStack::validate() const {
  check(width >= 1 && height >= 1 && channels >= 1, "bandstack: empty extents");
  size_t expect = static_cast<size_t>(scalar_count());
  switch (dtype) {
    case BstkDtype::u16_raw:
      check(raw.size() == expect, "bandstack: raw payload size mismatch");
      break;
    case BstkDtype::f32:
      check(values.size() == expect, "bandstack: f32 payload size mismatch");
      break;
    case BstkDtype::u8_mask:
      check(labels.size() == expect, "bandstack: label payload size mismatch");
      break;
  }
}

void CloudMask::validate() const {
  check(width >= 1 && height >= 1, "cloud mask: empty extents");
  check(labels.size() == static_cast<size_t>(width * height), "cloud mask: payload size mismatch");
  for (uint8_t v : labels)
    check(v == 0 || v == 1 || v == 255,
          "cloud mask: illegal label " + std::to_string(int(v)) + " (want 0, 1 or 255)");
}

void write_bandstack(const BandStack& stack, const std::string& path) {
  stack.validate();
  std::string header(kMagic, 4);
  put<uint16_t>(header, kVersion);
  put<uint16_t>(header, static_cast<uint16_t>(stack.channels));
  put<uint32_t>(header, static_cast<uint32_t>(stack.width));
  put<uint32_t>(header, static_cast<uint32_t>(stack.height));
  header.push_back(static_cast<char>(stack.res));
  header.push_back(static_cast<char>(stack.dtype));
  put<int32_t>(header, stack.offset_x);
  put<int32_t>(header, stack.offset_y);

  const char* payload = nullptr;
  size_t payload_len = stack.scalar_count() * scalar_bytes(stack.dtype);
  switch (stack.dtype) {
    case BstkDtype::u16_raw: payload = reinterpret_cast<const char*>(stack.raw.data()); break;
    case BstkDtype::f32: payload = reinterpret_cast<const char*>(stack.values.data()); break;
    case BstkDtype::u8_mask: payload = reinterpret_cast<const char*>(stack.labels.data()); break;
  }
  uint32_t crc = crc32(payload, payload_len);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("bandstack: cannot open '" + path + "' for writing");
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  f.write(payload, static_cast<std::streamsize>(payload_len));
  f.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
  if (!f) throw IoError("bandstack: write failed for '" + path + "'");
}

BandStack read_bandstack(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("bandstack: cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw IoError("bandstack: bad magic in '" + path + "'");
  size_t pos = 4;
  uint16_t version = take<uint16_t>(buf, pos, "version");
  if (version != kVersion)
    throw IoError("bandstack: unsupported version " + std::to_string(version));

  BandStack s;
  s.channels = take<uint16_t>(buf, pos, "channels");
  s.width = take<uint32_t>(buf, pos, "width");
  s.height = take<uint32_t>(buf, pos, "height");
  uint8_t res = static_cast<uint8_t>(take<char>(buf, pos, "resolution tag"));
  if (res > 2) throw IoError("bandstack: unknown resolution tag");
  s.res = static_cast<Resolution>(res);
  uint8_t dt = static_cast<uint8_t>(take<char>(buf, pos, "dtype"));
  if (dt > 2) throw IoError("bandstack: unknown dtype code");
  s.dtype = static_cast<BstkDtype>(dt);
  s.offset_x = take<int32_t>(buf, pos, "offset-x");
  s.offset_y = take<int32_t>(buf, pos, "offset-y");

  check(s.width >= 1 && s.height >= 1 && s.channels >= 1, "bandstack: empty extents in header");
  size_t n = static_cast<size_t>(s.scalar_count());
  size_t payload_len = n * scalar_bytes(s.dtype);
  if (pos + payload_len + 4 > buf.size())
    throw IoError("bandstack: header claims more data than the file holds ('" + path + "')");

  uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + pos + payload_len, 4);
  if (crc32(buf.data() + pos, payload_len) != stored_crc)
    throw IoError("bandstack: checksum failure in '" + path + "'");

  switch (s.dtype) {
    case BstkDtype::u16_raw:
      s.raw.resize(n);
      std::memcpy(s.raw.data(), buf.data() + pos, payload_len);
      break;
    case BstkDtype::f32:
      s.values.resize(n);
      std::memcpy(s.values.data(), buf.data() + pos, payload_len);
      break;
    case BstkDtype::u8_mask:
      s.labels.resize(n);
      std::memcpy(s.labels.data(), buf.data() + pos, payload_len);
      break;
  }
  return s;
}

void write_mask(const CloudMask& mask, const std::string& path) {
  mask.validate();
  BandStack s;
  s.width = mask.width;
  s.height = mask.height;
  s.channels = 1;
  s.res = mask.res;
  s.dtype = BstkDtype::u8_mask;
  s.offset_x = mask.offset_x;
  s.offset_y = mask.offset_y;
  s.labels = mask.labels;
  write_bandstack(s, path);
}

CloudMask read_mask(const std::string& path) {
  BandStack s = read_bandstack(path);
  check(s.dtype == BstkDtype::u8_mask && s.channels == 1,
        "mask: '" + path + "' is not a single-channel label raster");
  CloudMask m;
  m.width = s.width;
  m.height = s.height;
  m.offset_x = s.offset_x;
  m.offset_y = s.offset_y;
  m.res = s.res;
  m.labels = std::move(s.labels);
  m.validate();
  return m;
}

float normalize_toa(int64_t raw_value) {
  check(raw_value >= 0, "normalize: negative raw TOA value " + std::to_string(raw_value));
  return static_cast<float>(raw_value) / 10000.0f;
}

BandStack normalize(const BandStack& raw_stack) {
  raw_stack.validate();
  check(raw_stack.dtype == BstkDtype::u16_raw, "normalize: input must be a raw u16 TOA stack");
  BandStack out = raw_stack;
  out.dtype = BstkDtype::f32;
  out.values.resize(raw_stack.raw.size());
  for (size_t i = 0; i < raw_stack.raw.size(); ++i)
    out.values[i] = normalize_toa(raw_stack.raw[i]);
  out.raw.clear();
  return out;
}

}  // namespace cdfm3sf
