#include "cdfm3sf/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace cdfm3sf {

void Scene::validate() const {
  b10.validate();
  b20.validate();
  b60.validate();
  mask.validate();
  check(b10.channels == 4 && b20.channels == 6 && b60.channels == 3,
        "scene '" + id + "': expected 4/6/3 channels, got " + std::to_string(b10.channels) + "/" +
            std::to_string(b20.channels) + "/" + std::to_string(b60.channels));
  check(b10.res == Resolution::r10m && b20.res == Resolution::r20m && b60.res == Resolution::r60m,
        "scene '" + id + "': stacks must be tagged 10 m / 20 m / 60 m");
  bool aligned = b10.width == 2 * b20.width && b10.height == 2 * b20.height &&
                 b10.width == 6 * b60.width && b10.height == 6 * b60.height &&
                 mask.width == b10.width && mask.height == b10.height;
  check(aligned, "scene '" + id + "': misaligned group, 10 m " + std::to_string(b10.width) + "x" +
                     std::to_string(b10.height) + " vs 20 m " + std::to_string(b20.width) + "x" +
                     std::to_string(b20.height) + " vs 60 m " + std::to_string(b60.width) + "x" +
                     std::to_string(b60.height));
  bool same_origin = b10.offset_x == b20.offset_x && b10.offset_x == b60.offset_x &&
                     b10.offset_y == b20.offset_y && b10.offset_y == b60.offset_y;
  check(same_origin, "scene '" + id + "': stacks do not share a footprint origin");
}

CloudMask downsample_mask(const CloudMask& mask, int factor) {
  mask.validate();
  check(factor == 2 || factor == 6, "downsample_mask: factor must be 2 or 6");
  check_shape(mask.width % factor == 0 && mask.height % factor == 0,
              "downsample_mask: extent " + std::to_string(mask.width) + "x" +
                  std::to_string(mask.height) + " not divisible by " + std::to_string(factor));
  CloudMask out;
  out.width = mask.width / factor;
  out.height = mask.height / factor;
  out.offset_x = mask.offset_x;
  out.offset_y = mask.offset_y;
  out.res = factor == 2 ? Resolution::r20m : Resolution::r60m;
  out.labels.resize(out.width * out.height);
  for (int64_t oy = 0; oy < out.height; ++oy)
    for (int64_t ox = 0; ox < out.width; ++ox) {
      int cloud = 0, clear = 0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) {
          uint8_t v = mask.labels[(oy * factor + dy) * mask.width + ox * factor + dx];
          if (v == 1) ++cloud;
          else if (v == 0) ++clear;
        }
      uint8_t& o = out.labels[oy * out.width + ox];
      if (cloud + clear == 0) o = 255;
      else o = cloud >= clear ? 1 : 0;  // tie resolves to cloud
    }
  return out;
}

namespace {

BandStack crop_stack(const BandStack& s, int64_t x0, int64_t y0, int64_t w, int64_t h,
                     int32_t origin10_x, int32_t origin10_y) {
  BandStack out;
  out.width = w;
  out.height = h;
  out.channels = s.channels;
  out.res = s.res;
  out.dtype = s.dtype;
  out.offset_x = origin10_x;
  out.offset_y = origin10_y;
  out.values.resize(w * h * s.channels);
  for (int64_t y = 0; y < h; ++y) {
    const float* src = s.values.data() + ((y0 + y) * s.width + x0) * s.channels;
    std::copy(src, src + w * s.channels, out.values.data() + y * w * s.channels);
  }
  return out;
}

CloudMask crop_mask(const CloudMask& m, int64_t x0, int64_t y0, int64_t w, int64_t h,
                    int32_t origin10_x, int32_t origin10_y) {
  CloudMask out;
  out.width = w;
  out.height = h;
  out.offset_x = origin10_x;
  out.offset_y = origin10_y;
  out.res = m.res;
  out.labels.resize(w * h);
  for (int64_t y = 0; y < h; ++y) {
    const uint8_t* src = m.labels.data() + (y0 + y) * m.width + x0;
    std::copy(src, src + w, out.labels.data() + y * w);
  }
  return out;
}

bool window_has_nodata(const BandStack& s, int64_t x0, int64_t y0, int64_t w, int64_t h) {
  for (int64_t y = y0; y < y0 + h; ++y)
    for (int64_t x = x0; x < x0 + w; ++x)
      if (s.pixel_is_nodata(y, x)) return true;
  return false;
}

}  // namespace

std::vector<PatchGroup> tile(const Scene& scene, int window) {
  scene.validate();
  check(scene.b10.dtype == BstkDtype::f32 && scene.b20.dtype == BstkDtype::f32 &&
            scene.b60.dtype == BstkDtype::f32,
        "tile: stacks must be normalized f32 (run normalize first)");
  check(window >= 12 && window % 12 == 0,
        "tile: window must be a positive multiple of 12, got " + std::to_string(window));
  check_shape(scene.b10.width >= window && scene.b10.height >= window,
              "tile: scene smaller than the window");
  const int step = window / 2;

  CloudMask m20 = downsample_mask(scene.mask, 2);
  CloudMask m60 = downsample_mask(scene.mask, 6);

  std::vector<PatchGroup> out;
  for (int64_t oy = 0; oy + window <= scene.b10.height; oy += step)
    for (int64_t ox = 0; ox + window <= scene.b10.width; ox += step) {
      if (window_has_nodata(scene.b10, ox, oy, window, window) ||
          window_has_nodata(scene.b20, ox / 2, oy / 2, window / 2, window / 2) ||
          window_has_nodata(scene.b60, ox / 6, oy / 6, window / 6, window / 6))
        continue;
      PatchGroup g;
      g.scene_id = scene.id;
      g.origin_x = ox;
      g.origin_y = oy;
      int32_t gx = static_cast<int32_t>(ox), gy = static_cast<int32_t>(oy);
      g.vnir = crop_stack(scene.b10, ox, oy, window, window, gx, gy);
      g.vre_swir = crop_stack(scene.b20, ox / 2, oy / 2, window / 2, window / 2, gx, gy);
      g.ca_wv_cir = crop_stack(scene.b60, ox / 6, oy / 6, window / 6, window / 6, gx, gy);
      g.mask10 = crop_mask(scene.mask, ox, oy, window, window, gx, gy);
      g.mask20 = crop_mask(m20, ox / 2, oy / 2, window / 2, window / 2, gx, gy);
      g.mask60 = crop_mask(m60, ox / 6, oy / 6, window / 6, window / 6, gx, gy);
      out.push_back(std::move(g));
    }
  return out;
}

const char* transform_name(Transform t) {
  switch (t) {
    case Transform::identity: return "id";
    case Transform::hflip: return "hflip";
    case Transform::vflip: return "vflip";
    case Transform::rot90: return "rot90";
    case Transform::rot180: return "rot180";
    case Transform::rot270: return "rot270";
  }
  return "?";
}

namespace {

// source coordinates for output (y, x) on a square n x n raster
void source_coord(Transform t, int64_t n, int64_t y, int64_t x, int64_t* sy, int64_t* sx) {
  switch (t) {
    case Transform::identity: *sy = y; *sx = x; break;
    case Transform::hflip: *sy = y; *sx = n - 1 - x; break;
    case Transform::vflip: *sy = n - 1 - y; *sx = x; break;
    case Transform::rot90: *sy = n - 1 - x; *sx = y; break;      // clockwise
    case Transform::rot180: *sy = n - 1 - y; *sx = n - 1 - x; break;
    case Transform::rot270: *sy = x; *sx = n - 1 - y; break;
  }
}

BandStack transform_stack(const BandStack& s, Transform t) {
  check(s.width == s.height, "augment: patches must be square, got " + std::to_string(s.width) +
                                 "x" + std::to_string(s.height));
  BandStack out = s;
  const int64_t n = s.width;
  for (int64_t y = 0; y < n; ++y)
    for (int64_t x = 0; x < n; ++x) {
      int64_t sy, sx;
      source_coord(t, n, y, x, &sy, &sx);
      const float* src = s.values.data() + (sy * n + sx) * s.channels;
      float* dst = out.values.data() + (y * n + x) * s.channels;
      std::copy(src, src + s.channels, dst);
    }
  return out;
}

CloudMask transform_mask(const CloudMask& m, Transform t) {
  check(m.width == m.height, "augment: patches must be square");
  CloudMask out = m;
  const int64_t n = m.width;
  for (int64_t y = 0; y < n; ++y)
    for (int64_t x = 0; x < n; ++x) {
      int64_t sy, sx;
      source_coord(t, n, y, x, &sy, &sx);
      out.labels[y * n + x] = m.labels[sy * n + sx];
    }
  return out;
}

}  // namespace

PatchGroup apply_transform(const PatchGroup& group, Transform t) {
  PatchGroup out;
  out.vnir = transform_stack(group.vnir, t);
  out.vre_swir = transform_stack(group.vre_swir, t);
  out.ca_wv_cir = transform_stack(group.ca_wv_cir, t);
  out.mask10 = transform_mask(group.mask10, t);
  out.mask20 = transform_mask(group.mask20, t);
  out.mask60 = transform_mask(group.mask60, t);
  out.scene_id = group.scene_id;
  out.origin_x = group.origin_x;
  out.origin_y = group.origin_y;
  out.transform = transform_name(t);
  return out;
}

std::vector<PatchGroup> augment(const PatchGroup& group, uint64_t seed) {
  std::vector<Transform> pool = {Transform::hflip, Transform::vflip, Transform::rot90,
                                 Transform::rot180, Transform::rot270};
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<PatchGroup> out;
  out.reserve(5);
  out.push_back(apply_transform(group, Transform::identity));
  for (int i = 0; i < 4; ++i) out.push_back(apply_transform(group, pool[i]));
  return out;
}

uint64_t group_seed(uint64_t run_seed, const std::string& scene_id, int64_t ox, int64_t oy) {
  uint64_t h = 14695981039346656037ULL ^ run_seed;
  for (char c : scene_id) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ULL;
  }
  h ^= static_cast<uint64_t>(ox) + 0x9e3779b97f4a7c15ULL;
  h *= 1099511628211ULL;
  h ^= static_cast<uint64_t>(oy) + 0x517cc1b727220a95ULL;
  h *= 1099511628211ULL;
  return h;
}

std::string PatchGroup::group_id() const {
  std::ostringstream os;
  os << scene_id << "_y" << origin_y << "_x" << origin_x << "_" << transform;
  return os.str();
}

TrainSample PatchGroup::to_sample() const {
  auto stack_to_tensor = [](const BandStack& s) {
    std::vector<real> data(s.values.begin(), s.values.end());
    return Tensor::from_data({s.height, s.width, s.channels}, std::move(data));
  };
  auto mask_to_tensor = [](const CloudMask& m) {
    std::vector<real> data(m.labels.begin(), m.labels.end());
    return Tensor::from_data({m.height, m.width, 1}, std::move(data));
  };
  TrainSample s;
  s.vnir = stack_to_tensor(vnir);
  s.vre_swir = stack_to_tensor(vre_swir);
  s.ca_wv_cir = stack_to_tensor(ca_wv_cir);
  s.mask10 = mask_to_tensor(mask10);
  s.mask20 = mask_to_tensor(mask20);
  s.mask60 = mask_to_tensor(mask60);
  return s;
}

void write_patch_group(const PatchGroup& group, const std::string& dir,
                       std::string* manifest_line) {
  std::string base = group.group_id();
  const std::string names[6] = {base + "_vnir.bstk",   base + "_vsw.bstk",  base + "_cwc.bstk",
                                base + "_mask10.bstk", base + "_mask20.bstk",
                                base + "_mask60.bstk"};
  write_bandstack(group.vnir, dir + "/" + names[0]);
  write_bandstack(group.vre_swir, dir + "/" + names[1]);
  write_bandstack(group.ca_wv_cir, dir + "/" + names[2]);
  write_mask(group.mask10, dir + "/" + names[3]);
  write_mask(group.mask20, dir + "/" + names[4]);
  write_mask(group.mask60, dir + "/" + names[5]);
  if (manifest_line) {
    std::ostringstream os;
    for (const auto& p : names) os << p << '\t';
    os << group.scene_id << '\t' << group.origin_x << '\t' << group.origin_y << '\t'
       << group.transform;
    *manifest_line = os.str();
  }
}

PatchGroup read_patch_group_line(const std::string& manifest_line, const std::string& base_dir) {
  std::istringstream is(manifest_line);
  std::string f[6], scene_id, transform;
  int64_t ox, oy;
  for (auto& p : f) {
    check(static_cast<bool>(std::getline(is, p, '\t')), "patch manifest: short line");
    if (!p.empty() && p[0] != '/') p = base_dir + "/" + p;
  }
  std::string field;
  check(static_cast<bool>(std::getline(is, scene_id, '\t')), "patch manifest: missing scene id");
  check(static_cast<bool>(std::getline(is, field, '\t')), "patch manifest: missing origin x");
  ox = std::stoll(field);
  check(static_cast<bool>(std::getline(is, field, '\t')), "patch manifest: missing origin y");
  oy = std::stoll(field);
  check(static_cast<bool>(std::getline(is, transform)), "patch manifest: missing transform");

  PatchGroup g;
  g.vnir = read_bandstack(f[0]);
  g.vre_swir = read_bandstack(f[1]);
  g.ca_wv_cir = read_bandstack(f[2]);
  g.mask10 = read_mask(f[3]);
  g.mask20 = read_mask(f[4]);
  g.mask60 = read_mask(f[5]);
  g.scene_id = scene_id;
  g.origin_x = ox;
  g.origin_y = oy;
  g.transform = transform;
  return g;
}

std::vector<PatchGroup> read_patch_manifest(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw IoError("patch manifest: cannot open '" + manifest_path + "'");
  std::string base_dir = ".";
  auto slash = manifest_path.find_last_of('/');
  if (slash != std::string::npos) base_dir = manifest_path.substr(0, slash);
  std::vector<PatchGroup> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(read_patch_group_line(line, base_dir));
  }
  return out;
}

}  // namespace cdfm3sf
