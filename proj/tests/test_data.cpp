#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cdfm3sf/synth.hpp"

using namespace cdfm3sf;
namespace fs = std::filesystem;

namespace {

// deterministic non-constant scene values: v = (y*31 + x*7 + c) scaled
Scene patterned_scene(int64_t size, const std::string& id = "s") {
  Scene s;
  s.id = id;
  auto fill = [](BandStack& b, int64_t n, int c, Resolution r) {
    b.width = n;
    b.height = n;
    b.channels = c;
    b.res = r;
    b.dtype = BstkDtype::f32;
    b.values.resize(n * n * c);
    for (int64_t y = 0; y < n; ++y)
      for (int64_t x = 0; x < n; ++x)
        for (int j = 0; j < c; ++j)
          b.values[(y * n + x) * c + j] = 0.01f * float(y * 31 + x * 7 + j) + 0.05f;
  };
  fill(s.b10, size, 4, Resolution::r10m);
  fill(s.b20, size / 2, 6, Resolution::r20m);
  fill(s.b60, size / 6, 3, Resolution::r60m);
  s.mask.width = size;
  s.mask.height = size;
  s.mask.res = Resolution::r10m;
  s.mask.labels.assign(size * size, 0);
  for (int64_t y = 0; y < size; ++y)
    for (int64_t x = 0; x < size; ++x)
      if ((y / 3 + x / 5) % 2 == 0) s.mask.labels[y * size + x] = 1;
  return s;
}

}  // namespace

TEST_CASE("bandstack write/read round-trip is bit-exact for all dtypes") {
  fs::path dir = fs::temp_directory_path() / "cdfm3sf_bstk";
  fs::create_directories(dir);

  BandStack u16;
  u16.width = 3;
  u16.height = 2;
  u16.channels = 2;
  u16.res = Resolution::r20m;
  u16.dtype = BstkDtype::u16_raw;
  u16.offset_x = -4;
  u16.offset_y = 10;
  u16.raw = {0, 1, 2, 3, 4, 5, 60000, 7, 8, 9, 10, 11};
  std::string p = (dir / "a.bstk").string();
  write_bandstack(u16, p);
  BandStack r = read_bandstack(p);
  CHECK(r.raw == u16.raw);
  CHECK(r.width == 3);
  CHECK(r.height == 2);
  CHECK(r.channels == 2);
  CHECK(r.res == Resolution::r20m);
  CHECK(r.offset_x == -4);
  CHECK(r.offset_y == 10);

  BandStack f;
  f.width = 2;
  f.height = 2;
  f.channels = 1;
  f.dtype = BstkDtype::f32;
  f.values = {1.25f, -0.5f, 3.75f, 0.0f};
  write_bandstack(f, p);
  CHECK(read_bandstack(p).values == f.values);

  CloudMask m;
  m.width = 2;
  m.height = 2;
  m.labels = {0, 1, 255, 1};
  std::string pm = (dir / "m.bstk").string();
  write_mask(m, pm);
  CHECK(read_mask(pm).labels == m.labels);
  fs::remove_all(dir);
}

TEST_CASE("bandstack header claiming more data than present is rejected") {
  fs::path dir = fs::temp_directory_path() / "cdfm3sf_bstk_neg";
  fs::create_directories(dir);
  std::string p = (dir / "bad.bstk").string();
  BandStack f;
  f.width = 4;
  f.height = 4;
  f.channels = 2;
  f.dtype = BstkDtype::f32;
  f.values.assign(32, 1.0f);
  write_bandstack(f, p);

  std::ifstream in(p, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 24));
  out.close();
  CHECK_THROWS_WITH_AS(read_bandstack(p), doctest::Contains("more data"), IoError);

  std::ofstream out2(p, std::ios::binary | std::ios::trunc);
  std::string flipped = bytes;
  flipped[flipped.size() - 10] ^= 0x11;  // payload corruption
  out2.write(flipped.data(), static_cast<std::streamsize>(flipped.size()));
  out2.close();
  CHECK_THROWS_WITH_AS(read_bandstack(p), doctest::Contains("checksum"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("normalize divides by 10000 and rejects negatives") {
  CHECK(normalize_toa(10000) == 1.0f);
  CHECK(normalize_toa(0) == 0.0f);
  CHECK(normalize_toa(12345) == doctest::Approx(1.2345));
  CHECK_THROWS_AS(normalize_toa(-1), ValueError);

  BandStack raw;
  raw.width = 2;
  raw.height = 1;
  raw.channels = 1;
  raw.dtype = BstkDtype::u16_raw;
  raw.raw = {10000, 2500};
  BandStack n = normalize(raw);
  CHECK(n.dtype == BstkDtype::f32);
  CHECK(n.values[0] == 1.0f);
  CHECK(n.values[1] == 0.25f);
}

TEST_CASE("tiling count law: 768 -> 9 groups, 384 -> 1 group") {
  Scene s768 = patterned_scene(768);
  CHECK(tile(s768, 384).size() == 9);
  Scene s384 = patterned_scene(384);
  CHECK(tile(s384, 384).size() == 1);
  // same law at desk scale
  Scene s96 = patterned_scene(96);
  CHECK(tile(s96, 48).size() == 9);
}

TEST_CASE("a no-data corner removes exactly the windows that cover it") {
  Scene s = patterned_scene(96);
  // zero out every channel of the 10 m stack in the top-left 24x24 corner
  for (int64_t y = 0; y < 24; ++y)
    for (int64_t x = 0; x < 24; ++x)
      for (int c = 0; c < 4; ++c) s.b10.values[(y * 96 + x) * 4 + c] = 0.0f;
  auto groups = tile(s, 48);
  CHECK(groups.size() == 8);  // the (0,0) window is gone
  for (const auto& g : groups) CHECK(!(g.origin_x == 0 && g.origin_y == 0));
}

TEST_CASE("tiled patches reproduce the scene windows bit-exactly at every level") {
  Scene s = patterned_scene(96);
  auto groups = tile(s, 48);
  REQUIRE(groups.size() == 9);
  for (const auto& g : groups) {
    for (int64_t y = 0; y < 48; ++y)
      for (int64_t x = 0; x < 48; ++x)
        for (int c = 0; c < 4; ++c)
          CHECK(g.vnir.values[(y * 48 + x) * 4 + c] ==
                s.b10.values[((g.origin_y + y) * 96 + (g.origin_x + x)) * 4 + c]);
    for (int64_t y = 0; y < 24; ++y)
      for (int64_t x = 0; x < 24; ++x)
        for (int c = 0; c < 6; ++c)
          CHECK(g.vre_swir.values[(y * 24 + x) * 6 + c] ==
                s.b20.values[((g.origin_y / 2 + y) * 48 + (g.origin_x / 2 + x)) * 6 + c]);
    for (int64_t y = 0; y < 8; ++y)
      for (int64_t x = 0; x < 8; ++x)
        for (int c = 0; c < 3; ++c)
          CHECK(g.ca_wv_cir.values[(y * 8 + x) * 3 + c] ==
                s.b60.values[((g.origin_y / 6 + y) * 16 + (g.origin_x / 6 + x)) * 3 + c]);
  }
}

TEST_CASE("tile rejects misaligned scenes") {
  Scene s = patterned_scene(96);
  s.b20.width = 50;  // breaks the 2x relation
  s.b20.values.resize(50 * 48 * 6);
  CHECK_THROWS_WITH_AS(tile(s, 48), doctest::Contains("misaligned"), ValueError);
}

TEST_CASE("downsample_mask fixtures: uniform, ties, counting") {
  CloudMask uni;
  uni.width = 12;
  uni.height = 12;
  uni.labels.assign(144, 1);
  CHECK(downsample_mask(uni, 2).labels == std::vector<uint8_t>(36, 1));
  CHECK(downsample_mask(uni, 6).labels == std::vector<uint8_t>(4, 1));

  CloudMask tie;
  tie.width = 2;
  tie.height = 2;
  tie.labels = {1, 1, 0, 0};
  CHECK(downsample_mask(tie, 2).labels == std::vector<uint8_t>{1});

  // 6x6 window with 20 cloud / 16 clear
  CloudMask m66;
  m66.width = 6;
  m66.height = 6;
  m66.labels.assign(36, 0);
  for (int i = 0; i < 20; ++i) m66.labels[i] = 1;
  CHECK(downsample_mask(m66, 6).labels == std::vector<uint8_t>{1});

  // no-data excluded from the vote; all-no-data window stays no-data
  CloudMask nd;
  nd.width = 2;
  nd.height = 2;
  nd.labels = {255, 255, 255, 0};
  CHECK(downsample_mask(nd, 2).labels == std::vector<uint8_t>{0});
  nd.labels = {255, 255, 255, 255};
  CHECK(downsample_mask(nd, 2).labels == std::vector<uint8_t>{255});

  CloudMask odd;
  odd.width = 3;
  odd.height = 3;
  odd.labels.assign(9, 0);
  CHECK_THROWS_AS(downsample_mask(odd, 2), ShapeError);
}

TEST_CASE("downsample_mask equals a brute-force vote on 1000 random windows") {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> lab(0, 5);
  for (int factor : {2, 6}) {
    const int trials = 500;
    CloudMask m;
    m.width = factor;
    m.height = factor * trials;  // stack windows vertically
    m.labels.resize(m.width * m.height);
    const uint8_t lut[6] = {0, 1, 0, 1, 255, 0};
    for (auto& v : m.labels) v = lut[lab(rng)];
    CloudMask down = downsample_mask(m, factor);
    REQUIRE(down.labels.size() == size_t(trials));
    for (int t = 0; t < trials; ++t) {
      int cloud = 0, clear = 0;
      for (int y = 0; y < factor; ++y)
        for (int x = 0; x < factor; ++x) {
          uint8_t v = m.labels[(t * factor + y) * factor + x];
          if (v == 1) ++cloud;
          if (v == 0) ++clear;
        }
      uint8_t want = (cloud + clear == 0) ? 255 : (cloud >= clear ? 1 : 0);
      CHECK(down.labels[t] == want);
    }
  }
}

TEST_CASE("downsample commutes with flips and 180-degree rotation") {
  Scene s = patterned_scene(48);
  std::mt19937_64 rng(7);
  for (auto& v : s.mask.labels) v = rng() % 3 == 0 ? 1 : 0;
  auto g = tile(s, 48).at(0);
  for (Transform t : {Transform::hflip, Transform::vflip, Transform::rot180}) {
    PatchGroup tg = apply_transform(g, t);
    // downsample(T(mask10)) == T(downsample(mask10)) == tg.mask20
    CloudMask direct = downsample_mask(tg.mask10, 2);
    CHECK(direct.labels == tg.mask20.labels);
    CloudMask direct6 = downsample_mask(tg.mask10, 6);
    CHECK(direct6.labels == tg.mask60.labels);
  }
}

TEST_CASE("augment emits exactly 5 co-registered groups, seeded deterministically") {
  Scene s = patterned_scene(48);
  std::mt19937_64 rng(8);
  for (auto& v : s.mask.labels) v = rng() % 4 == 0 ? 1 : 0;
  PatchGroup g = tile(s, 48).at(0);

  auto a1 = augment(g, 123);
  auto a2 = augment(g, 123);
  auto a3 = augment(g, 124);
  REQUIRE(a1.size() == 5);
  CHECK(a1[0].transform == "id");
  bool same = true, differ = false;
  for (size_t i = 0; i < 5; ++i) {
    same = same && a1[i].transform == a2[i].transform;
    differ = differ || a1[i].transform != a3[i].transform;
  }
  CHECK(same);
  CHECK(differ);  // a different seed reorders the drawn transforms

  // cloud-pixel count at each level is invariant under every transform
  auto count_cloud = [](const CloudMask& m) {
    int64_t n = 0;
    for (uint8_t v : m.labels) n += v == 1;
    return n;
  };
  for (const auto& out : a1) {
    CHECK(count_cloud(out.mask10) == count_cloud(g.mask10));
    CHECK(count_cloud(out.mask20) == count_cloud(g.mask20));
    CHECK(count_cloud(out.mask60) == count_cloud(g.mask60));
  }
}

TEST_CASE("rot180 is an involution and h-flip matches the index oracle") {
  Scene s = patterned_scene(48);
  PatchGroup g = tile(s, 48).at(0);
  PatchGroup twice = apply_transform(apply_transform(g, Transform::rot180), Transform::rot180);
  CHECK(twice.vnir.values == g.vnir.values);
  CHECK(twice.vre_swir.values == g.vre_swir.values);
  CHECK(twice.ca_wv_cir.values == g.ca_wv_cir.values);
  CHECK(twice.mask10.labels == g.mask10.labels);

  PatchGroup flipped = apply_transform(g, Transform::hflip);
  auto check_flip = [](const BandStack& a, const BandStack& b) {
    for (int64_t y = 0; y < a.height; ++y)
      for (int64_t x = 0; x < a.width; ++x)
        for (int c = 0; c < a.channels; ++c)
          CHECK(b.values[(y * a.width + x) * a.channels + c] ==
                a.values[(y * a.width + (a.width - 1 - x)) * a.channels + c]);
  };
  check_flip(g.vnir, flipped.vnir);
  check_flip(g.vre_swir, flipped.vre_swir);
  check_flip(g.ca_wv_cir, flipped.ca_wv_cir);
  for (int64_t y = 0; y < 48; ++y)
    for (int64_t x = 0; x < 48; ++x)
      CHECK(flipped.mask10.labels[y * 48 + x] == g.mask10.labels[y * 48 + (47 - x)]);
}

TEST_CASE("synth: identical seeds give identical datasets, different seeds differ") {
  SynthConfig cfg;
  cfg.seed = 99;
  cfg.n_scenes = 2;
  cfg.size = 48;
  auto a = synth_dataset(cfg);
  auto b = synth_dataset(cfg);
  REQUIRE(a.size() == 2);
  CHECK(a[0].b10.values == b[0].b10.values);
  CHECK(a[1].b60.values == b[1].b60.values);
  CHECK(a[0].mask.labels == b[0].mask.labels);
  cfg.seed = 100;
  auto c = synth_dataset(cfg);
  CHECK(a[0].b10.values != c[0].b10.values);
}

TEST_CASE("synth: cloud fraction honors the configured band") {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.n_scenes = 6;
  cfg.size = 60;
  cfg.cloud_fraction_lo = 0.10;
  cfg.cloud_fraction_hi = 0.45;
  for (const Scene& s : synth_dataset(cfg)) {
    int64_t cloud = 0;
    for (uint8_t v : s.mask.labels) cloud += v == 1;
    double frac = double(cloud) / double(s.mask.labels.size());
    CHECK(frac >= cfg.cloud_fraction_lo);
    CHECK(frac <= cfg.cloud_fraction_hi);
  }
}

TEST_CASE("synth: emitted stacks are exact block means of the latent fields") {
  SynthConfig cfg;
  cfg.seed = 17;
  cfg.n_scenes = 2;
  cfg.size = 48;
  for (const SynthScene& ss : synth_dataset_full(cfg)) {
    CHECK(ss.scene.b20.values == block_mean(ss.latent_vsw, cfg.size, 6, 2));
    CHECK(ss.scene.b60.values == block_mean(ss.latent_cwc, cfg.size, 3, 6));
    ss.scene.validate();
  }
}

TEST_CASE("patch group disk round-trip via the manifest line") {
  fs::path dir = fs::temp_directory_path() / "cdfm3sf_patch_io";
  fs::create_directories(dir);
  Scene s = patterned_scene(48);
  PatchGroup g = tile(s, 48).at(0);
  g.transform = "rot90";
  std::string line;
  write_patch_group(g, dir.string(), &line);
  PatchGroup r = read_patch_group_line(line, dir.string());
  CHECK(r.vnir.values == g.vnir.values);
  CHECK(r.vre_swir.values == g.vre_swir.values);
  CHECK(r.ca_wv_cir.values == g.ca_wv_cir.values);
  CHECK(r.mask10.labels == g.mask10.labels);
  CHECK(r.mask20.labels == g.mask20.labels);
  CHECK(r.mask60.labels == g.mask60.labels);
  CHECK(r.scene_id == g.scene_id);
  CHECK(r.origin_x == g.origin_x);
  CHECK(r.origin_y == g.origin_y);
  CHECK(r.transform == "rot90");
  fs::remove_all(dir);
}
