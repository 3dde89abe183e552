#include "cdfm3sf/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace cdfm3sf {

void SynthConfig::validate() const {
  check(n_scenes >= 1, "synth: need at least one scene");
  check(size >= 12 && size % 12 == 0, "synth: size must be a positive multiple of 12");
  check(cloud_fraction_lo >= 0 && cloud_fraction_hi <= 1 &&
            cloud_fraction_lo < cloud_fraction_hi,
        "synth: cloud fraction band must satisfy 0 <= lo < hi <= 1");
}

std::vector<float> block_mean(const std::vector<float>& field, int64_t size, int channels,
                              int factor) {
  check(size % factor == 0, "block_mean: size not divisible by factor");
  const int64_t out_n = size / factor;
  std::vector<float> out(out_n * out_n * channels);
  const double inv = 1.0 / (double(factor) * factor);
  for (int64_t oy = 0; oy < out_n; ++oy)
    for (int64_t ox = 0; ox < out_n; ++ox)
      for (int c = 0; c < channels; ++c) {
        double acc = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            acc += field[((oy * factor + dy) * size + ox * factor + dx) * channels + c];
        out[(oy * out_n + ox) * channels + c] = static_cast<float>(acc * inv);
      }
  return out;
}

namespace {

struct Ellipse {
  double cy, cx, ry, rx;
};

// smooth background + clouds for one band group; opacity shared across groups
std::vector<float> render_group(int64_t size, int channels, const std::vector<double>& opacity,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ubase(0.05, 0.30);
  std::uniform_real_distribution<double> uamp(0.01, 0.05);
  std::uniform_real_distribution<double> ufreq(0.5, 2.5);
  std::uniform_real_distribution<double> uphase(0.0, 6.28318530717958648);
  std::uniform_real_distribution<double> ucloud(0.70, 0.95);

  std::vector<float> field(size * size * channels);
  for (int c = 0; c < channels; ++c) {
    double base = ubase(rng);
    double a1 = uamp(rng), f1y = ufreq(rng), f1x = ufreq(rng), p1 = uphase(rng);
    double a2 = uamp(rng), f2y = ufreq(rng), f2x = ufreq(rng), p2 = uphase(rng);
    double bright = ucloud(rng);
    for (int64_t y = 0; y < size; ++y)
      for (int64_t x = 0; x < size; ++x) {
        double fy = double(y) / double(size), fx = double(x) / double(size);
        double bg = base + a1 * std::cos(6.2831853 * (f1y * fy + f1x * fx) + p1) +
                    a2 * std::cos(6.2831853 * (f2y * fy + f2x * fx) + p2);
        if (bg < 0.02) bg = 0.02;
        double o = opacity[y * size + x];
        field[(y * size + x) * channels + c] = static_cast<float>(bg * (1.0 - o) + bright * o);
      }
  }
  return field;
}

}  // namespace

std::vector<SynthScene> synth_dataset_full(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> n_clouds_dist(2, 5);
  std::uniform_real_distribution<double> ucenter(0.0, 1.0);

  std::vector<SynthScene> out;
  const int64_t n = cfg.size;
  for (int s = 0; s < cfg.n_scenes; ++s) {
    for (int attempt = 0;; ++attempt) {
      check(attempt < 64, "synth: could not hit the cloud-fraction band after 64 draws");

      std::vector<double> opacity(n * n, 0.0);
      int n_clouds = n_clouds_dist(rng);
      std::uniform_real_distribution<double> uradius(double(n) / 12.0, double(n) / 4.0);
      for (int e = 0; e < n_clouds; ++e) {
        Ellipse el{ucenter(rng) * n, ucenter(rng) * n, uradius(rng), uradius(rng)};
        for (int64_t y = 0; y < n; ++y)
          for (int64_t x = 0; x < n; ++x) {
            double dy = (y - el.cy) / el.ry, dx = (x - el.cx) / el.rx;
            double o = std::exp(-2.0 * (dy * dy + dx * dx));
            if (o > opacity[y * n + x]) opacity[y * n + x] = o;
          }
      }

      CloudMask mask;
      mask.width = n;
      mask.height = n;
      mask.res = Resolution::r10m;
      mask.labels.resize(n * n);
      int64_t cloud_px = 0;
      for (int64_t i = 0; i < n * n; ++i) {
        mask.labels[i] = opacity[i] > 0.5 ? 1 : 0;
        cloud_px += mask.labels[i];
      }
      double frac = double(cloud_px) / double(n * n);
      if (frac < cfg.cloud_fraction_lo || frac > cfg.cloud_fraction_hi) continue;

      SynthScene ss;
      std::vector<float> vnir = render_group(n, 4, opacity, rng);
      ss.latent_vsw = render_group(n, 6, opacity, rng);
      ss.latent_cwc = render_group(n, 3, opacity, rng);

      char id[32];
      std::snprintf(id, sizeof(id), "scene_%04d", s);
      ss.scene.id = id;
      auto make_stack = [&](std::vector<float> v, int channels, Resolution res,
                            int64_t extent) {
        BandStack b;
        b.width = extent;
        b.height = extent;
        b.channels = channels;
        b.res = res;
        b.dtype = BstkDtype::f32;
        b.values = std::move(v);
        return b;
      };
      ss.scene.b10 = make_stack(std::move(vnir), 4, Resolution::r10m, n);
      ss.scene.b20 = make_stack(block_mean(ss.latent_vsw, n, 6, 2), 6, Resolution::r20m, n / 2);
      ss.scene.b60 = make_stack(block_mean(ss.latent_cwc, n, 3, 6), 3, Resolution::r60m, n / 6);
      ss.scene.mask = std::move(mask);
      out.push_back(std::move(ss));
      break;
    }
  }
  return out;
}

std::vector<Scene> synth_dataset(const SynthConfig& cfg) {
  std::vector<Scene> scenes;
  for (auto& ss : synth_dataset_full(cfg)) scenes.push_back(std::move(ss.scene));
  return scenes;
}

}  // namespace cdfm3sf
