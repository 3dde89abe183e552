// cdfm3sf command-line front end: dataset synthesis, patch preparation,
// training, full-scene inference, evaluation, and the parameter audit.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numerical failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdfm3sf/checkpoint.hpp"
#include "cdfm3sf/metrics.hpp"
#include "cdfm3sf/model.hpp"
#include "cdfm3sf/parallel.hpp"
#include "cdfm3sf/synth.hpp"
#include "cdfm3sf/train.hpp"

using namespace cdfm3sf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct ManifestWriter {
  json j;
  std::string path;
  ManifestWriter(const std::string& subcommand, const std::string& out_dir) {
    j["subcommand"] = subcommand;
    j["tool_version"] = kToolVersion;
    j["start"] = iso_now();
    path = out_dir + "/manifest.json";
  }
  void finish() {
    j["end"] = iso_now();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write manifest '" + path + "'");
    f << j.dump(2) << "\n";
  }
};

struct SceneEntry {
  std::string id, b10, b20, b60, mask;
};

std::vector<SceneEntry> read_scene_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open scene manifest '" + path + "'");
  std::string dir = fs::path(path).parent_path().string();
  if (dir.empty()) dir = ".";
  auto resolve = [&](const std::string& p) { return p.starts_with('/') ? p : dir + "/" + p; };
  std::vector<SceneEntry> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    SceneEntry e;
    if (!(std::getline(is, e.id, '\t') && std::getline(is, e.b10, '\t') &&
          std::getline(is, e.b20, '\t') && std::getline(is, e.b60, '\t') &&
          std::getline(is, e.mask)))
      throw IoError("malformed scene manifest line: " + line);
    e.b10 = resolve(e.b10);
    e.b20 = resolve(e.b20);
    e.b60 = resolve(e.b60);
    e.mask = resolve(e.mask);
    out.push_back(std::move(e));
  }
  check(!out.empty(), "scene manifest '" + path + "' lists no scenes");
  return out;
}

BandStack load_normalized(const std::string& path) {
  BandStack s = read_bandstack(path);
  if (s.dtype == BstkDtype::u16_raw) return normalize(s);
  check(s.dtype == BstkDtype::f32, "'" + path + "' is a mask, expected a band stack");
  return s;
}

Scene load_scene(const SceneEntry& e) {
  Scene s;
  s.id = e.id;
  s.b10 = load_normalized(e.b10);
  s.b20 = load_normalized(e.b20);
  s.b60 = load_normalized(e.b60);
  s.mask = read_mask(e.mask);
  s.validate();
  return s;
}

// flat key=value config files; '#' comments
std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    check(eq != std::string::npos, "config line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

json model_config_json(const ModelConfig& mc) {
  return json{{"variant", variant_name(mc.variant)},
              {"width", mc.width},
              {"deconv_width", mc.deconv_width}};
}

void write_model_sidecar(const ModelConfig& mc, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write model config '" + path + "'");
  f << model_config_json(mc).dump(2) << "\n";
}

ModelConfig read_model_sidecar(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open model config '" + path + "'");
  json j = json::parse(f);
  ModelConfig mc;
  mc.variant = variant_from_name(j.at("variant").get<std::string>());
  mc.width = j.at("width").get<int64_t>();
  mc.deconv_width = j.at("deconv_width").get<int64_t>();
  return mc;
}

std::string sidecar_for(const std::string& ckpt_path) {
  fs::path p(ckpt_path);
  return (p.parent_path() / "model.json").string();
}

Tensor stack_window_tensor(const BandStack& s, int64_t x0, int64_t y0, int64_t w, int64_t h) {
  Tensor t({1, h, w, s.channels});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int c = 0; c < s.channels; ++c)
        t.data()[((y * w) + x) * s.channels + c] =
            static_cast<real>(s.values[((y0 + y) * s.width + x0 + x) * s.channels + c]);
  return t;
}

// ---------------------------------------------------------------- synth ----

int cmd_synth(uint64_t seed, int scenes, int64_t size, double cloud_lo, double cloud_hi,
              const std::string& out) {
  fs::create_directories(out);
  ManifestWriter mani("synth", out);
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_scenes = scenes;
  cfg.size = size;
  cfg.cloud_fraction_lo = cloud_lo;
  cfg.cloud_fraction_hi = cloud_hi;
  auto data = synth_dataset(cfg);

  std::ofstream tsv(out + "/scenes.tsv", std::ios::trunc);
  for (const Scene& s : data) {
    write_bandstack(s.b10, out + "/" + s.id + "_b10.bstk");
    write_bandstack(s.b20, out + "/" + s.id + "_b20.bstk");
    write_bandstack(s.b60, out + "/" + s.id + "_b60.bstk");
    write_mask(s.mask, out + "/" + s.id + "_mask.bstk");
    tsv << s.id << '\t' << s.id << "_b10.bstk" << '\t' << s.id << "_b20.bstk" << '\t' << s.id
        << "_b60.bstk" << '\t' << s.id << "_mask.bstk" << "\n";
  }
  mani.j["config"] = {{"seed", seed},          {"scenes", scenes},
                      {"size", size},          {"cloud_fraction_lo", cloud_lo},
                      {"cloud_fraction_hi", cloud_hi}};
  mani.j["outputs"] = {{"scene_manifest", "scenes.tsv"}, {"scene_count", data.size()}};
  mani.finish();
  std::cout << "wrote " << data.size() << " scenes under " << out << "\n";
  return 0;
}

// -------------------------------------------------------------- prepare ----

int cmd_prepare(const std::string& scenes_path, const std::string& out, int window,
                bool no_augment, uint64_t seed) {
  fs::create_directories(out);
  ManifestWriter mani("prepare", out);
  auto entries = read_scene_manifest(scenes_path);

  std::ofstream tsv(out + "/patches.tsv", std::ios::trunc);
  size_t groups_written = 0;
  for (const auto& e : entries) {
    Scene scene = load_scene(e);
    for (const PatchGroup& g : tile(scene, window)) {
      if (no_augment) {
        std::string line;
        write_patch_group(g, out, &line);
        tsv << line << "\n";
        ++groups_written;
      } else {
        uint64_t gs = group_seed(seed, g.scene_id, g.origin_x, g.origin_y);
        for (const PatchGroup& a : augment(g, gs)) {
          std::string line;
          write_patch_group(a, out, &line);
          tsv << line << "\n";
          ++groups_written;
        }
      }
    }
  }
  check(groups_written > 0, "no patch groups produced (scenes smaller than the window?)");
  mani.j["config"] = {{"scenes", scenes_path},
                      {"window", window},
                      {"augment", !no_augment},
                      {"seed", seed}};
  mani.j["outputs"] = {{"patch_manifest", "patches.tsv"},
                       {"patch_groups", groups_written}};
  mani.finish();
  std::cout << "wrote " << groups_written << " patch groups under " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------- train ----

int cmd_train(const std::string& data_path, const std::string& out,
              const std::string& config_path, ModelConfig mc, TrainConfig tc,
              const std::set<std::string>& explicit_flags) {
  // key=value config file provides values; any explicit CLI flag overrides
  if (!config_path.empty()) {
    auto kv = read_kv_config(config_path);
    auto get = [&](const char* key, auto& slot, auto parse) {
      auto it = kv.find(key);
      if (it != kv.end() && !explicit_flags.count(key)) slot = parse(it->second);
    };
    auto to_i = [](const std::string& v) { return std::stoi(v); };
    auto to_i64 = [](const std::string& v) { return std::stoll(v); };
    auto to_r = [](const std::string& v) { return static_cast<real>(std::stod(v)); };
    auto to_u = [](const std::string& v) { return std::stoull(v); };
    get("variant", mc.variant, [](const std::string& v) { return variant_from_name(v); });
    get("width", mc.width, to_i64);
    get("deconv_width", mc.deconv_width, to_i64);
    get("batch_size", tc.batch_size, to_i);
    get("epochs", tc.epochs, to_i);
    get("beta1", tc.beta1, to_r);
    get("beta2", tc.beta2, to_r);
    get("lr0", tc.lr0, to_r);
    get("decay_rate", tc.decay_rate, to_r);
    get("decay_step", tc.decay_step, to_i);
    get("adam_eps", tc.adam_eps, to_r);
    get("w_top", tc.w_top, to_r);
    get("w_mid", tc.w_mid, to_r);
    get("w_bot", tc.w_bot, to_r);
    get("seed", tc.seed, to_u);
    get("max_steps", tc.max_steps, to_i);
  }
  fs::create_directories(out);
  ManifestWriter mani("train", out);

  std::vector<TrainSample> samples;
  for (const PatchGroup& g : read_patch_manifest(data_path)) samples.push_back(g.to_sample());

  Model model = Model::build(mc, tc.seed);
  std::string ckpt = out + "/model.ckpt";
  write_model_sidecar(mc, out + "/model.json");
  TrainResult res = train(model, samples, tc, out + "/loss.tsv", ckpt);

  mani.j["config"] = {{"model", model_config_json(mc)},
                      {"batch_size", tc.batch_size},
                      {"epochs", tc.epochs},
                      {"beta1", tc.beta1},
                      {"beta2", tc.beta2},
                      {"lr0", tc.lr0},
                      {"decay_rate", tc.decay_rate},
                      {"decay_step", tc.decay_step},
                      {"decay_unit", "epoch"},
                      {"adam_eps", tc.adam_eps},
                      {"loss_weights", {tc.w_top, tc.w_mid, tc.w_bot}},
                      {"seed", tc.seed},
                      {"max_steps", tc.max_steps}};
  mani.j["inputs"] = {{"patch_manifest", data_path}, {"samples", samples.size()}};
  mani.j["outputs"] = {{"checkpoint", "model.ckpt"},
                       {"model_config", "model.json"},
                       {"loss_log", "loss.tsv"},
                       {"steps", res.steps},
                       {"final_total_loss",
                        res.history.empty() ? 0.0 : double(res.history.back().total)},
                       {"halted_non_finite", res.halted_non_finite}};
  mani.finish();
  if (res.halted_non_finite) {
    std::cerr << "training halted: non-finite loss at step " << res.steps
              << "; last epoch checkpoint retained\n";
    return 3;
  }
  std::cout << "trained " << res.steps << " steps; final L_total "
            << (res.history.empty() ? 0.0 : double(res.history.back().total)) << "\n";
  return 0;
}

// ---------------------------------------------------------------- infer ----

int cmd_infer(const std::string& ckpt_path, const std::string& config_path,
              const std::string& scenes_path, const std::string& scene_id, const std::string& out,
              double threshold, int window_flag) {
  fs::create_directories(out);
  ManifestWriter mani("infer", out);

  ModelConfig mc = read_model_sidecar(config_path.empty() ? sidecar_for(ckpt_path) : config_path);
  Model model = Model::build(mc, 0);
  model.load_parameters(load_checkpoint(ckpt_path));

  auto entries = read_scene_manifest(scenes_path);
  json scene_outputs = json::array();
  for (const auto& e : entries) {
    if (!scene_id.empty() && e.id != scene_id) continue;
    Scene scene = load_scene(e);
    const int64_t W = scene.b10.width, H = scene.b10.height;
    check_shape(W % 12 == 0 && H % 12 == 0,
                "scene '" + e.id + "': 10 m extent must be a multiple of 12 for inference");

    int64_t window = window_flag > 0 ? window_flag : 384;
    window = std::min<int64_t>(window, std::min(W, H));
    window -= window % 12;
    check(window >= 12, "scene too small for a 12-pixel window");
    const int64_t step = std::max<int64_t>(window / 2, 6);

    std::vector<double> prob_sum(W * H, 0.0);
    std::vector<int32_t> hits(W * H, 0);
    auto origins = [&](int64_t extent) {
      std::vector<int64_t> v;
      for (int64_t o = 0;; o += step) {
        if (o + window >= extent) {
          v.push_back(extent - window);  // clamp; extent and window are multiples of 6
          break;
        }
        v.push_back(o);
      }
      return v;
    };
    for (int64_t oy : origins(H))
      for (int64_t ox : origins(W)) {
        PatchBatch in;
        in.vnir = stack_window_tensor(scene.b10, ox, oy, window, window);
        if (mc.has_middle_branch())
          in.vre_swir = stack_window_tensor(scene.b20, ox / 2, oy / 2, window / 2, window / 2);
        if (mc.has_bottom_branch())
          in.ca_wv_cir = stack_window_tensor(scene.b60, ox / 6, oy / 6, window / 6, window / 6);
        Tensor prob = model.forward(in, false).top;
        for (int64_t y = 0; y < window; ++y)
          for (int64_t x = 0; x < window; ++x) {
            prob_sum[(oy + y) * W + ox + x] += double(prob.data()[(y * window + x)]);
            hits[(oy + y) * W + ox + x] += 1;
          }
      }

    BandStack prob_map;
    prob_map.width = W;
    prob_map.height = H;
    prob_map.channels = 1;
    prob_map.res = Resolution::r10m;
    prob_map.dtype = BstkDtype::f32;
    prob_map.values.resize(W * H);
    CloudMask mask;
    mask.width = W;
    mask.height = H;
    mask.res = Resolution::r10m;
    mask.labels.resize(W * H);
    for (int64_t i = 0; i < W * H; ++i) {
      check(hits[i] > 0, "inference left uncovered pixels (internal tiling error)");
      double p = prob_sum[i] / hits[i];
      prob_map.values[i] = static_cast<float>(p);
      mask.labels[i] = p >= threshold ? 1 : 0;
    }
    std::string prob_path = out + "/" + e.id + "_prob.bstk";
    std::string mask_path = out + "/" + e.id + "_mask.bstk";
    write_bandstack(prob_map, prob_path);
    write_mask(mask, mask_path);
    scene_outputs.push_back({{"scene", e.id},
                             {"prob", e.id + "_prob.bstk"},
                             {"mask", e.id + "_mask.bstk"},
                             {"window", window}});
  }
  check(!scene_outputs.empty(), "no scene matched id '" + scene_id + "'");
  mani.j["config"] = {{"checkpoint", ckpt_path},
                      {"model", model_config_json(mc)},
                      {"threshold", threshold},
                      {"window", window_flag}};
  mani.j["outputs"] = scene_outputs;
  mani.finish();
  std::cout << "inferred " << scene_outputs.size() << " scene(s) under " << out << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval ----

int cmd_eval(const std::string& pred_path, const std::string& ref_path,
             const std::string& curves_prefix, double threshold, const std::string& out_dir) {
  std::string dir = out_dir.empty() ? "." : out_dir;
  fs::create_directories(dir);
  ManifestWriter mani("eval", dir);

  CloudMask ref = read_mask(ref_path);
  BandStack pred = read_bandstack(pred_path);
  check_shape(pred.width == ref.width && pred.height == ref.height && pred.channels == 1,
              "eval: prediction and reference extents differ: " + std::to_string(pred.width) +
                  "x" + std::to_string(pred.height) + " vs " + std::to_string(ref.width) + "x" +
                  std::to_string(ref.height));

  std::vector<uint8_t> binary(pred.pixel_count());
  std::vector<float> prob;
  if (pred.dtype == BstkDtype::f32) {
    prob = pred.values;
    for (size_t i = 0; i < binary.size(); ++i) binary[i] = prob[i] >= threshold ? 1 : 0;
  } else {
    check(pred.dtype == BstkDtype::u8_mask,
          "eval: prediction must be f32 probabilities or a u8 mask");
    for (size_t i = 0; i < binary.size(); ++i) binary[i] = pred.labels[i] != 0;
  }

  Scores s = scores(confusion(binary, ref));
  std::cout << scores_table(s);
  std::ofstream report(dir + "/metrics.tsv", std::ios::trunc);
  report << scores_tsv(s);

  mani.j["config"] = {{"pred", pred_path}, {"ref", ref_path}, {"threshold", threshold}};
  mani.j["outputs"] = {{"metrics", "metrics.tsv"}};
  if (!curves_prefix.empty()) {
    check(!prob.empty(), "eval: --curves needs a probability map, not a binary mask");
    CurveSweep sweep = curves(prob, ref);
    auto dump = [&](const std::vector<CurvePoint>& pts, const std::string& path) {
      std::ofstream f(path, std::ios::trunc);
      f << "threshold\tx\ty\n";
      char line[96];
      for (const auto& p : pts) {
        std::snprintf(line, sizeof(line), "%.2f\t%.6f\t%.6f\n", p.threshold, p.x, p.y);
        f << line;
      }
    };
    std::string roc_path = curves_prefix + "_roc.tsv";
    std::string uapa_path = curves_prefix + "_uapa.tsv";
    dump(sweep.roc, roc_path);
    dump(sweep.uapa, uapa_path);
    double roc_auc = auc(sweep.roc, true);
    double uapa_auc = auc(sweep.uapa, false);
    std::cout << "roc auc " << roc_auc << "  ua-pa auc " << uapa_auc << "\n";
    mani.j["outputs"]["roc"] = roc_path;
    mani.j["outputs"]["uapa"] = uapa_path;
    mani.j["outputs"]["roc_auc"] = roc_auc;
    mani.j["outputs"]["uapa_auc"] = uapa_auc;
  }
  mani.j["outputs"]["scores"] = {{"oa", s.oa},
                                 {"precision", s.precision},
                                 {"recall", s.recall},
                                 {"f1", s.f1},
                                 {"iou", s.iou}};
  mani.finish();
  return 0;
}

// ---------------------------------------------------------------- audit ----

int cmd_audit(const std::string& config_path, const std::string& ckpt_path, ModelConfig mc,
              const std::string& out_path) {
  if (!ckpt_path.empty()) {
    mc = read_model_sidecar(config_path.empty() ? sidecar_for(ckpt_path) : config_path);
  } else if (!config_path.empty()) {
    mc = read_model_sidecar(config_path);
  }
  Model model = Model::build(mc, 0);
  if (!ckpt_path.empty()) model.load_parameters(load_checkpoint(ckpt_path));

  AuditReport rep = model.audit();
  std::cout << "variant " << variant_name(mc.variant) << ", width " << mc.width
            << ", deconv width " << mc.deconv_width << "\n";
  std::cout << rep.table();
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw IoError("cannot write audit report '" + out_path + "'");
    f << rep.tsv();
  }
  if (!rep.consistent()) {
    std::cerr << "audit: instantiated parameter counts disagree with their layer specs\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CD-FM3SF multi-resolution cloud detection"};
  app.require_subcommand(1);

  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--threads", threads, "worker threads (1 = fully serial)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic band-stack dataset");
  uint64_t sy_seed = 0;
  int sy_scenes = 4;
  int64_t sy_size = 96;
  double sy_lo = 0.05, sy_hi = 0.60;
  std::string sy_out;
  synth->add_option("--seed", sy_seed, "RNG seed");
  synth->add_option("--scenes", sy_scenes, "number of scenes");
  synth->add_option("--size", sy_size, "10 m scene extent (multiple of 12)");
  synth->add_option("--cloud-lo", sy_lo, "min cloud fraction per scene");
  synth->add_option("--cloud-hi", sy_hi, "max cloud fraction per scene");
  synth->add_option("--out", sy_out, "output directory")->required();

  auto* prepare = app.add_subcommand("prepare", "tile scenes into training patch groups");
  std::string pr_scenes, pr_out;
  int pr_window = 384;
  bool pr_no_augment = false;
  uint64_t pr_seed = 0;
  prepare->add_option("--scenes", pr_scenes, "scenes.tsv manifest")->required();
  prepare->add_option("--out", pr_out, "output directory")->required();
  prepare->add_option("--window", pr_window, "10 m window edge (multiple of 12)");
  prepare->add_flag("--no-augment", pr_no_augment, "skip the x5 augmentation");
  prepare->add_option("--seed", pr_seed, "augmentation seed");

  auto* train_cmd = app.add_subcommand("train", "train a model on prepared patches");
  std::string tr_data, tr_out, tr_config;
  ModelConfig tr_mc;
  TrainConfig tr_tc;
  std::string tr_variant = "full13";
  train_cmd->add_option("--data", tr_data, "patches.tsv manifest")->required();
  train_cmd->add_option("--out", tr_out, "output directory")->required();
  train_cmd->add_option("--config", tr_config, "key=value config file");
  train_cmd->add_option("--variant", tr_variant, "full13 | vnir_swir10 | vnir4");
  train_cmd->add_option("--width", tr_mc.width, "feature width");
  train_cmd->add_option("--deconv-width", tr_mc.deconv_width, "deconv output maps");
  train_cmd->add_option("--batch", tr_tc.batch_size, "batch size");
  train_cmd->add_option("--epochs", tr_tc.epochs, "epochs");
  train_cmd->add_option("--lr", tr_tc.lr0, "initial learning rate");
  train_cmd->add_option("--seed", tr_tc.seed, "run seed");
  train_cmd->add_option("--max-steps", tr_tc.max_steps, "stop after this many steps (0 = all)");

  auto* infer = app.add_subcommand("infer", "full-scene sliding-window inference");
  std::string in_ckpt, in_config, in_scenes, in_scene_id, in_out;
  double in_threshold = 0.5;
  int in_window = 0;
  infer->add_option("--checkpoint", in_ckpt, "model checkpoint")->required();
  infer->add_option("--config", in_config, "model config json (default: sibling model.json)");
  infer->add_option("--scenes", in_scenes, "scenes.tsv manifest")->required();
  infer->add_option("--scene-id", in_scene_id, "restrict to one scene id");
  infer->add_option("--out", in_out, "output directory")->required();
  infer->add_option("--threshold", in_threshold, "binarization threshold");
  infer->add_option("--window", in_window, "window edge override (default 384, clamped)");

  auto* eval_cmd = app.add_subcommand("eval", "score a prediction against a reference mask");
  std::string ev_pred, ev_ref, ev_curves, ev_out;
  double ev_threshold = 0.5;
  eval_cmd->add_option("--pred", ev_pred, "probability map or binary mask (BSTK)")->required();
  eval_cmd->add_option("--ref", ev_ref, "reference mask (BSTK)")->required();
  eval_cmd->add_option("--curves", ev_curves, "write ROC / UA-PA sweeps with this path prefix");
  eval_cmd->add_option("--threshold", ev_threshold, "operating threshold for scalar metrics");
  eval_cmd->add_option("--out", ev_out, "output directory (default .)");

  auto* audit = app.add_subcommand("audit", "per-layer parameter-count audit");
  std::string au_config, au_ckpt, au_out;
  ModelConfig au_mc;
  std::string au_variant = "full13";
  audit->add_option("--config", au_config, "model config json");
  audit->add_option("--checkpoint", au_ckpt, "audit the model behind a checkpoint");
  audit->add_option("--variant", au_variant, "full13 | vnir_swir10 | vnir4");
  audit->add_option("--width", au_mc.width, "feature width");
  audit->add_option("--deconv-width", au_mc.deconv_width, "deconv output maps");
  audit->add_option("--out", au_out, "write the machine-readable table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }
  set_num_threads(threads);

  try {
    if (*synth) return cmd_synth(sy_seed, sy_scenes, sy_size, sy_lo, sy_hi, sy_out);
    if (*prepare) return cmd_prepare(pr_scenes, pr_out, pr_window, pr_no_augment, pr_seed);
    if (*train_cmd) {
      tr_mc.variant = variant_from_name(tr_variant);
      std::set<std::string> explicit_flags;
      const std::pair<const char*, const char*> flag_map[] = {
          {"--variant", "variant"},  {"--width", "width"},
          {"--deconv-width", "deconv_width"}, {"--batch", "batch_size"},
          {"--epochs", "epochs"},    {"--lr", "lr0"},
          {"--seed", "seed"},        {"--max-steps", "max_steps"}};
      for (auto& [flag, key] : flag_map)
        if (train_cmd->count(flag)) explicit_flags.insert(key);
      return cmd_train(tr_data, tr_out, tr_config, tr_mc, tr_tc, explicit_flags);
    }
    if (*infer)
      return cmd_infer(in_ckpt, in_config, in_scenes, in_scene_id, in_out, in_threshold,
                       in_window);
    if (*eval_cmd) return cmd_eval(ev_pred, ev_ref, ev_curves, ev_threshold, ev_out);
    if (*audit) {
      au_mc.variant = variant_from_name(au_variant);
      return cmd_audit(au_config, au_ckpt, au_mc, au_out);
    }
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValueError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
