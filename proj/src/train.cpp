#include "cdfm3sf/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "cdfm3sf/checkpoint.hpp"

namespace cdfm3sf {

void TrainConfig::validate() const {
  check(batch_size >= 1 && epochs >= 0, "train config: batch_size/epochs out of range");
  check(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1, "train config: betas must be in (0,1)");
  check(lr0 > 0 && decay_rate > 0 && decay_rate <= 1, "train config: rates must be in (0,1]");
  check(decay_step >= 1, "train config: decay_step must be >= 1");
  check(w_top >= 0 && w_mid >= 0 && w_bot >= 0, "train config: loss weights must be nonnegative");
}

Tensor bce_loss(const Tensor& pred, const Tensor& ref) {
  check_same_shape(pred, ref, "bce_loss");
  const real lo = real(1e-7), hi = real(1) - real(1e-7);
  const real* P = pred.data();
  const real* R = ref.data();
  const int64_t n = pred.size();

  int64_t valid = 0;
  real acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    real y = R[i];
    if (y == kNoData) continue;
    check(y == 0 || y == 1,
          "bce_loss: reference value " + std::to_string(y) + " is not in {0, 1, no-data}");
    real p = std::min(std::max(P[i], lo), hi);
    acc += y * std::log(p) + (1 - y) * std::log(1 - p);
    ++valid;
  }
  check(valid > 0, "bce_loss: no valid reference pixels");
  Tensor loss = Tensor::scalar(-acc / real(valid));

  if (recording() && pred.requires_grad()) {
    loss.set_requires_grad(true);
    Tensor pc = pred, rc = ref, lc = loss;
    Tape::current()->record(loss, [pc, rc, lc, valid, lo, hi]() mutable {
      if (!lc.has_grad()) return;
      real g = lc.grad_data()[0];
      const real* P = pc.data();
      const real* R = rc.data();
      real* dP = pc.grad_data();
      real inv = real(1) / real(valid);
      for (int64_t i = 0; i < pc.size(); ++i) {
        real y = R[i];
        if (y == kNoData) continue;
        real p = P[i];
        if (p <= lo || p >= hi) continue;  // clamped region, zero slope
        dP[i] += g * (-(y / p - (1 - y) / (1 - p)) * inv);
      }
    });
  }
  return loss;
}

Tensor total_loss(const MaskPyramid& pred, const MaskPyramid& ref, real w_top, real w_mid,
                  real w_bot) {
  Tensor lt = bce_loss(pred.top, ref.top);
  Tensor lm = bce_loss(pred.middle, ref.middle);
  Tensor lb = bce_loss(pred.bottom, ref.bottom);
  return add(scale(lt, w_top), add(scale(lm, w_mid), scale(lb, w_bot)));
}

real lr_at(int index, const TrainConfig& cfg) {
  check(index >= 0, "lr_at: index must be nonnegative");
  return cfg.lr0 * std::pow(cfg.decay_rate, real(index / cfg.decay_step));
}

Adam::Adam(const std::vector<ParamEntry>& params, real beta1, real beta2, real eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  slots_.resize(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    slots_[i].m.assign(params[i].tensor.size(), 0);
    slots_[i].v.assign(params[i].tensor.size(), 0);
  }
}

void Adam::step(std::vector<ParamEntry>& params, real lr) {
  check(params.size() == slots_.size(), "adam: parameter list changed size");
  for (const auto& p : params) {
    if (!p.trainable) continue;
    const auto& g = p.tensor.grad_vec();
    for (real gi : g)
      if (!std::isfinite(gi))
        throw ValueError("adam: non-finite gradient for parameter '" + p.name + "'");
  }
  ++t_;
  const real bc1 = 1 - std::pow(beta1_, real(t_));
  const real bc2 = 1 - std::pow(beta2_, real(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    Tensor& t = params[i].tensor;
    real* w = t.data();
    const real* g = t.grad_data();
    auto& m = slots_[i].m;
    auto& v = slots_[i].v;
    for (int64_t j = 0; j < t.size(); ++j) {
      m[j] = beta1_ * m[j] + (1 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1 - beta2_) * g[j] * g[j];
      real mhat = m[j] / bc1;
      real vhat = v[j] / bc2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

namespace {

Tensor stack_samples(const std::vector<const Tensor*>& ts) {
  const Tensor& first = *ts.front();
  check_shape(first.rank() == 3, "train: sample tensors must be h,w,c");
  Shape out_shape = {static_cast<int64_t>(ts.size()), first.dim(0), first.dim(1), first.dim(2)};
  Tensor out(out_shape);
  real* dst = out.data();
  for (const Tensor* t : ts) {
    check_shape(t->shape() == first.shape(), "train: samples in one batch must share shapes");
    std::copy(t->data(), t->data() + t->size(), dst);
    dst += t->size();
  }
  return out;
}

std::string manifest_json(const TrainConfig& cfg, size_t n_samples, const ModelConfig& mc) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\"variant\":\"%s\",\"width\":%lld,\"deconv_width\":%lld,\"batch_size\":%d,"
                "\"epochs\":%d,\"beta1\":%g,\"beta2\":%g,\"lr0\":%g,\"decay_rate\":%g,"
                "\"decay_step\":%d,\"decay_unit\":\"epoch\",\"adam_eps\":%g,"
                "\"loss_weights\":[%g,%g,%g],\"seed\":%llu,\"max_steps\":%d,\"samples\":%zu}",
                variant_name(mc.variant), static_cast<long long>(mc.width),
                static_cast<long long>(mc.deconv_width), cfg.batch_size, cfg.epochs,
                double(cfg.beta1), double(cfg.beta2), double(cfg.lr0), double(cfg.decay_rate),
                cfg.decay_step, double(cfg.adam_eps), double(cfg.w_top), double(cfg.w_mid),
                double(cfg.w_bot), static_cast<unsigned long long>(cfg.seed), cfg.max_steps,
                n_samples);
  return buf;
}

}  // namespace

TrainResult train(Model& model, const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const std::string& log_path, const std::string& checkpoint_path) {
  cfg.validate();
  check(!data.empty(), "train: dataset is empty");

  auto params = model.parameters();
  Adam adam(params, cfg.beta1, cfg.beta2, cfg.adam_eps);

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::trunc);
    if (!log) throw IoError("train: cannot open loss log '" + log_path + "'");
    log << "# " << manifest_json(cfg, data.size(), model.config()) << "\n";
    log << "# step\tlr\tL_total\tL_t\tL_m\tL_b\n";
  }

  TrainResult result;
  const bool mid = model.config().has_middle_branch();
  const bool bot = model.config().has_bottom_branch();
  int64_t step = 0;
  bool done = false;

  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::mt19937_64 shuffle_rng(cfg.seed + 0x9e3779b97f4a7c15ULL * (uint64_t(epoch) + 1));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const real lr = lr_at(epoch, cfg);

    for (size_t at = 0; at < order.size() && !done; at += size_t(cfg.batch_size)) {
      size_t take = std::min(order.size() - at, size_t(cfg.batch_size));
      std::vector<const Tensor*> vnir, vsw, cwc, m10, m20, m60;
      for (size_t j = 0; j < take; ++j) {
        const TrainSample& s = data[order[at + j]];
        vnir.push_back(&s.vnir);
        if (mid) vsw.push_back(&s.vre_swir);
        if (bot) cwc.push_back(&s.ca_wv_cir);
        m10.push_back(&s.mask10);
        m20.push_back(&s.mask20);
        m60.push_back(&s.mask60);
      }
      PatchBatch batch;
      batch.vnir = stack_samples(vnir);
      if (mid) batch.vre_swir = stack_samples(vsw);
      if (bot) batch.ca_wv_cir = stack_samples(cwc);
      MaskPyramid ref;
      ref.top = stack_samples(m10);
      ref.middle = stack_samples(m20);
      ref.bottom = stack_samples(m60);

      Tape tape;
      Tensor lt, lm, lb, ltotal;
      {
        Tape::Scope scope(tape);
        MaskPyramid pred = model.forward(batch, true);
        lt = bce_loss(pred.top, ref.top);
        lm = bce_loss(pred.middle, ref.middle);
        lb = bce_loss(pred.bottom, ref.bottom);
        ltotal = add(scale(lt, cfg.w_top), add(scale(lm, cfg.w_mid), scale(lb, cfg.w_bot)));
      }

      StepRecord rec{step, lr, ltotal.item(), lt.item(), lm.item(), lb.item()};
      if (!std::isfinite(rec.total)) {
        result.halted_non_finite = true;
        done = true;
        break;
      }
      for (auto& p : params)
        if (p.trainable) p.tensor.zero_grad();
      tape.backward(ltotal);
      adam.step(params, lr);

      result.history.push_back(rec);
      if (log) {
        char line[256];
        std::snprintf(line, sizeof(line), "%lld\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n",
                      static_cast<long long>(rec.step), double(rec.lr), double(rec.total),
                      double(rec.top), double(rec.mid), double(rec.bot));
        log << line;
      }
      ++step;
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }
    if (!result.halted_non_finite && !checkpoint_path.empty())
      save_checkpoint(model.parameters(), checkpoint_path);
  }
  result.steps = step;
  return result;
}

}  // namespace cdfm3sf
