#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cdfm3sf/model.hpp"

namespace cdfm3sf {

// Mask label marking pixels excluded from loss and metrics.
constexpr real kNoData = 255;

struct TrainConfig {
  int batch_size = 24;
  int epochs = 40;
  real beta1 = real(0.5);
  real beta2 = real(0.9);
  real lr0 = real(0.001);
  real decay_rate = real(0.995);
  int decay_step = 5;
  real adam_eps = real(1e-8);
  real w_top = 1, w_mid = real(0.1), w_bot = real(0.01);
  uint64_t seed = 0;
  int max_steps = 0;  // 0 = run all epochs

  void validate() const;
};

// Mean binary cross-entropy over valid (non-255) reference pixels across the
// whole batch. pred comes from a sigmoid; it is clamped to
// [1e-7, 1 - 1e-7] before the logs. ref must contain only {0, 1, 255}.
Tensor bce_loss(const Tensor& pred, const Tensor& ref);

Tensor total_loss(const MaskPyramid& pred, const MaskPyramid& ref, real w_top, real w_mid,
                  real w_bot);

// Staircase exponential decay: lr0 * decay_rate^(index / decay_step) with
// floor division; the index unit is the epoch.
real lr_at(int index, const TrainConfig& cfg);

class Adam {
 public:
  Adam(const std::vector<ParamEntry>& params, real beta1, real beta2, real eps);
  // Applies one update from the accumulated gradients. Throws on a non-finite
  // gradient, naming the parameter; parameters are untouched in that case.
  void step(std::vector<ParamEntry>& params, real lr);
  int64_t steps_taken() const { return t_; }

 private:
  struct Slot {
    std::vector<real> m, v;
  };
  std::vector<Slot> slots_;
  real beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

struct StepRecord {
  int64_t step;
  real lr;
  real total, top, mid, bot;
};

struct TrainResult {
  std::vector<StepRecord> history;
  bool halted_non_finite = false;
  int64_t steps = 0;
};

/// One training sample: input stacks plus the three-level reference masks,
/// values already normalized, masks in {0,1,255}.
struct TrainSample {
  Tensor vnir, vre_swir, ca_wv_cir;  // h,w,c (no batch axis)
  Tensor mask10, mask20, mask60;     // h,w,1
};

/// Runs epochs x batches of forward -> total_loss -> backward -> adam step.
/// Patch order is reshuffled every epoch from (seed, epoch); fully
/// deterministic. If log_path is non-empty a loss log is written there:
/// a JSON run-manifest header line, then one tab-separated record per step.
/// If checkpoint_path is non-empty the parameters are saved after every
/// epoch; on a non-finite loss the loop halts and the last epoch's file is
/// left in place.
TrainResult train(Model& model, const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const std::string& log_path = "", const std::string& checkpoint_path = "");

}  // namespace cdfm3sf
