#pragma once

#include <string>
#include <vector>

#include "cdfm3sf/bstk.hpp"

namespace cdfm3sf {

struct ConfusionCounts {
  int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  int64_t total() const { return tp + tn + fp + fn; }
};

// Tallies over valid pixels; reference no-data (255) pixels are skipped.
// pred holds 0/1 per pixel.
ConfusionCounts confusion(const std::vector<uint8_t>& pred, const CloudMask& ref);

struct Scores {
  double oa = 0, precision = 0, recall = 0, f1 = 0, iou = 0;
  // set when a zero-denominator convention decided the value
  bool precision_degenerate = false, recall_degenerate = false, iou_degenerate = false;
};

// Overall accuracy, precision, recall, F1, IoU. Zero-denominator conventions:
// precision with TP+FP=0 is 1 if FN=0 else 0 (recall symmetric); IoU of an
// empty union is 1; degenerate cases are flagged.
Scores scores(const ConfusionCounts& c);

struct CurvePoint {
  double threshold = 0, x = 0, y = 0;
};

struct CurveSweep {
  std::vector<CurvePoint> roc;   // x = FPR, y = TPR
  std::vector<CurvePoint> uapa;  // x = PA (= precision), y = UA (= recall)
};

std::vector<double> default_thresholds();  // 101 values, 0.00 .. 1.00

// Binarizes prob >= t (ties count as cloud) for each threshold.
CurveSweep curves(const std::vector<float>& prob, const CloudMask& ref,
                  const std::vector<double>& thresholds = default_thresholds());

// Trapezoidal area under points sorted by x. For ROC curves the (0,0) and
// (1,1) endpoints are appended when absent.
double auc(std::vector<CurvePoint> points, bool roc_endpoints);

std::string scores_table(const Scores& s);
std::string scores_tsv(const Scores& s);

}  // namespace cdfm3sf
