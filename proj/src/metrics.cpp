#include "cdfm3sf/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace cdfm3sf {

ConfusionCounts confusion(const std::vector<uint8_t>& pred, const CloudMask& ref) {
  ref.validate();
  check_shape(pred.size() == ref.labels.size(),
              "confusion: prediction has " + std::to_string(pred.size()) + " pixels, reference " +
                  std::to_string(ref.labels.size()));
  ConfusionCounts c;
  for (size_t i = 0; i < pred.size(); ++i) {
    uint8_t r = ref.labels[i];
    if (r == 255) continue;
    bool p = pred[i] != 0;
    if (p && r == 1) ++c.tp;
    else if (!p && r == 0) ++c.tn;
    else if (p && r == 0) ++c.fp;
    else ++c.fn;
  }
  return c;
}

Scores scores(const ConfusionCounts& c) {
  check(c.total() > 0, "scores: no valid pixels were counted");
  Scores s;
  s.oa = double(c.tp + c.tn) / double(c.total());
  if (c.tp + c.fp == 0) {
    s.precision = c.fn == 0 ? 1.0 : 0.0;
    s.precision_degenerate = true;
  } else {
    s.precision = double(c.tp) / double(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    s.recall = c.fp == 0 ? 1.0 : 0.0;
    s.recall_degenerate = true;
  } else {
    s.recall = double(c.tp) / double(c.tp + c.fn);
  }
  s.f1 = (s.precision + s.recall) > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  if (c.tp + c.fp + c.fn == 0) {
    s.iou = 1.0;
    s.iou_degenerate = true;
  } else {
    s.iou = double(c.tp) / double(c.tp + c.fp + c.fn);
  }
  return s;
}

std::vector<double> default_thresholds() {
  std::vector<double> t(101);
  for (int i = 0; i <= 100; ++i) t[i] = i / 100.0;
  return t;
}

CurveSweep curves(const std::vector<float>& prob, const CloudMask& ref,
                  const std::vector<double>& thresholds) {
  check(!thresholds.empty(), "curves: need at least one threshold");
  for (size_t i = 1; i < thresholds.size(); ++i)
    check(thresholds[i - 1] <= thresholds[i], "curves: thresholds must be sorted ascending");
  for (float p : prob)
    check(p >= 0.0f && p <= 1.0f, "curves: probabilities must lie in [0,1]");

  CurveSweep out;
  std::vector<uint8_t> pred(prob.size());
  for (double t : thresholds) {
    for (size_t i = 0; i < prob.size(); ++i) pred[i] = prob[i] >= t ? 1 : 0;
    ConfusionCounts c = confusion(pred, ref);
    Scores s = scores(c);
    double tpr = s.recall;
    double fpr = (c.fp + c.tn) > 0 ? double(c.fp) / double(c.fp + c.tn) : 0.0;
    out.roc.push_back({t, fpr, tpr});
    // the paper's naming: producer's accuracy = precision, user's = recall
    out.uapa.push_back({t, s.precision, s.recall});
  }
  return out;
}

double auc(std::vector<CurvePoint> points, bool roc_endpoints) {
  check(points.size() >= 2, "auc: need at least two points");
  std::sort(points.begin(), points.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });
  if (roc_endpoints) {
    if (points.front().x > 0.0) points.insert(points.begin(), {1.0, 0.0, 0.0});
    if (points.back().x < 1.0) points.push_back({0.0, 1.0, 1.0});
  }
  double area = 0;
  for (size_t i = 1; i < points.size(); ++i)
    area += (points[i].x - points[i - 1].x) * (points[i].y + points[i - 1].y) / 2.0;
  return area;
}

std::string scores_table(const Scores& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "OA %.4f%%  Precision %.4f%%  Recall %.4f%%  F1 %.4f  IoU %.4f%s\n",
                s.oa * 100, s.precision * 100, s.recall * 100, s.f1, s.iou,
                (s.precision_degenerate || s.recall_degenerate || s.iou_degenerate)
                    ? "  [degenerate denominators flagged]"
                    : "");
  return buf;
}

std::string scores_tsv(const Scores& s) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%.6f\t%.6f\t%.6f", s.oa, s.precision, s.recall,
                s.f1, s.iou);
  os << "OA\tPrecision\tRecall\tF1\tIoU\n" << buf;
  if (s.precision_degenerate) os << "\t#precision-degenerate";
  if (s.recall_degenerate) os << "\t#recall-degenerate";
  if (s.iou_degenerate) os << "\t#iou-degenerate";
  os << "\n";
  return os.str();
}

}  // namespace cdfm3sf
