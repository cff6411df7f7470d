#include "sdifl/metrics.hpp"

#include <algorithm>
#include <tuple>

#include "sdifl/errors.hpp"

namespace sdifl {

MaskTensor binarize(const ProbMap& m_hat, double threshold) {
  MaskTensor out(m_hat.height, m_hat.width);
  for (std::size_t i = 0; i < m_hat.pixels(); ++i) out.data[i] = m_hat.data[i] > threshold ? 1 : 0;
  return out;
}

ConfusionCounts confusion(const MaskTensor& truth, const MaskTensor& predicted) {
  if (truth.height != predicted.height || truth.width != predicted.width) {
    throw ShapeError("confusion: mask shapes differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.pixels(); ++i) {
    const bool t = truth.data[i] != 0, p = predicted.data[i] != 0;
    if (t && p) ++c.tp;
    else if (!t && p) ++c.fp;
    else if (t && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Scores scores(const ConfusionCounts& c) {
  auto ratio = [](double num, double den) { return den > 0 ? num / den : 0.0; };
  Scores s;
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) {
    s.iou = 1.0;
    s.f1 = 1.0;
    return s;
  }
  const double tp = static_cast<double>(c.tp);
  s.precision = ratio(tp, tp + static_cast<double>(c.fp));
  s.recall = ratio(tp, tp + static_cast<double>(c.fn));
  s.iou = ratio(tp, tp + static_cast<double>(c.fp) + static_cast<double>(c.fn));
  s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

double complement_f1(const MaskTensor& truth, const MaskTensor& predicted) {
  const double direct = scores(confusion(truth, predicted)).f1;
  const double flipped = scores(confusion(truth, predicted.complement())).f1;
  return std::max(direct, flipped);
}

MetricRecord make_record(std::string image_id, std::string perturbation, const MaskTensor& truth,
                         const MaskTensor& predicted) {
  const Scores s = scores(confusion(truth, predicted));
  MetricRecord r;
  r.image_id = std::move(image_id);
  r.perturbation = std::move(perturbation);
  r.precision = s.precision;
  r.recall = s.recall;
  r.iou = s.iou;
  r.f1 = s.f1;
  r.f1_complement_max = complement_f1(truth, predicted);
  return r;
}

std::map<std::string, SummaryRow> aggregate(std::vector<MetricRecord> records) {
  if (records.empty()) throw EmptyInput("aggregate: no records");
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.image_id, a.perturbation) < std::tie(b.image_id, b.perturbation);
  });
  std::map<std::string, SummaryRow> out;
  for (const auto& r : records) {
    SummaryRow& row = out[r.perturbation];
    ++row.count;
    row.precision += r.precision;
    row.recall += r.recall;
    row.iou += r.iou;
    row.f1 += r.f1;
    row.f1_complement_max += r.f1_complement_max;
  }
  for (auto& [tag, row] : out) {
    const double n = static_cast<double>(row.count);
    row.precision /= n;
    row.recall /= n;
    row.iou /= n;
    row.f1 /= n;
    row.f1_complement_max /= n;
  }
  return out;
}

EvalReport make_report(std::string config_hash, std::vector<MetricRecord> records) {
  EvalReport r;
  r.config_hash = std::move(config_hash);
  r.summary = aggregate(records);
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.image_id, a.perturbation) < std::tie(b.image_id, b.perturbation);
  });
  r.per_image = std::move(records);
  return r;
}

}  // namespace sdifl
