#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sdifl/image.hpp"

namespace sdifl {

inline constexpr double kDefaultThreshold = 0.5;

// pixel > threshold -> 1 (strict).
MaskTensor binarize(const ProbMap& m_hat, double threshold = kDefaultThreshold);

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// Throws ShapeError on mismatched shapes.
ConfusionCounts confusion(const MaskTensor& truth, const MaskTensor& predicted);

struct Scores {
  double precision = 0, recall = 0, iou = 0, f1 = 0;
};

// 0/0 is 0, except tp = fp = fn = 0 (pristine image called pristine), where
// IoU and F1 are 1.
Scores scores(const ConfusionCounts& c);

// max(F1(truth, pred), F1(truth, 1 - pred)).
double complement_f1(const MaskTensor& truth, const MaskTensor& predicted);

struct MetricRecord {
  std::string image_id;
  std::string perturbation = "none";
  double precision = 0, recall = 0, iou = 0, f1 = 0, f1_complement_max = 0;
};

MetricRecord make_record(std::string image_id, std::string perturbation, const MaskTensor& truth,
                         const MaskTensor& predicted);

struct SummaryRow {
  std::size_t count = 0;
  double precision = 0, recall = 0, iou = 0, f1 = 0, f1_complement_max = 0;
};

// Unweighted per-image means grouped by perturbation tag. Records are sorted
// by (image_id, perturbation) before reduction. Throws EmptyInput.
std::map<std::string, SummaryRow> aggregate(std::vector<MetricRecord> records);

struct EvalReport {
  std::string config_hash;
  std::vector<MetricRecord> per_image;
  std::map<std::string, SummaryRow> summary;
};

EvalReport make_report(std::string config_hash, std::vector<MetricRecord> records);

// {config_hash, per_image: [...], summary: {tag -> metrics}}
std::string report_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

}  // namespace sdifl
