#include <fstream>

#include "json.hpp"
#include "sdifl/errors.hpp"
#include "sdifl/metrics.hpp"

namespace sdifl {

using nlohmann::ordered_json;

std::string report_json(const EvalReport& report) {
  ordered_json per_image = ordered_json::array();
  for (const auto& r : report.per_image) {
    per_image.push_back({{"image_id", r.image_id},
                         {"perturbation", r.perturbation},
                         {"precision", r.precision},
                         {"recall", r.recall},
                         {"iou", r.iou},
                         {"f1", r.f1},
                         {"f1_complement_max", r.f1_complement_max}});
  }
  ordered_json summary = ordered_json::object();
  for (const auto& [tag, row] : report.summary) {
    summary[tag] = {{"count", row.count},
                    {"precision", row.precision},
                    {"recall", row.recall},
                    {"iou", row.iou},
                    {"f1", row.f1},
                    {"f1_complement_max", row.f1_complement_max}};
  }
  ordered_json j;
  j["config_hash"] = report.config_hash;
  j["per_image"] = std::move(per_image);
  j["summary"] = std::move(summary);
  return j.dump(2) + "\n";
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << report_json(report);
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "image_id,perturbation,precision,recall,iou,f1,f1_complement_max\n";
  for (const auto& r : report.per_image) {
    out << r.image_id << ',' << r.perturbation << ',' << r.precision << ',' << r.recall << ','
        << r.iou << ',' << r.f1 << ',' << r.f1_complement_max << '\n';
  }
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing("no such report: " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
    EvalReport r;
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& e : j.at("per_image")) {
      MetricRecord m;
      m.image_id = e.at("image_id").get<std::string>();
      m.perturbation = e.at("perturbation").get<std::string>();
      m.precision = e.at("precision").get<double>();
      m.recall = e.at("recall").get<double>();
      m.iou = e.at("iou").get<double>();
      m.f1 = e.at("f1").get<double>();
      m.f1_complement_max = e.at("f1_complement_max").get<double>();
      r.per_image.push_back(std::move(m));
    }
    for (const auto& [tag, e] : j.at("summary").items()) {
      SummaryRow row;
      row.count = e.at("count").get<std::size_t>();
      row.precision = e.at("precision").get<double>();
      row.recall = e.at("recall").get<double>();
      row.iou = e.at("iou").get<double>();
      row.f1 = e.at("f1").get<double>();
      row.f1_complement_max = e.at("f1_complement_max").get<double>();
      r.summary[tag] = row;
    }
    return r;
  } catch (const ordered_json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace sdifl
