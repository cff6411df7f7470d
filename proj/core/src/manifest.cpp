#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sdifl/errors.hpp"
#include "sdifl/forge.hpp"

namespace sdifl {
namespace {

using nlohmann::json;

void check_unique(const DatasetManifest& manifest) {
  std::set<std::string> seen;
  for (const auto& r : manifest.records) {
    if (!seen.insert(r.image_path).second) {
      throw SchemaError("duplicate image_path in split " +
                        std::string(to_string(manifest.split)) + ": " + r.image_path);
    }
  }
}

template <class T>
T require(const json& obj, const char* key, int line) {
  if (!obj.contains(key)) {
    throw SchemaError("manifest line " + std::to_string(line) + ": missing key '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError("manifest line " + std::to_string(line) + ": bad value for '" + key +
                      "': " + e.what());
  }
}

}  // namespace

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  check_unique(manifest);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << json{{"version", 1}, {"split", to_string(manifest.split)}}.dump() << '\n';
  for (const auto& r : manifest.records) {
    out << json{{"image_path", r.image_path},
                {"mask_path", r.mask_path},
                {"forgery_kind", to_string(r.forgery_kind)},
                {"seed", r.seed}}
               .dump()
        << '\n';
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FileMissing("no such manifest: " + path.string());
  std::ifstream in(path);
  std::string line;
  int lineno = 0;
  DatasetManifest manifest;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw SchemaError("manifest line " + std::to_string(lineno) + ": expected an object");
    }
    if (!have_header) {
      if (require<int>(obj, "version", lineno) != 1) {
        throw SchemaError("unsupported manifest version");
      }
      manifest.split = parse_split(require<std::string>(obj, "split", lineno));
      have_header = true;
      continue;
    }
    ForgeryRecord r;
    r.image_path = require<std::string>(obj, "image_path", lineno);
    r.mask_path = require<std::string>(obj, "mask_path", lineno);
    try {
      r.forgery_kind = parse_kind(require<std::string>(obj, "forgery_kind", lineno));
    } catch (const InvalidKind& e) {
      throw SchemaError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    r.seed = require<std::uint64_t>(obj, "seed", lineno);
    manifest.records.push_back(std::move(r));
  }
  if (!have_header) throw SchemaError("manifest has no header line: " + path.string());
  check_unique(manifest);
  return manifest;
}

}  // namespace sdifl
