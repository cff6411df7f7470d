#include "sdifl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "sdifl/errors.hpp"

namespace sdifl {
namespace {

using nlohmann::ordered_json;

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

}  // namespace

template <class T>
void add_tensors(Checkpoint& ckpt, const std::vector<const nn::Parameter<T>*>& params,
                 const std::string& prefix) {
  for (const auto* p : params) {
    const std::string name = prefix + p->name;
    if (ckpt.tensors.count(name)) throw SchemaError("duplicate tensor " + name);
    StoredTensor t;
    t.shape = {p->value.rows(), p->value.cols()};
    t.values.resize(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) t.values[static_cast<std::size_t>(i)] = static_cast<float>(p->value.data()[i]);
    ckpt.order.push_back(name);
    ckpt.tensors.emplace(name, std::move(t));
  }
}

template <class T>
void restore_tensors(const Checkpoint& ckpt, const std::vector<nn::Parameter<T>*>& params,
                     const std::string& prefix) {
  for (auto* p : params) {
    const std::string name = prefix + p->name;
    const auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw SchemaError("checkpoint lacks tensor " + name);
    const StoredTensor& t = it->second;
    if (t.shape.size() != 2 || t.shape[0] != p->value.rows() || t.shape[1] != p->value.cols()) {
      throw SchemaError("shape mismatch for tensor " + name);
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = static_cast<T>(t.values[static_cast<std::size_t>(i)]);
  }
}

template void add_tensors<float>(Checkpoint&, const std::vector<const nn::Parameter<float>*>&, const std::string&);
template void add_tensors<double>(Checkpoint&, const std::vector<const nn::Parameter<double>*>&, const std::string&);
template void restore_tensors<float>(const Checkpoint&, const std::vector<nn::Parameter<float>*>&, const std::string&);
template void restore_tensors<double>(const Checkpoint&, const std::vector<nn::Parameter<double>*>&, const std::string&);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ordered_json manifest;
  manifest["format"] = "sdifl-checkpoint";
  manifest["version"] = 1;
  manifest["dtype"] = "float32";
  manifest["seed"] = ckpt.seed;
  manifest["config_hash"] = ckpt.config_hash;
  ordered_json tensors = ordered_json::array();
  std::ofstream bin(dir / "weights.bin", std::ios::binary);
  if (!bin) throw IoError("cannot write " + (dir / "weights.bin").string());
  std::uint64_t offset = 0;
  for (const auto& name : ckpt.order) {
    const StoredTensor& t = ckpt.tensors.at(name);
    tensors.push_back({{"name", name},
                       {"shape", t.shape},
                       {"dtype", "float32"},
                       {"offset", offset},
                       {"count", t.values.size()}});
    for (float f : t.values) {
      const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(f));
      bin.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
    offset += t.values.size() * sizeof(float);
  }
  manifest["tensors"] = std::move(tensors);
  manifest["meta"] = ordered_json::parse(ckpt.meta_json);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const auto weights_path = dir / "weights.bin";
  if (!std::filesystem::exists(manifest_path) || !std::filesystem::exists(weights_path)) {
    throw FileMissing("not a checkpoint directory: " + dir.string());
  }
  std::ifstream in(manifest_path);
  std::ifstream bin(weights_path, std::ios::binary);
  const auto bin_size = std::filesystem::file_size(weights_path);
  Checkpoint ckpt;
  try {
    const ordered_json manifest = ordered_json::parse(in);
    if (manifest.at("format") != "sdifl-checkpoint" || manifest.at("version") != 1 ||
        manifest.at("dtype") != "float32") {
      throw SchemaError("unsupported checkpoint format in " + dir.string());
    }
    ckpt.seed = manifest.at("seed").get<std::uint64_t>();
    ckpt.config_hash = manifest.at("config_hash").get<std::string>();
    ckpt.meta_json = manifest.value("meta", ordered_json::object()).dump();
    for (const auto& e : manifest.at("tensors")) {
      const std::string name = e.at("name").get<std::string>();
      StoredTensor t;
      t.shape = e.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto count = e.at("count").get<std::uint64_t>();
      std::uint64_t expect = 1;
      for (auto d : t.shape) expect *= static_cast<std::uint64_t>(d);
      if (expect != count || offset + count * sizeof(float) > bin_size) {
        throw SchemaError("tensor " + name + " has inconsistent extent");
      }
      t.values.resize(count);
      bin.seekg(static_cast<std::streamoff>(offset));
      for (auto& v : t.values) {
        std::uint32_t bits = 0;
        bin.read(reinterpret_cast<char*>(&bits), sizeof(bits));
        v = std::bit_cast<float>(to_little(bits));
      }
      ckpt.order.push_back(name);
      ckpt.tensors.emplace(name, std::move(t));
    }
  } catch (const ordered_json::exception& e) {
    throw SchemaError(manifest_path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace sdifl
