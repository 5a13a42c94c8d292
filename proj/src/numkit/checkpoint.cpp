#include "vtformer/numkit/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "vtformer/errors.hpp"

namespace vtformer::num {

namespace {
constexpr const char* kFormat = "vtformer-checkpoint";
constexpr int kVersion = 1;
}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json checkpoint_to_json(const ParamStore& params, const nlohmann::json& metadata,
                                  std::string_view config_hash) {
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["step_count"] = params.step_count();
  doc["config_hash"] = std::string(config_hash);
  doc["metadata"] = metadata.is_null() ? nlohmann::json::object() : metadata;
  nlohmann::json& tensors = doc["params"] = nlohmann::json::object();
  for (const auto& [name, entry] : params) {
    tensors[name] = {{"shape", entry.value.shape()}, {"values", entry.value.storage()}};
  }
  return doc;
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw ParseError("not a vtformer checkpoint");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw ParseError("unsupported checkpoint version " + doc.at("version").dump());
    }
    Checkpoint ckpt;
    ckpt.config_hash = doc.at("config_hash").get<std::string>();
    ckpt.metadata = doc.at("metadata");
    for (const auto& [name, t] : doc.at("params").items()) {
      ckpt.params.add(name, Tensor(t.at("shape").get<Shape>(),
                                   t.at("values").get<std::vector<double>>()));
    }
    ckpt.params.set_step_count(doc.at("step_count").get<std::uint64_t>());
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const nlohmann::json& metadata, std::string_view config_hash) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(params, metadata, config_hash).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace vtformer::num
