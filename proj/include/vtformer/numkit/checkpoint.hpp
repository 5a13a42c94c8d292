#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vtformer/numkit/param_store.hpp"

namespace vtformer::num {

// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

struct Checkpoint {
  ParamStore params;
  nlohmann::json metadata;
  std::string config_hash;
};

// JSON container: {"format", "version", "step_count", "config_hash",
// "metadata", "params": {name: {"shape": [...], "values": [...]}}}.
// Doubles are written in shortest round-trip form, so load(save(x)) == x.
nlohmann::json checkpoint_to_json(const ParamStore& params, const nlohmann::json& metadata,
                                  std::string_view config_hash);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const nlohmann::json& metadata, std::string_view config_hash);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vtformer::num
