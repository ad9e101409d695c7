#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "lma4rec/model/params.hpp"

namespace lma4rec::model {

// Binary checkpoint layout (little-endian):
//   8 bytes   magic "LMA4CKPT"
//   u32       format version
//   u64       header length H
//   H bytes   JSON header: config, num_items, tensor names/shapes, gate logits, metadata
//   doubles   every tensor's values in header order, row-major
//   u32       CRC-32 of everything after the version field
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'L', 'M', 'A', '4', 'C', 'K', 'P', 'T'};

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

struct Checkpoint {
  SasrecParams params;
  nlohmann::json metadata;  // free-form (e.g. best epoch, validation score)
};

void save_checkpoint(const std::filesystem::path& path, const SasrecParams& params,
                     const nlohmann::json& metadata = nlohmann::json::object());

// Throws FormatError on a wrong magic, an unsupported version or a checksum mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lma4rec::model
