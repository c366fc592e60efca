#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tensor/adamw.hpp"

namespace pixeltext {

// Fixed little-endian container for named float32 tensors plus a JSON
// metadata blob. Layout: magic "PXLM", u32 format version, u32 metadata
// length + UTF-8 JSON, u32 tensor count, then per tensor: u32 name length +
// bytes, u8 rank, u32 extent per axis, raw little-endian float32 data.
// Round trips are bit-exact.
constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> values;
};

struct CheckpointData {
    std::uint32_t version = kCheckpointVersion;
    nlohmann::json meta;
    std::vector<CheckpointTensor> tensors;

    const CheckpointTensor* find(const std::string& name) const;
};

void save_checkpoint(const ParamStore& params, const nlohmann::json& meta,
                     const std::string& path);
CheckpointData load_checkpoint(const std::string& path);

// Copies every tensor whose name exists in both; shape mismatches are errors,
// as is an empty intersection (wrong file). Returns the number applied.
std::size_t apply_checkpoint(ParamStore& params, const CheckpointData& data);

}  // namespace pixeltext
