#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bodyimage/tensor.hpp"

namespace bodyimage {

// "SMNN" parameter checkpoint, little-endian:
//   magic[4] version:u32 count:u32
//   per tensor: rank:u32 dims:u32[rank] payload:f32[prod(dims)]
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_tensors(const std::vector<Tensor<float>>& tensors);
/// Throws kMalformedHeader / kVersionMismatch / kTruncatedPayload / kPayloadMismatch.
std::vector<Tensor<float>> decode_tensors(const std::string& bytes);

void save_tensors(const std::vector<Tensor<float>>& tensors, const std::filesystem::path& path);
std::vector<Tensor<float>> load_tensors(const std::filesystem::path& path);

}  // namespace bodyimage
