#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "switchnet/model.hpp"

namespace switchnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint layout (all integers and floats little-endian):
///
///   "SWNETCKP"                 8-byte magic
///   u32 version                kCheckpointVersion
///   u32 kind                   1 = single layer, 2 = two layer
///   u64 n, u64 m|m1, u64 l, u64 m2   (l = m2 = 0 for single layer)
///   f64 parameters             per conditional k = 0..n-1, per block in
///                              block order: aux weights, aux biases,
///                              switch weights, switch biases
///   u32 crc32                  over every preceding byte
std::string serialize_model(const SwitchNetworkModel& model);

/// Throws DataError on a bad magic, version mismatch, truncation or checksum failure.
SwitchNetworkModel deserialize_model(std::string_view bytes);

void save_checkpoint(const SwitchNetworkModel& model, const std::filesystem::path& path);
SwitchNetworkModel load_checkpoint(const std::filesystem::path& path);

}  // namespace switchnet
