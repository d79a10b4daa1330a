#pragma once

#include <filesystem>
#include <string>

#include "paraling/net.hpp"

namespace paraling {

/// PLMP layout, little-endian:
///   "PLMP" | u8 version=1 |
///   architecture as tagged records (u8 tag + payload), terminated by tag 0 |
///   u32 tensor count | per tensor: u32 rank, rank x u32 dims, f64 values |
///   u64 init_seed
std::string encode_plmp(const ModelParams& params);
ModelParams decode_plmp(const std::string& bytes, const std::string& where = "PLMP");

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace paraling
