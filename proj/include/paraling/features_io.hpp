#pragma once

#include <filesystem>
#include <string>

#include "paraling/dsp.hpp"

namespace paraling {

/// PLFB layout, little-endian:
///   "PLFB" | u8 version=1 | u32 frames | u32 bands | f64 frame_rate_hz |
///   frames*bands f32 (frame-major) | bands f64 band centers
std::string encode_plfb(const FeatureMatrix& m);
FeatureMatrix decode_plfb(const std::string& bytes, const std::string& where = "PLFB");

void write_plfb(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_plfb(const std::filesystem::path& path);

}  // namespace paraling
