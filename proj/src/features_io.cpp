#include "paraling/features_io.hpp"

#include <fstream>

#include "paraling/binio.hpp"

namespace paraling {

namespace binio {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::NotFound, path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::IoError, "write failed: " + path);
}

}  // namespace binio

std::string encode_plfb(const FeatureMatrix& m) {
  require(m.band_centers_hz.size() == m.bands(), ErrorCode::ShapeMismatch,
          "band centers do not match band count");
  std::string out = "PLFB";
  binio::put<std::uint8_t>(out, 1);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.frames()));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.bands()));
  binio::put<double>(out, m.frame_rate_hz);
  for (double v : m.values.data()) binio::put<float>(out, static_cast<float>(v));
  for (double c : m.band_centers_hz) binio::put<double>(out, c);
  return out;
}

FeatureMatrix decode_plfb(const std::string& bytes, const std::string& where) {
  binio::Reader r(bytes, where);
  require(r.get_bytes(4) == "PLFB", ErrorCode::CorruptHeader, where + ": bad magic");
  const auto version = r.get<std::uint8_t>();
  require(version == 1, ErrorCode::UnsupportedFormat, where + ": version=" + std::to_string(version));
  const auto frames = r.get<std::uint32_t>();
  const auto bands = r.get<std::uint32_t>();
  FeatureMatrix m;
  m.frame_rate_hz = r.get<double>();
  m.values = Matrix(frames, bands);
  for (double& v : m.values.data()) v = static_cast<double>(r.get<float>());
  m.band_centers_hz.resize(bands);
  for (double& c : m.band_centers_hz) c = r.get<double>();
  require(r.done(), ErrorCode::CorruptHeader, where + ": trailing bytes");
  return m;
}

void write_plfb(const std::filesystem::path& path, const FeatureMatrix& m) {
  binio::write_file(path.string(), encode_plfb(m));
}

FeatureMatrix read_plfb(const std::filesystem::path& path) {
  return decode_plfb(binio::read_file(path.string()), path.string());
}

}  // namespace paraling
