#include "paraling/checkpoint.hpp"

#include "paraling/binio.hpp"

namespace paraling {

namespace {

enum Tag : std::uint8_t {
  kEnd = 0,
  kInputBands = 1,
  kConvFilters = 2,
  kConvKernel = 3,
  kConvStride = 4,
  kLstmUnits = 5,
  kFfUnits = 6,
  kReadout = 7,
  kHead = 8,
};

void put_tagged(std::string& out, Tag tag, int v) {
  binio::put<std::uint8_t>(out, tag);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
}

}  // namespace

std::string encode_plmp(const ModelParams& params) {
  const Architecture& a = params.arch;
  std::string out = "PLMP";
  binio::put<std::uint8_t>(out, 1);
  put_tagged(out, kInputBands, a.input_bands);
  put_tagged(out, kConvFilters, a.conv_filters);
  put_tagged(out, kConvKernel, a.conv_kernel);
  put_tagged(out, kConvStride, a.conv_stride);
  put_tagged(out, kLstmUnits, a.lstm_units);
  put_tagged(out, kFfUnits, a.ff_units);
  binio::put<std::uint8_t>(out, kReadout);
  binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(a.readout));
  for (const auto& h : a.heads) {
    binio::put<std::uint8_t>(out, kHead);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(h.name.size()));
    out += h.name;
    binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(h.kind));
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(h.n_classes));
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(h.ff_units));
  }
  binio::put<std::uint8_t>(out, kEnd);

  const auto tensors = params.tensors();
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(t->shape.size()));
    for (auto d : t->shape) binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t->data) binio::put<double>(out, v);
  }
  binio::put<std::uint64_t>(out, params.init_seed);
  return out;
}

ModelParams decode_plmp(const std::string& bytes, const std::string& where) {
  binio::Reader r(bytes, where);
  require(r.get_bytes(4) == "PLMP", ErrorCode::CorruptHeader, where + ": bad magic");
  const auto version = r.get<std::uint8_t>();
  require(version == 1, ErrorCode::UnsupportedFormat, where + ": version=" + std::to_string(version));

  Architecture a;
  for (bool more = true; more;) {
    const auto tag = r.get<std::uint8_t>();
    switch (tag) {
      case kEnd: more = false; break;
      case kInputBands: a.input_bands = static_cast<int>(r.get<std::uint32_t>()); break;
      case kConvFilters: a.conv_filters = static_cast<int>(r.get<std::uint32_t>()); break;
      case kConvKernel: a.conv_kernel = static_cast<int>(r.get<std::uint32_t>()); break;
      case kConvStride: a.conv_stride = static_cast<int>(r.get<std::uint32_t>()); break;
      case kLstmUnits: a.lstm_units = static_cast<int>(r.get<std::uint32_t>()); break;
      case kFfUnits: a.ff_units = static_cast<int>(r.get<std::uint32_t>()); break;
      case kReadout: {
        const auto v = r.get<std::uint8_t>();
        require(v <= 1, ErrorCode::CorruptHeader, where + ": readout=" + std::to_string(v));
        a.readout = static_cast<Readout>(v);
        break;
      }
      case kHead: {
        HeadSpec h;
        h.name = r.get_bytes(r.get<std::uint32_t>());
        const auto kind = r.get<std::uint8_t>();
        require(kind <= 2, ErrorCode::CorruptHeader, where + ": head kind=" + std::to_string(kind));
        h.kind = static_cast<HeadKind>(kind);
        h.n_classes = static_cast<int>(r.get<std::uint32_t>());
        h.ff_units = static_cast<int>(r.get<std::uint32_t>());
        a.heads.push_back(std::move(h));
        break;
      }
      default: fail(ErrorCode::CorruptHeader, where + ": unknown architecture tag " + std::to_string(tag));
    }
  }
  ModelParams p = ModelParams::zeros(a);
  auto tensors = p.tensors();
  require(r.get<std::uint32_t>() == tensors.size(), ErrorCode::CorruptHeader,
          where + ": tensor count does not match architecture");
  for (auto* t : tensors) {
    const auto rank = r.get<std::uint32_t>();
    require(rank == t->shape.size(), ErrorCode::CorruptHeader, where + ": rank mismatch for " + t->name);
    for (auto d : t->shape)
      require(r.get<std::uint32_t>() == d, ErrorCode::CorruptHeader, where + ": shape mismatch for " + t->name);
    for (double& v : t->data) v = r.get<double>();
  }
  p.init_seed = r.get<std::uint64_t>();
  require(r.done(), ErrorCode::CorruptHeader, where + ": trailing bytes");
  return p;
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  binio::write_file(path.string(), encode_plmp(params));
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  return decode_plmp(binio::read_file(path.string()), path.string());
}

}  // namespace paraling
