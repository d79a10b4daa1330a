#include "paraling/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "paraling/error.hpp"
#include "paraling/text.hpp"

namespace paraling {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::NotFound, path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string where = path.string();

  require(bytes.size() >= 12 && std::memcmp(data, "RIFF", 4) == 0 &&
              std::memcmp(data + 8, "WAVE", 4) == 0,
          ErrorCode::CorruptHeader, where + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;
  int rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(data + pos + 4);
    const std::size_t body = pos + 8;
    require(body + size <= bytes.size(), ErrorCode::CorruptHeader, where + ": truncated chunk");
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      require(size >= 16, ErrorCode::CorruptHeader, where + ": short fmt chunk");
      const std::uint16_t format = read_u16(data + body);
      const std::uint16_t channels = read_u16(data + body + 2);
      const std::uint16_t bits = read_u16(data + body + 14);
      rate = static_cast<int>(read_u32(data + body + 4));
      require(format == 1, ErrorCode::UnsupportedFormat, where + ": format=" + std::to_string(format));
      require(channels == 1, ErrorCode::UnsupportedFormat,
              where + ": channels=" + std::to_string(channels));
      require(bits == 16, ErrorCode::UnsupportedFormat, where + ": bits=" + std::to_string(bits));
      require(rate > 0, ErrorCode::CorruptHeader, where + ": sample_rate=0");
      have_fmt = true;
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      pcm = data + body;
      pcm_bytes = size;
    }
    pos = body + size + (size & 1u);
  }
  require(have_fmt, ErrorCode::CorruptHeader, where + ": missing fmt chunk");
  require(pcm != nullptr, ErrorCode::CorruptHeader, where + ": missing data chunk");
  require(pcm_bytes >= 2, ErrorCode::CorruptHeader, where + ": empty data chunk");

  AudioClip clip;
  clip.sample_rate_hz = rate;
  clip.source_id = path.stem().string();
  clip.samples.resize(pcm_bytes / 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const auto v = static_cast<std::int16_t>(read_u16(pcm + 2 * i));
    clip.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  require(clip.sample_rate_hz > 0, ErrorCode::InvalidArgument, "sample rate must be positive");
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : clip.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

const LabelRow* LabelTable::find(const std::string& id) const {
  for (const auto& r : rows)
    if (r.source_id == id) return &r;
  return nullptr;
}

std::vector<double> load_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::NotFound, path.string());
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    out.push_back(parse_double(line, path.string()));
  }
  return out;
}

LabelTable load_labels(const std::filesystem::path& path, const LabelSchema& schema) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::NotFound, path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::SchemaMismatch,
          path.string() + ": missing header row");
  const auto header = split(trim(line), ',');
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorCode::SchemaMismatch,
            path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t id_col = column(schema.id_column);
  std::vector<std::size_t> class_cols;
  for (const auto& cc : schema.class_columns) class_cols.push_back(column(cc.task));
  std::size_t target_col = 0, rate_col = 0;
  if (schema.is_regression()) {
    target_col = column(schema.target_column);
    rate_col = column(schema.rate_column);
  }

  LabelTable table;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    require(cells.size() == header.size(), ErrorCode::SchemaMismatch,
            where + ": expected " + std::to_string(header.size()) + " cells");
    LabelRow row;
    row.source_id = cells[id_col];
    require(seen.insert(row.source_id).second, ErrorCode::DuplicateId, where + ": " + row.source_id);
    for (std::size_t k = 0; k < schema.class_columns.size(); ++k) {
      const auto& cc = schema.class_columns[k];
      const auto& name = cells[class_cols[k]];
      const auto it = cc.classes.find(name);
      require(it != cc.classes.end(), ErrorCode::UnknownClassName,
              where + ": '" + name + "' for task " + cc.task);
      row.task_labels[cc.task] = it->second;
    }
    if (schema.is_regression()) {
      row.target_series = load_series(path.parent_path() / cells[target_col]);
      row.target_rate_hz = parse_double(cells[rate_col], where);
      require(row.target_rate_hz > 0.0, ErrorCode::SchemaMismatch, where + ": rate must be positive");
      require(!row.target_series.empty(), ErrorCode::EmptySeries, where + ": " + cells[target_col]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string segment_id(const std::string& parent, std::size_t index) {
  std::ostringstream os;
  os << parent << "__seg";
  os.width(4);
  os.fill('0');
  os << index;
  return os.str();
}

std::string parent_of(const std::string& id) {
  const auto pos = id.rfind("__seg");
  if (pos == std::string::npos || pos + 5 == id.size()) return id;
  for (std::size_t i = pos + 5; i < id.size(); ++i)
    if (id[i] < '0' || id[i] > '9') return id;
  return id.substr(0, pos);
}

std::optional<std::size_t> segment_index_of(const std::string& id) {
  const std::string parent = parent_of(id);
  if (parent.size() == id.size()) return std::nullopt;
  return static_cast<std::size_t>(std::stoull(id.substr(parent.size() + 5)));
}

std::vector<Segment> segment(const AudioClip& clip, double window_s, double hop_s, bool pad_last) {
  require(!clip.samples.empty(), ErrorCode::EmptyClip, clip.source_id);
  require(hop_s > 0.0 && hop_s <= window_s, ErrorCode::InvalidArgument,
          "segment requires 0 < hop <= window");
  const auto window = static_cast<std::size_t>(std::llround(window_s * clip.sample_rate_hz));
  const auto hop = static_cast<std::size_t>(std::llround(hop_s * clip.sample_rate_hz));
  require(window > 0 && hop > 0, ErrorCode::InvalidArgument, "window shorter than one sample");
  const std::size_t len = clip.samples.size();

  std::vector<Segment> out;
  auto emit = [&](std::size_t start, std::size_t count, std::size_t padded_len) {
    Segment s;
    s.parent_id = clip.source_id;
    s.offset_s = static_cast<double>(start) / clip.sample_rate_hz;
    s.clip.sample_rate_hz = clip.sample_rate_hz;
    s.clip.source_id = segment_id(clip.source_id, out.size());
    s.clip.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                          clip.samples.begin() + static_cast<std::ptrdiff_t>(start + count));
    s.clip.samples.resize(padded_len, 0.0);
    out.push_back(std::move(s));
  };

  std::size_t start = 0;
  for (; start + window <= len; start += hop) emit(start, window, window);
  if (start < len) {
    const std::size_t remain = len - start;
    if (pad_last)
      emit(start, remain, window);
    else if (2 * remain >= window)
      emit(start, remain, remain);
  }
  return out;
}

std::vector<double> interpolate_series(const std::vector<double>& series, double series_rate_hz,
                                       std::size_t n_frames, double frame_rate_hz,
                                       double offset_s) {
  require(!series.empty(), ErrorCode::EmptySeries, "target series is empty");
  require(series_rate_hz > 0.0 && frame_rate_hz > 0.0, ErrorCode::InvalidArgument,
          "rates must be positive");
  std::vector<double> out(n_frames);
  const double last = static_cast<double>(series.size() - 1);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double pos = (offset_s + static_cast<double>(t) / frame_rate_hz) * series_rate_hz;
    if (pos >= last) {
      out[t] = series.back();
    } else if (pos <= 0.0) {
      out[t] = series.front();
    } else {
      const auto i = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(i);
      out[t] = series[i] + frac * (series[i + 1] - series[i]);
    }
  }
  return out;
}

std::vector<double> align_targets(const AudioClip& clip, const std::vector<double>& series,
                                  double target_rate_hz, double model_frame_rate_hz) {
  require(!series.empty(), ErrorCode::EmptySeries, clip.source_id);
  require(target_rate_hz > 0.0 && model_frame_rate_hz > 0.0, ErrorCode::InvalidArgument,
          "rates must be positive");
  const double frames = clip.duration_s() * model_frame_rate_hz;
  // Tolerate rounding just below an integer frame count.
  const auto n = static_cast<std::size_t>(std::floor(frames + 1e-9));
  return interpolate_series(series, target_rate_hz, n, model_frame_rate_hz);
}

}  // namespace paraling
