#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace paraling {

struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 0;
  std::string source_id;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

/// Reads a mono 16-bit PCM RIFF/WAVE file. Samples are int16 / 32768.
AudioClip load_wav(const std::filesystem::path& path);

/// Writes a mono 16-bit PCM WAV; samples are clipped to [-1, 1) and rounded.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

struct ClassColumn {
  std::string task;
  std::map<std::string, int> classes;  // class name -> index
  int n_classes() const { return static_cast<int>(classes.size()); }
};

/// Describes how a label CSV is laid out. Either class_columns is non-empty
/// (classification) or target_column/rate_column are set (regression).
struct LabelSchema {
  std::string id_column = "id";
  std::vector<ClassColumn> class_columns;
  std::string target_column;  // path to a series file, relative to the CSV
  std::string rate_column;    // target_rate_hz

  bool is_regression() const { return !target_column.empty(); }
};

struct LabelRow {
  std::string source_id;
  std::map<std::string, int> task_labels;
  std::vector<double> target_series;
  double target_rate_hz = 0.0;
};

struct LabelTable {
  std::vector<LabelRow> rows;

  const LabelRow* find(const std::string& id) const;
};

LabelTable load_labels(const std::filesystem::path& path, const LabelSchema& schema);

/// Reads one real per line (blank lines ignored).
std::vector<double> load_series(const std::filesystem::path& path);

struct Segment {
  AudioClip clip;
  std::string parent_id;
  double offset_s = 0.0;
};

/// Cuts a clip into windows of window_s every hop_s seconds. A final partial
/// window is zero-padded when pad_last is set; otherwise it is kept if at
/// least half a window long and dropped if shorter. Segment ids are
/// "<parent>__seg<k>" with k zero-padded to four digits.
std::vector<Segment> segment(const AudioClip& clip, double window_s, double hop_s, bool pad_last);

std::string segment_id(const std::string& parent, std::size_t index);

/// Inverse of segment_id; returns the id unchanged when it has no segment suffix.
std::string parent_of(const std::string& id);

/// Segment number encoded in the id, if any.
std::optional<std::size_t> segment_index_of(const std::string& id);

/// Linearly interpolates a series sampled at series_rate_hz at times
/// (offset_s + t / frame_rate_hz) for t in [0, n_frames). Times past the last
/// sample clamp to the last value.
std::vector<double> interpolate_series(const std::vector<double>& series, double series_rate_hz,
                                       std::size_t n_frames, double frame_rate_hz,
                                       double offset_s = 0.0);

/// Target frames for a clip: floor(duration * model_frame_rate_hz) frames.
std::vector<double> align_targets(const AudioClip& clip, const std::vector<double>& series,
                                  double target_rate_hz, double model_frame_rate_hz);

}  // namespace paraling
