#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "paraling/corpus.hpp"
#include "paraling/dsp.hpp"
#include "paraling/ensemble.hpp"
#include "paraling/net.hpp"
#include "paraling/sampling.hpp"

namespace paraling {

/// Flat key = value configuration. Every fixed key has a built-in default;
/// the only open-ended family is labels.classes.<task>, whose value lists the
/// class names of that task in index order.
class RunConfig {
 public:
  RunConfig();

  /// Parses "key = value" lines; '#' starts a comment. Later values win.
  void merge_text(const std::string& text, const std::string& where = "config");
  void merge_file(const std::filesystem::path& path);
  /// "key=value" override from the command line.
  void set(const std::string& key, const std::string& value);
  void set_assignment(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  std::string get_string(const std::string& key) const { return get(key); }
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// Sorted "key = value" lines; enough to reproduce a run.
  std::string dump() const;

  static bool is_known_key(const std::string& key);
  static const std::map<std::string, std::string>& defaults();

 private:
  std::map<std::string, std::string> values_;
};

DspConfig dsp_config(const RunConfig& cfg);
SamplerConfig sampler_config(const RunConfig& cfg);
TrainConfig train_config(const RunConfig& cfg);
LabelSchema label_schema(const RunConfig& cfg);

/// Layer sizes from net.*; heads derived from the label schema: one
/// classification head per task, or a single "target" sequence head.
Architecture architecture(const RunConfig& cfg, int input_bands);

EnsembleSpec ensemble_spec(const RunConfig& cfg, int input_bands);

/// Whether extraction cuts clips into windows (corpus.segment; "auto" means
/// yes for Mel features with class labels, no for raw frames or regression).
bool segmentation_enabled(const RunConfig& cfg);

}  // namespace paraling
