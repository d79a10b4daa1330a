#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "paraling/config.hpp"
#include "paraling/ensemble.hpp"
#include "paraling/example.hpp"
#include "paraling/losses.hpp"

namespace paraling {

namespace fs = std::filesystem;

struct FileFailure {
  fs::path path;
  std::string message;
};

struct ExtractReport {
  std::vector<fs::path> written;
  std::vector<FileFailure> failures;
};

/// One PLFB per clip (or per segment) for every *.wav in audio_dir. With
/// low_freq the audio is preprocessed and only the lowest dsp.low_freq_k
/// Mel bands are kept. Failing files are reported and skipped.
ExtractReport cmd_extract(const fs::path& audio_dir, const RunConfig& cfg, const fs::path& out_dir,
                          bool low_freq);

/// Loads every *.plfb in a directory, sorted by file name, keyed by stem.
std::vector<std::pair<std::string, FeatureMatrix>> load_feature_dir(const fs::path& dir);

/// Joins features with labels (segments inherit their parent's labels).
/// Features without a label row are skipped.
std::vector<LabeledExample> build_examples(const std::vector<std::pair<std::string, FeatureMatrix>>& features,
                                           const LabelTable& labels, const RunConfig& cfg,
                                           const Architecture& arch);

struct TrainOutputs {
  std::vector<fs::path> checkpoints;
  fs::path config_dump;
  fs::path log_csv;
};

/// Trains the configured ensemble and writes model_NNN.plmp, config.txt and
/// train_log.csv into out_dir. Checkpoints are removed again on failure.
TrainOutputs cmd_train(const fs::path& features_dir, const fs::path& labels_csv, const RunConfig& cfg,
                       const fs::path& out_dir, int workers);

/// Config stored next to the checkpoints by cmd_train.
RunConfig load_run_config(const fs::path& checkpoint_dir);
std::vector<fs::path> list_checkpoints(const fs::path& checkpoint_dir);

/// Per-head predictions of one model over named inputs. Classification
/// segments are merged into their parent id.
std::vector<PredictionSet> predict_sets(const ModelParams& params, const RunConfig& cfg,
                                        const std::vector<std::pair<std::string, FeatureMatrix>>& inputs);

struct PredictOutputs {
  std::vector<fs::path> files;
  /// Frame rate of regression outputs (0 for classification).
  double frame_rate_hz = 0.0;
};

/// Writes <task>.csv (ensemble average) per head, plus <task>.model_NNN.csv
/// per member when per_model is set.
PredictOutputs cmd_predict(const fs::path& checkpoint_dir, const fs::path& features_dir,
                           const fs::path& out_dir, bool per_model);

PredictionSet cmd_fuse(const std::vector<fs::path>& inputs, const std::vector<double>& weights,
                       const fs::path& out);

/// model_NNN.csv band importance per checkpoint; with saliency.file set, also
/// model_NNN.<id>.plfb holding that file's per-cell gradient map.
std::vector<fs::path> cmd_saliency(const fs::path& checkpoint_dir, const fs::path& features_dir,
                                   const fs::path& out_dir);
/// Same with saliency.* (and any other keys) taken from cfg.
std::vector<fs::path> cmd_saliency(const fs::path& checkpoint_dir, const fs::path& features_dir,
                                   const fs::path& out_dir, const RunConfig& cfg);

/// task empty = first configured task. frame_rate_hz is needed for regression.
MetricReport cmd_evaluate(const fs::path& predictions_csv, const fs::path& labels_csv,
                          const RunConfig& cfg, const std::string& task, double frame_rate_hz,
                          const std::optional<fs::path>& out_csv);

/// Class names of a task in index order from labels.classes.<task>.
std::vector<std::string> class_names(const RunConfig& cfg, const std::string& task);

}  // namespace paraling
