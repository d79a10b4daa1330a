#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paraling/corpus.hpp"
#include "paraling/losses.hpp"
#include "paraling/net.hpp"

namespace paraling {

struct EnsembleSpec {
  int n_models = 10;
  std::uint64_t base_seed = 0;
  Architecture arch;
  TrainConfig tcfg;
  SamplerConfig sampler;
};

struct MemberSeeds {
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
  std::uint64_t sampler = 0;
};

/// Member i: init = base + i, shuffle = sampler = base + 1000 + i.
MemberSeeds member_seeds(std::uint64_t base_seed, int index);

struct EnsembleResult {
  std::vector<ModelParams> members;
  std::vector<std::vector<EpochLog>> logs;
};

/// Trains every member on the full data set. Members run on up to `workers`
/// threads; results are stored in member order so the output does not
/// depend on scheduling.
EnsembleResult train_ensemble(const EnsembleSpec& spec, std::span<const LabeledExample> data,
                              int workers = 1);

/// Per-source predictions for one task: posteriors (classification) or
/// per-frame values (regression).
struct PredictionSet {
  std::string task;
  std::vector<std::string> class_names;  // empty for regression
  std::map<std::string, std::vector<double>> rows;

  bool is_classification() const { return !class_names.empty(); }
  std::optional<int> n_classes() const {
    if (class_names.empty()) return std::nullopt;
    return static_cast<int>(class_names.size());
  }
};

PredictionSet average_predictions(std::span<const PredictionSet> members);

/// Convex combination with normalized nonnegative weights.
PredictionSet soft_vote(std::span<const PredictionSet> sources, std::span<const double> weights);

struct EvalOptions {
  /// Rate of regression prediction frames; targets are interpolated at
  /// t / frame_rate_hz. Required for regression sets.
  double frame_rate_hz = 0.0;
};

/// Classification: argmax decisions (lowest index on ties), confusion and UAR
/// over every labeled id. Regression: Pearson r and MSE per file, averaged
/// over files.
MetricReport evaluate(const PredictionSet& pred, const LabelTable& labels, const EvalOptions& opts = {});

/// Prediction CSV: "id,<class names...>" rows of posteriors, or
/// "id,frame_index,value" rows for regression. Rows are sorted by id.
std::string encode_predictions_csv(const PredictionSet& set);
PredictionSet decode_predictions_csv(const std::string& text, const std::string& task,
                                     const std::string& where = "predictions");
void write_predictions(const std::filesystem::path& path, const PredictionSet& set);
PredictionSet read_predictions(const std::filesystem::path& path, const std::string& task = "");

}  // namespace paraling
