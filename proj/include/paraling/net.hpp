#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paraling/example.hpp"
#include "paraling/losses.hpp"
#include "paraling/matrix.hpp"
#include "paraling/sampling.hpp"

namespace paraling {

enum class HeadKind { Classification, RegressionScalar, RegressionSequence };

/// How utterance-level heads summarize the LSTM states.
enum class Readout { Final, Mean };

struct HeadSpec {
  std::string name;
  HeadKind kind = HeadKind::Classification;
  int n_classes = 2;  // classification only
  int ff_units = 100;

  int output_size() const { return kind == HeadKind::Classification ? n_classes : 1; }
  bool operator==(const HeadSpec&) const = default;
};

/// Conv1D(valid, ReLU) -> LSTM -> per-head ReLU hidden layer -> output layer.
struct Architecture {
  int input_bands = 64;
  int conv_filters = 100;
  int conv_kernel = 5;
  int conv_stride = 1;
  int lstm_units = 100;
  int ff_units = 100;
  Readout readout = Readout::Final;
  std::vector<HeadSpec> heads;

  void validate() const;
  /// Output frames of the valid convolution; 0 when the input is shorter than the kernel.
  std::size_t conv_frames(std::size_t input_frames) const;
  const HeadSpec& head(const std::string& name) const;
  std::size_t head_index(const std::string& name) const;

  bool operator==(const Architecture&) const = default;
};

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::string n, std::vector<std::size_t> s);
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

struct HeadParams {
  Tensor w1, b1, w2, b2;  // hidden [units x lstm], output [out x units]
  bool operator==(const HeadParams&) const = default;
};

/// Trainable tensors. LSTM gate blocks are stacked in the order
/// input, forget, candidate, output along the first axis.
struct ModelParams {
  Architecture arch;
  std::uint64_t init_seed = 0;
  Tensor conv_w;   // [filters x kernel x bands]
  Tensor conv_b;   // [filters]
  Tensor lstm_wx;  // [4H x filters]
  Tensor lstm_wh;  // [4H x H]
  Tensor lstm_b;   // [4H]
  std::vector<HeadParams> heads;

  /// Zero tensors with the shapes of `arch`.
  static ModelParams zeros(const Architecture& arch);

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<Tensor*> trunk_tensors();
  /// Tensors of head i only.
  std::vector<Tensor*> head_tensors(std::size_t i);

  bool operator==(const ModelParams&) const = default;
};

/// Glorot-uniform weights (fan_in/fan_out of each tensor viewed as out x in),
/// zero biases, LSTM forget-gate bias 1.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

double glorot_bound(std::size_t fan_in, std::size_t fan_out);

struct HeadOutput {
  std::vector<double> raw;        // logits, scalar value, or per-frame values
  std::vector<double> posterior;  // softmax(raw) for classification heads
};

struct HeadCache {
  Matrix input;       // rows = 1 (utterance heads) or conv frames (sequence heads)
  Matrix hidden_pre;
  Matrix hidden;
};

struct ForwardCache {
  Matrix input;
  Matrix conv_pre, conv_out;
  Matrix gates;  // post-activation, [T x 4H]
  Matrix cell, cell_tanh, hidden;
  std::vector<HeadCache> heads;
};

enum class Mode { Train, Infer };

struct ForwardResult {
  std::vector<HeadOutput> outputs;  // one per head, in architecture order
  std::optional<ForwardCache> cache;
};

ForwardResult forward(const ModelParams& params, const Matrix& input, Mode mode);

struct Gradients {
  ModelParams params;
  Matrix input;  // d / d input cells
};

/// head_grads[i] is d loss / d outputs[i].raw; an empty vector means zero.
Gradients backward(const ForwardResult& fwd, const ModelParams& params,
                   const std::vector<std::vector<double>>& head_grads);

std::vector<HeadOutput> predict(const ModelParams& params, const Matrix& input);

/// Mean of segment posteriors, renormalized.
std::vector<double> merge_segment_predictions(const std::vector<std::vector<double>>& posteriors);

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Per-head loss; heads absent here use cross_entropy (classification),
  /// corr (sequence) or mse (scalar).
  std::map<std::string, LossSpec> losses;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::optional<double> grad_clip = 5.0;  // global L2 norm
  bool log_metrics = true;

  LossSpec loss_for(const HeadSpec& head) const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  /// Per head: UAR (classification), mean Pearson r (sequence), MSE (scalar),
  /// computed on the unsampled training set after the epoch.
  std::map<std::string, double> metric;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

/// Loss of one example summed over heads, with per-head output gradients.
double example_loss(const Architecture& arch, const TrainConfig& tcfg, const LabeledExample& ex,
                    const std::vector<HeadOutput>& outputs,
                    std::vector<std::vector<double>>* head_grads);

TrainResult train(const Architecture& arch, std::span<const LabeledExample> data,
                  const SamplerConfig& sampler, const TrainConfig& tcfg);

/// Classification heads as sampler tasks.
std::vector<TaskSpec> classification_tasks(const Architecture& arch);

double global_norm(const ModelParams& grads);

}  // namespace paraling
