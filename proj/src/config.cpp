#include "paraling/config.hpp"

#include <fstream>
#include <sstream>

#include "paraling/error.hpp"
#include "paraling/text.hpp"

namespace paraling {

namespace {

constexpr std::string_view kClassPrefix = "labels.classes.";

}  // namespace

const std::map<std::string, std::string>& RunConfig::defaults() {
  static const std::map<std::string, std::string> d = {
      {"dsp.features", "mel"},
      {"dsp.sample_rate_hz", "16000"},
      {"dsp.n_fft", "2048"},
      {"dsp.hop", "512"},
      {"dsp.window", "hann"},
      {"dsp.n_mels", "64"},
      {"dsp.fmin_hz", "0"},
      {"dsp.fmax_hz", "0"},
      {"dsp.preemphasis_h", "1"},
      {"dsp.butterworth_order", "5"},
      {"dsp.butterworth_cutoff_hz", "400"},
      {"dsp.log_floor", "1e-10"},
      {"dsp.low_freq_k", "10"},
      {"dsp.raw_frame", "640"},
      {"corpus.segment", "auto"},
      {"corpus.window_s", "4"},
      {"corpus.hop_s", "4"},
      {"corpus.pad_last", "true"},
      {"labels.id_column", "id"},
      {"labels.tasks", ""},
      {"labels.target_column", ""},
      {"labels.rate_column", ""},
      {"sampler.mode", "none"},
      {"sampler.lambda", "1"},
      {"sampler.seed", "0"},
      {"sampler.max_rejects", "100"},
      {"net.conv_filters", "100"},
      {"net.conv_kernel", "5"},
      {"net.conv_stride", "1"},
      {"net.lstm_units", "100"},
      {"net.ff_units", "100"},
      {"net.readout", "final"},
      {"train.epochs", "30"},
      {"train.batch_size", "16"},
      {"train.learning_rate", "0.001"},
      {"train.optimizer", "adam"},
      {"train.adam_beta1", "0.9"},
      {"train.adam_beta2", "0.999"},
      {"train.adam_eps", "1e-8"},
      {"train.loss", "corr"},
      {"train.mse_weight", "0.1"},
      {"train.shuffle_seed", "0"},
      {"train.grad_clip", "5"},
      {"ensemble.n_models", "10"},
      {"ensemble.base_seed", "0"},
      {"saliency.head", ""},
      {"saliency.class", "-1"},
      {"saliency.target", "logit"},
      {"saliency.absolute", "true"},
      {"saliency.file", ""},
  };
  return d;
}

RunConfig::RunConfig() : values_(defaults()) {}

bool RunConfig::is_known_key(const std::string& key) {
  if (key.starts_with(kClassPrefix)) return key.size() > kClassPrefix.size();
  return defaults().count(key) > 0;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  require(is_known_key(key), ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos, ErrorCode::InvalidConfig, "expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::merge_text(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::InvalidConfig,
            where + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    require(is_known_key(key), ErrorCode::InvalidConfig,
            where + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    values_[key] = trim(line.substr(eq + 1));
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::InvalidConfig, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::InvalidConfig, "missing config key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  try {
    return parse_int(get(key), key);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const long long v = get_int(key);
  require(v >= 0, ErrorCode::InvalidConfig, key + " must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

double RunConfig::get_double(const std::string& key) const {
  try {
    return parse_double(get(key), key);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCode::InvalidConfig, key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  const auto& v = get(key);
  if (trim(v).empty()) return {};
  return split(v, ',');
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

DspConfig dsp_config(const RunConfig& cfg) {
  DspConfig d;
  d.expected_sample_rate_hz = static_cast<int>(cfg.get_int("dsp.sample_rate_hz"));
  d.n_fft = static_cast<int>(cfg.get_int("dsp.n_fft"));
  d.hop = static_cast<int>(cfg.get_int("dsp.hop"));
  const auto& w = cfg.get("dsp.window");
  if (w == "hann")
    d.window_fn = WindowFn::Hann;
  else if (w == "rectangular")
    d.window_fn = WindowFn::Rectangular;
  else
    fail(ErrorCode::InvalidConfig, "dsp.window: unknown window '" + w + "'");
  d.n_mels = static_cast<int>(cfg.get_int("dsp.n_mels"));
  d.fmin_hz = cfg.get_double("dsp.fmin_hz");
  d.fmax_hz = cfg.get_double("dsp.fmax_hz");
  d.preemphasis_h = cfg.get_double("dsp.preemphasis_h");
  d.butterworth_order = static_cast<int>(cfg.get_int("dsp.butterworth_order"));
  d.butterworth_cutoff_hz = cfg.get_double("dsp.butterworth_cutoff_hz");
  d.log_floor = cfg.get_double("dsp.log_floor");
  d.validate(d.expected_sample_rate_hz);
  return d;
}

SamplerConfig sampler_config(const RunConfig& cfg) {
  SamplerConfig s;
  const auto& mode = cfg.get("sampler.mode");
  if (mode == "none")
    s.mode = SamplerMode::None;
  else if (mode == "upsample")
    s.mode = SamplerMode::Upsample;
  else if (mode == "probabilistic")
    s.mode = SamplerMode::Probabilistic;
  else
    fail(ErrorCode::InvalidConfig, "sampler.mode: unknown mode '" + mode + "'");
  s.lambda = cfg.get_double("sampler.lambda");
  require(s.lambda >= 0.0 && s.lambda <= 1.0, ErrorCode::InvalidConfig, "sampler.lambda must lie in [0, 1]");
  s.seed = cfg.get_u64("sampler.seed");
  s.max_rejects = static_cast<int>(cfg.get_int("sampler.max_rejects"));
  require(s.max_rejects >= 1, ErrorCode::InvalidConfig, "sampler.max_rejects must be positive");
  return s;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.epochs = static_cast<int>(cfg.get_int("train.epochs"));
  require(t.epochs >= 1, ErrorCode::InvalidConfig, "train.epochs must be >= 1");
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
  require(t.batch_size >= 1, ErrorCode::InvalidConfig, "train.batch_size must be >= 1");
  t.learning_rate = cfg.get_double("train.learning_rate");
  require(t.learning_rate > 0.0, ErrorCode::InvalidConfig, "train.learning_rate must be > 0");
  const auto& opt = cfg.get("train.optimizer");
  if (opt == "adam")
    t.optimizer = OptimizerKind::Adam;
  else if (opt == "sgd")
    t.optimizer = OptimizerKind::Sgd;
  else
    fail(ErrorCode::InvalidConfig, "train.optimizer: unknown optimizer '" + opt + "'");
  t.adam_beta1 = cfg.get_double("train.adam_beta1");
  t.adam_beta2 = cfg.get_double("train.adam_beta2");
  t.adam_eps = cfg.get_double("train.adam_eps");
  t.shuffle_seed = cfg.get_u64("train.shuffle_seed");
  const double clip = cfg.get_double("train.grad_clip");
  t.grad_clip = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
  if (!cfg.get("labels.target_column").empty()) {
    LossSpec loss{parse_loss_kind(cfg.get("train.loss")), cfg.get_double("train.mse_weight")};
    require(loss.kind != LossKind::CrossEntropy, ErrorCode::InvalidConfig,
            "train.loss: regression targets need corr, mse or corr_plus_mse");
    require(loss.weight >= 0.0, ErrorCode::InvalidConfig, "train.mse_weight must be >= 0");
    t.losses["target"] = loss;
  }
  t.init_seed = cfg.get_u64("ensemble.base_seed");
  return t;
}

LabelSchema label_schema(const RunConfig& cfg) {
  LabelSchema s;
  s.id_column = cfg.get("labels.id_column");
  s.target_column = cfg.get("labels.target_column");
  s.rate_column = cfg.get("labels.rate_column");
  if (s.is_regression()) {
    require(!s.rate_column.empty(), ErrorCode::InvalidConfig,
            "labels.rate_column is required with labels.target_column");
    return s;
  }
  const auto tasks = cfg.get_list("labels.tasks");
  require(!tasks.empty(), ErrorCode::InvalidConfig, "labels.tasks or labels.target_column must be set");
  for (const auto& task : tasks) {
    ClassColumn col;
    col.task = task;
    const auto names = cfg.get_list(std::string(kClassPrefix) + task);
    require(names.size() >= 2, ErrorCode::InvalidConfig,
            std::string(kClassPrefix) + task + " must list at least two class names");
    for (std::size_t i = 0; i < names.size(); ++i)
      require(col.classes.emplace(names[i], static_cast<int>(i)).second, ErrorCode::InvalidConfig,
              "duplicate class name " + names[i] + " for task " + task);
    s.class_columns.push_back(std::move(col));
  }
  return s;
}

Architecture architecture(const RunConfig& cfg, int input_bands) {
  Architecture a;
  a.input_bands = input_bands;
  a.conv_filters = static_cast<int>(cfg.get_int("net.conv_filters"));
  a.conv_kernel = static_cast<int>(cfg.get_int("net.conv_kernel"));
  a.conv_stride = static_cast<int>(cfg.get_int("net.conv_stride"));
  a.lstm_units = static_cast<int>(cfg.get_int("net.lstm_units"));
  a.ff_units = static_cast<int>(cfg.get_int("net.ff_units"));
  const auto& readout = cfg.get("net.readout");
  if (readout == "final")
    a.readout = Readout::Final;
  else if (readout == "mean")
    a.readout = Readout::Mean;
  else
    fail(ErrorCode::InvalidConfig, "net.readout: unknown readout '" + readout + "'");
  const LabelSchema schema = label_schema(cfg);
  if (schema.is_regression()) {
    a.heads.push_back({"target", HeadKind::RegressionSequence, 0, a.ff_units});
  } else {
    for (const auto& col : schema.class_columns)
      a.heads.push_back({col.task, HeadKind::Classification, col.n_classes(), a.ff_units});
  }
  a.validate();
  return a;
}

EnsembleSpec ensemble_spec(const RunConfig& cfg, int input_bands) {
  EnsembleSpec e;
  e.n_models = static_cast<int>(cfg.get_int("ensemble.n_models"));
  require(e.n_models >= 1, ErrorCode::InvalidConfig, "ensemble.n_models must be >= 1");
  e.base_seed = cfg.get_u64("ensemble.base_seed");
  e.arch = architecture(cfg, input_bands);
  e.tcfg = train_config(cfg);
  e.sampler = sampler_config(cfg);
  return e;
}

bool segmentation_enabled(const RunConfig& cfg) {
  const auto& v = cfg.get("corpus.segment");
  if (v == "auto") return cfg.get("dsp.features") == "mel" && cfg.get("labels.target_column").empty();
  return cfg.get_bool("corpus.segment");
}

}  // namespace paraling
