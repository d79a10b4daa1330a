#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "paraling/error.hpp"
#include "paraling/pipeline.hpp"
#include "paraling/text.hpp"

namespace {

using namespace paraling;

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Data: return 1;
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Numeric: return 3;
  }
  return 1;
}

RunConfig make_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!path.empty()) cfg.merge_file(path);
  for (const auto& a : overrides) cfg.set_assignment(a);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paraling: paralinguistic feature extraction, training and analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--set", overrides, "key=value override (repeatable)");
  };

  std::string audio_dir, features_dir, labels_csv, ckpt_dir, out_path, task;
  std::vector<std::string> inputs;
  std::vector<double> weights;
  bool low_freq = false, per_model = false;
  int workers = 1;
  double frame_rate = 0.0;

  auto* extract = app.add_subcommand("extract", "WAV directory to PLFB feature files");
  extract->add_option("audio_dir", audio_dir)->required();
  extract->add_option("out_dir", out_path)->required();
  extract->add_flag("--low-freq", low_freq, "preprocess and keep the lowest dsp.low_freq_k bands");
  add_config(extract);

  auto* train = app.add_subcommand("train", "train an ensemble");
  train->add_option("features_dir", features_dir)->required();
  train->add_option("labels_csv", labels_csv)->required();
  train->add_option("out_dir", out_path)->required();
  train->add_option("--workers", workers, "parallel ensemble members")->check(CLI::PositiveNumber);
  add_config(train);

  auto* predict = app.add_subcommand("predict", "ensemble-averaged predictions");
  predict->add_option("checkpoint_dir", ckpt_dir)->required();
  predict->add_option("features_dir", features_dir)->required();
  predict->add_option("out_dir", out_path)->required();
  predict->add_flag("--per-model", per_model, "also write member predictions");

  auto* fuse = app.add_subcommand("fuse", "soft-vote prediction CSVs");
  fuse->add_option("inputs", inputs)->required();
  fuse->add_option("--weights", weights, "one weight per input (default equal)");
  fuse->add_option("--out", out_path)->required();

  auto* saliency = app.add_subcommand("saliency", "input-gradient band importance");
  saliency->add_option("checkpoint_dir", ckpt_dir)->required();
  saliency->add_option("features_dir", features_dir)->required();
  saliency->add_option("out_dir", out_path)->required();
  add_config(saliency);

  auto* evaluate = app.add_subcommand("evaluate", "metrics of a prediction CSV");
  std::string predictions_csv;
  evaluate->add_option("predictions_csv", predictions_csv)->required();
  evaluate->add_option("labels_csv", labels_csv)->required();
  evaluate->add_option("--task", task, "task to score (default first configured)");
  evaluate->add_option("--frame-rate", frame_rate, "regression prediction frame rate in Hz");
  std::string eval_out;
  evaluate->add_option("--out", eval_out, "also write the report as CSV");
  add_config(evaluate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*extract) {
      const auto report = cmd_extract(audio_dir, make_config(config_path, overrides), out_path, low_freq);
      for (const auto& f : report.failures) std::cerr << f.path.string() << ": " << f.message << "\n";
      std::cout << report.written.size() << " feature files written, " << report.failures.size()
                << " failed\n";
      return report.failures.empty() ? 0 : 1;
    }
    if (*train) {
      const auto outs = cmd_train(features_dir, labels_csv, make_config(config_path, overrides), out_path,
                                  workers);
      std::cout << outs.checkpoints.size() << " checkpoints written to " << out_path << "\n";
      return 0;
    }
    if (*predict) {
      const auto outs = cmd_predict(ckpt_dir, features_dir, out_path, per_model);
      for (const auto& f : outs.files) std::cout << f.string() << "\n";
      if (outs.frame_rate_hz > 0) std::cout << "frame_rate_hz " << format_double(outs.frame_rate_hz) << "\n";
      return 0;
    }
    if (*fuse) {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      cmd_fuse(paths, weights, out_path);
      return 0;
    }
    if (*saliency) {
      // Analysis options from --set override the stored training config.
      RunConfig cfg = load_run_config(ckpt_dir);
      if (!config_path.empty()) cfg.merge_file(config_path);
      for (const auto& a : overrides) cfg.set_assignment(a);
      const auto written = cmd_saliency(ckpt_dir, features_dir, out_path, cfg);
      for (const auto& f : written) std::cout << f.string() << "\n";
      return 0;
    }
    if (*evaluate) {
      std::optional<fs::path> out;
      if (!eval_out.empty()) out = eval_out;
      const auto report = cmd_evaluate(predictions_csv, labels_csv, make_config(config_path, overrides), task,
                                       frame_rate, out);
      std::cout << report.to_text();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(category(e.code()));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
