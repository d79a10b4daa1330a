#include "paraling/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "paraling/binio.hpp"
#include "paraling/checkpoint.hpp"
#include "paraling/corpus.hpp"
#include "paraling/dsp.hpp"
#include "paraling/error.hpp"
#include "paraling/features_io.hpp"
#include "paraling/saliency.hpp"
#include "paraling/text.hpp"

namespace paraling {

namespace {

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  require(fs::is_directory(dir), ErrorCode::NotFound, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string model_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "model_%03zu", i);
  return buf;
}

}  // namespace

std::vector<std::string> class_names(const RunConfig& cfg, const std::string& task) {
  return cfg.get_list("labels.classes." + task);
}

ExtractReport cmd_extract(const fs::path& audio_dir, const RunConfig& cfg, const fs::path& out_dir,
                          bool low_freq) {
  const DspConfig dsp = dsp_config(cfg);
  const std::string kind = cfg.get("dsp.features");
  require(kind == "mel" || kind == "raw", ErrorCode::InvalidConfig,
          "dsp.features must be mel or raw, got '" + kind + "'");
  require(!(low_freq && kind == "raw"), ErrorCode::InvalidConfig, "--low-freq needs dsp.features = mel");
  const int k = static_cast<int>(cfg.get_int("dsp.low_freq_k"));
  const int raw_frame = static_cast<int>(cfg.get_int("dsp.raw_frame"));
  const bool segmenting = segmentation_enabled(cfg);
  const double window_s = cfg.get_double("corpus.window_s");
  const double hop_s = cfg.get_double("corpus.hop_s");
  const bool pad_last = cfg.get_bool("corpus.pad_last");
  if (low_freq)
    require(k >= 1 && k <= dsp.n_mels, ErrorCode::KOutOfRange,
            "dsp.low_freq_k=" + std::to_string(k) + " with " + std::to_string(dsp.n_mels) + " bands");
  // Shared read-only across files.
  const FilterBank bank = kind == "mel" ? mel_filterbank(dsp, dsp.expected_sample_rate_hz) : FilterBank{};

  fs::create_directories(out_dir);
  ExtractReport report;
  for (const auto& wav : files_with_extension(audio_dir, ".wav")) {
    try {
      AudioClip clip = load_wav(wav);
      if (low_freq) clip = preprocess_low_freq(clip, dsp);
      std::vector<AudioClip> pieces;
      if (segmenting) {
        for (auto& s : segment(clip, window_s, hop_s, pad_last)) pieces.push_back(std::move(s.clip));
      } else {
        pieces.push_back(std::move(clip));
      }
      std::vector<std::pair<fs::path, FeatureMatrix>> outputs;
      for (const auto& piece : pieces) {
        FeatureMatrix m;
        if (kind == "raw") {
          m = frame_raw(piece, raw_frame);
        } else {
          m = mel_spectrogram(piece, dsp, bank);
          if (low_freq) m = lowest_k_bands(m, k);
        }
        outputs.emplace_back(out_dir / (piece.source_id + ".plfb"), std::move(m));
      }
      for (const auto& [path, m] : outputs) {
        write_plfb(path, m);
        report.written.push_back(path);
      }
    } catch (const Error& e) {
      report.failures.push_back({wav, e.what()});
    }
  }
  return report;
}

std::vector<std::pair<std::string, FeatureMatrix>> load_feature_dir(const fs::path& dir) {
  std::vector<std::pair<std::string, FeatureMatrix>> out;
  for (const auto& p : files_with_extension(dir, ".plfb")) out.emplace_back(p.stem().string(), read_plfb(p));
  require(!out.empty(), ErrorCode::NoExamples, "no .plfb files in " + dir.string());
  return out;
}

std::vector<LabeledExample> build_examples(const std::vector<std::pair<std::string, FeatureMatrix>>& features,
                                           const LabelTable& labels, const RunConfig& cfg,
                                           const Architecture& arch) {
  const double hop_s = cfg.get_double("corpus.hop_s");
  std::vector<LabeledExample> out;
  for (const auto& [id, m] : features) {
    const LabelRow* row = labels.find(id);
    if (!row) row = labels.find(parent_of(id));
    if (!row) continue;
    require(m.bands() == static_cast<std::size_t>(arch.input_bands), ErrorCode::ShapeMismatch,
            id + ": " + std::to_string(m.bands()) + " bands, expected " + std::to_string(arch.input_bands));
    LabeledExample ex;
    ex.id = id;
    ex.features = m;
    ex.labels = row->task_labels;
    if (!row->target_series.empty()) {
      const std::size_t frames = arch.conv_frames(m.frames());
      require(frames > 0, ErrorCode::ShapeMismatch, id + ": too few frames for the convolution");
      const double offset = static_cast<double>(segment_index_of(id).value_or(0)) * hop_s;
      ex.target = interpolate_series(row->target_series, row->target_rate_hz, frames,
                                     m.frame_rate_hz / arch.conv_stride, offset);
    }
    out.push_back(std::move(ex));
  }
  require(!out.empty(), ErrorCode::NoExamples, "no feature file matched a label row");
  return out;
}

TrainOutputs cmd_train(const fs::path& features_dir, const fs::path& labels_csv, const RunConfig& cfg,
                       const fs::path& out_dir, int workers) {
  const auto features = load_feature_dir(features_dir);
  const LabelTable labels = load_labels(labels_csv, label_schema(cfg));
  const EnsembleSpec spec = ensemble_spec(cfg, static_cast<int>(features.front().second.bands()));
  const auto examples = build_examples(features, labels, cfg, spec.arch);
  const EnsembleResult result = train_ensemble(spec, examples, workers);

  fs::create_directories(out_dir);
  TrainOutputs outs;
  try {
    for (std::size_t i = 0; i < result.members.size(); ++i) {
      const auto path = out_dir / (model_name(i) + ".plmp");
      outs.checkpoints.push_back(path);
      write_checkpoint(path, result.members[i]);
    }
    std::string dump = "# resolved configuration\n";
    for (int i = 0; i < spec.n_models; ++i) {
      const MemberSeeds s = member_seeds(spec.base_seed, i);
      dump += "# " + model_name(static_cast<std::size_t>(i)) + ": init_seed=" + std::to_string(s.init) +
              " shuffle_seed=" + std::to_string(s.shuffle) + " sampler_seed=" + std::to_string(s.sampler) +
              "\n";
    }
    dump += cfg.dump();
    outs.config_dump = out_dir / "config.txt";
    binio::write_file(outs.config_dump.string(), dump);

    std::string log = "model,epoch,train_loss";
    for (const auto& h : spec.arch.heads) {
      const char* metric = h.kind == HeadKind::Classification       ? "uar"
                           : h.kind == HeadKind::RegressionSequence ? "pearson_r"
                                                                    : "mse";
      log += "," + h.name + "_" + metric;
    }
    log += "\n";
    for (std::size_t i = 0; i < result.logs.size(); ++i) {
      for (const auto& e : result.logs[i]) {
        log += std::to_string(i) + "," + std::to_string(e.epoch) + "," + format_double(e.train_loss);
        for (const auto& h : spec.arch.heads) {
          const auto it = e.metric.find(h.name);
          log += "," + (it == e.metric.end() ? std::string() : format_double(it->second));
        }
        log += "\n";
      }
    }
    outs.log_csv = out_dir / "train_log.csv";
    binio::write_file(outs.log_csv.string(), log);
  } catch (...) {
    for (const auto& p : outs.checkpoints) fs::remove(p);
    throw;
  }
  return outs;
}

RunConfig load_run_config(const fs::path& checkpoint_dir) {
  require(fs::is_regular_file(checkpoint_dir / "config.txt"), ErrorCode::NotFound,
          "no config.txt in " + checkpoint_dir.string());
  RunConfig cfg;
  cfg.merge_file(checkpoint_dir / "config.txt");
  return cfg;
}

std::vector<fs::path> list_checkpoints(const fs::path& checkpoint_dir) {
  auto out = files_with_extension(checkpoint_dir, ".plmp");
  require(!out.empty(), ErrorCode::NotFound, "no .plmp checkpoints in " + checkpoint_dir.string());
  return out;
}

std::vector<PredictionSet> predict_sets(const ModelParams& params, const RunConfig& cfg,
                                        const std::vector<std::pair<std::string, FeatureMatrix>>& inputs) {
  const Architecture& arch = params.arch;
  std::vector<PredictionSet> sets(arch.heads.size());
  // Per head and parent id: (segment index, output) in arrival order.
  std::vector<std::map<std::string, std::vector<std::pair<std::size_t, std::vector<double>>>>> segments(
      arch.heads.size());
  for (std::size_t h = 0; h < arch.heads.size(); ++h) {
    sets[h].task = arch.heads[h].name;
    if (arch.heads[h].kind == HeadKind::Classification) {
      sets[h].class_names = class_names(cfg, arch.heads[h].name);
      require(static_cast<int>(sets[h].class_names.size()) == arch.heads[h].n_classes,
              ErrorCode::InvalidConfig, "class names do not match head " + arch.heads[h].name);
    }
  }
  for (const auto& [id, m] : inputs) {
    const auto outputs = predict(params, m.values);
    const std::size_t index = segment_index_of(id).value_or(0);
    for (std::size_t h = 0; h < arch.heads.size(); ++h) {
      const bool cls = arch.heads[h].kind == HeadKind::Classification;
      segments[h][parent_of(id)].emplace_back(index, cls ? outputs[h].posterior : outputs[h].raw);
    }
  }
  for (std::size_t h = 0; h < arch.heads.size(); ++h) {
    for (auto& [parent, parts] : segments[h]) {
      std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      std::vector<std::vector<double>> values;
      for (auto& part : parts) values.push_back(std::move(part.second));
      if (arch.heads[h].kind == HeadKind::Classification) {
        sets[h].rows[parent] = merge_segment_predictions(values);
      } else {
        // Sequence outputs of consecutive windows are concatenated.
        auto& row = sets[h].rows[parent];
        for (const auto& v : values) row.insert(row.end(), v.begin(), v.end());
      }
    }
  }
  return sets;
}

PredictOutputs cmd_predict(const fs::path& checkpoint_dir, const fs::path& features_dir,
                           const fs::path& out_dir, bool per_model) {
  const RunConfig cfg = load_run_config(checkpoint_dir);
  const auto inputs = load_feature_dir(features_dir);
  const auto ckpts = list_checkpoints(checkpoint_dir);
  std::vector<std::vector<PredictionSet>> by_head;
  Architecture arch;
  for (std::size_t i = 0; i < ckpts.size(); ++i) {
    const ModelParams params = read_checkpoint(ckpts[i]);
    if (i == 0) {
      arch = params.arch;
      by_head.resize(arch.heads.size());
    }
    require(params.arch == arch, ErrorCode::ShapeMismatch, ckpts[i].string() + ": architecture differs");
    auto sets = predict_sets(params, cfg, inputs);
    for (std::size_t h = 0; h < sets.size(); ++h) by_head[h].push_back(std::move(sets[h]));
  }

  fs::create_directories(out_dir);
  PredictOutputs outs;
  for (std::size_t h = 0; h < arch.heads.size(); ++h) {
    const std::string& task = arch.heads[h].name;
    const auto path = out_dir / (task + ".csv");
    write_predictions(path, average_predictions(by_head[h]));
    outs.files.push_back(path);
    if (per_model) {
      for (std::size_t i = 0; i < by_head[h].size(); ++i) {
        const auto member = out_dir / (task + "." + ckpts[i].stem().string() + ".csv");
        write_predictions(member, by_head[h][i]);
        outs.files.push_back(member);
      }
    }
    if (arch.heads[h].kind == HeadKind::RegressionSequence)
      outs.frame_rate_hz = inputs.front().second.frame_rate_hz / arch.conv_stride;
  }
  return outs;
}

PredictionSet cmd_fuse(const std::vector<fs::path>& inputs, const std::vector<double>& weights,
                       const fs::path& out) {
  require(!inputs.empty(), ErrorCode::InvalidArgument, "fuse needs at least one prediction file");
  const std::vector<double> w = weights.empty() ? std::vector<double>(inputs.size(), 1.0) : weights;
  std::vector<PredictionSet> sets;
  for (const auto& p : inputs) sets.push_back(read_predictions(p));
  PredictionSet fused = soft_vote(sets, w);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_predictions(out, fused);
  return fused;
}

std::vector<fs::path> cmd_saliency(const fs::path& checkpoint_dir, const fs::path& features_dir,
                                   const fs::path& out_dir) {
  return cmd_saliency(checkpoint_dir, features_dir, out_dir, load_run_config(checkpoint_dir));
}

std::vector<fs::path> cmd_saliency(const fs::path& checkpoint_dir, const fs::path& features_dir,
                                   const fs::path& out_dir, const RunConfig& cfg) {
  const auto inputs = load_feature_dir(features_dir);
  std::vector<FeatureMatrix> dataset;
  std::optional<std::size_t> single;
  const std::string single_id = cfg.get("saliency.file");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    dataset.push_back(inputs[i].second);
    if (!single_id.empty() && inputs[i].first == single_id) single = i;
  }
  require(single_id.empty() || single.has_value(), ErrorCode::NotFound,
          "saliency.file '" + single_id + "' not among the features");

  SaliencyOptions opts;
  const auto& target = cfg.get("saliency.target");
  if (target == "logit")
    opts.target = SaliencyTarget::Logit;
  else if (target == "probability")
    opts.target = SaliencyTarget::Probability;
  else
    fail(ErrorCode::InvalidConfig, "saliency.target must be logit or probability");
  opts.absolute = cfg.get_bool("saliency.absolute");

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const auto& ckpt : list_checkpoints(checkpoint_dir)) {
    const ModelParams params = read_checkpoint(ckpt);
    OutputSelector sel;
    sel.head = cfg.get("saliency.head").empty() ? params.arch.heads.front().name : cfg.get("saliency.head");
    sel.class_index = static_cast<int>(cfg.get_int("saliency.class"));
    const SaliencyMap map = band_importance(params, dataset, sel, opts, single);
    const auto csv = out_dir / (ckpt.stem().string() + ".csv");
    binio::write_file(csv.string(), encode_saliency_csv(map, dataset.front().band_centers_hz));
    written.push_back(csv);
    if (map.per_cell) {
      FeatureMatrix cells;
      cells.values = *map.per_cell;
      cells.frame_rate_hz = dataset[*single].frame_rate_hz;
      cells.band_centers_hz = dataset[*single].band_centers_hz;
      const auto plfb = out_dir / (ckpt.stem().string() + "." + single_id + ".plfb");
      write_plfb(plfb, cells);
      written.push_back(plfb);
    }
  }
  return written;
}

MetricReport cmd_evaluate(const fs::path& predictions_csv, const fs::path& labels_csv,
                          const RunConfig& cfg, const std::string& task, double frame_rate_hz,
                          const std::optional<fs::path>& out_csv) {
  const LabelSchema schema = label_schema(cfg);
  std::string chosen = task;
  if (chosen.empty()) chosen = schema.is_regression() ? "target" : schema.class_columns.front().task;
  const LabelTable labels = load_labels(labels_csv, schema);
  const PredictionSet pred = read_predictions(predictions_csv, chosen);
  if (pred.is_classification()) {
    const auto names = class_names(cfg, chosen);
    require(pred.class_names == names, ErrorCode::SchemaMismatch,
            predictions_csv.string() + ": class columns do not match labels.classes." + chosen);
  }
  const MetricReport report = evaluate(pred, labels, {frame_rate_hz});
  if (out_csv) binio::write_file(out_csv->string(), report.to_csv());
  return report;
}

}  // namespace paraling
