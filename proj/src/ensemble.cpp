#include "paraling/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include "paraling/binio.hpp"
#include "paraling/error.hpp"
#include "paraling/text.hpp"

namespace paraling {

MemberSeeds member_seeds(std::uint64_t base_seed, int index) {
  const auto i = static_cast<std::uint64_t>(index);
  return {base_seed + i, base_seed + 1000 + i, base_seed + 1000 + i};
}

EnsembleResult train_ensemble(const EnsembleSpec& spec, std::span<const LabeledExample> data,
                              int workers) {
  require(spec.n_models >= 1, ErrorCode::InvalidConfig, "ensemble needs n_models >= 1");
  require(workers >= 1, ErrorCode::InvalidConfig, "workers must be >= 1");
  const auto n = static_cast<std::size_t>(spec.n_models);
  std::vector<std::optional<TrainResult>> results(n);
  std::vector<std::exception_ptr> errors(n);

  auto run_member = [&](std::size_t i) {
    try {
      const MemberSeeds seeds = member_seeds(spec.base_seed, static_cast<int>(i));
      TrainConfig tcfg = spec.tcfg;
      tcfg.init_seed = seeds.init;
      tcfg.shuffle_seed = seeds.shuffle;
      SamplerConfig sc = spec.sampler;
      sc.seed = seeds.sampler;
      results[i] = train(spec.arch, data, sc, tcfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t threads = std::min(n, static_cast<std::size_t>(workers));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_member(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_member(i);
      });
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "ensemble member " + std::to_string(i) + ": " + e.what());
    }
  }
  EnsembleResult out;
  for (auto& r : results) {
    out.members.push_back(std::move(r->params));
    out.logs.push_back(std::move(r->log));
  }
  return out;
}

namespace {

void check_aligned(std::span<const PredictionSet> sets) {
  require(!sets.empty(), ErrorCode::InvalidArgument, "no prediction sets to combine");
  const PredictionSet& ref = sets.front();
  for (const auto& s : sets) {
    require(s.task == ref.task, ErrorCode::IdMismatch, "tasks differ: " + s.task + " vs " + ref.task);
    require(s.class_names == ref.class_names, ErrorCode::ShapeMismatch, "class columns differ");
    require(s.rows.size() == ref.rows.size(), ErrorCode::IdMismatch, "sources cover different ids");
    auto a = s.rows.begin();
    for (auto b = ref.rows.begin(); b != ref.rows.end(); ++a, ++b) {
      require(a->first == b->first, ErrorCode::IdMismatch, "id " + a->first + " vs " + b->first);
      require(a->second.size() == b->second.size(), ErrorCode::ShapeMismatch,
              "row " + a->first + " has different length across sources");
    }
  }
}

PredictionSet combine(std::span<const PredictionSet> sets, const std::vector<double>& w) {
  check_aligned(sets);
  PredictionSet out;
  out.task = sets.front().task;
  out.class_names = sets.front().class_names;
  for (const auto& [id, ref] : sets.front().rows) {
    std::vector<double> acc(ref.size(), 0.0);
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const auto& row = sets[s].rows.at(id);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w[s] * row[k];
    }
    if (out.is_classification()) {
      const double sum = std::accumulate(acc.begin(), acc.end(), 0.0);
      if (sum > 0.0)
        for (double& v : acc) v /= sum;
    }
    out.rows.emplace(id, std::move(acc));
  }
  return out;
}

}  // namespace

PredictionSet average_predictions(std::span<const PredictionSet> members) {
  require(!members.empty(), ErrorCode::InvalidArgument, "no prediction sets to average");
  return combine(members, std::vector<double>(members.size(), 1.0 / static_cast<double>(members.size())));
}

PredictionSet soft_vote(std::span<const PredictionSet> sources, std::span<const double> weights) {
  require(weights.size() == sources.size(), ErrorCode::InvalidArgument,
          std::to_string(weights.size()) + " weights for " + std::to_string(sources.size()) + " sources");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, ErrorCode::NonPositiveWeights, "weights must be nonnegative");
    total += w;
  }
  require(total > 0.0, ErrorCode::NonPositiveWeights, "weights must not all be zero");
  std::vector<double> w;
  for (double v : weights) w.push_back(v / total);
  return combine(sources, w);
}

MetricReport evaluate(const PredictionSet& pred, const LabelTable& labels, const EvalOptions& opts) {
  MetricReport report;
  require(!labels.rows.empty(), ErrorCode::EmptyLabels, "label table is empty");
  if (pred.is_classification()) {
    std::vector<int> truth, decided;
    for (const auto& row : labels.rows) {
      const auto it = pred.rows.find(row.source_id);
      require(it != pred.rows.end(), ErrorCode::MissingPrediction, row.source_id);
      const auto lab = row.task_labels.find(pred.task);
      require(lab != row.task_labels.end(), ErrorCode::SchemaMismatch,
              row.source_id + ": no label for task " + pred.task);
      truth.push_back(lab->second);
      decided.push_back(argmax(it->second));
    }
    auto conf = confusion_matrix(truth, decided, static_cast<int>(pred.class_names.size()));
    report.uar = uar(conf);
    report.confusion = std::move(conf);
    return report;
  }
  require(opts.frame_rate_hz > 0.0, ErrorCode::InvalidArgument,
          "regression evaluation needs the prediction frame rate");
  double r_sum = 0.0, mse_sum = 0.0;
  for (const auto& row : labels.rows) {
    const auto it = pred.rows.find(row.source_id);
    require(it != pred.rows.end(), ErrorCode::MissingPrediction, row.source_id);
    const auto target =
        interpolate_series(row.target_series, row.target_rate_hz, it->second.size(), opts.frame_rate_hz);
    r_sum += pearson_r(it->second, target);
    mse_sum += mse(it->second, target).loss;
  }
  const auto n = static_cast<double>(labels.rows.size());
  report.pearson_r = r_sum / n;
  report.mse = mse_sum / n;
  return report;
}

std::string encode_predictions_csv(const PredictionSet& set) {
  std::string out = "id";
  if (set.is_classification()) {
    for (const auto& c : set.class_names) out += "," + c;
    out += "\n";
    for (const auto& [id, row] : set.rows) {
      require(row.size() == set.class_names.size(), ErrorCode::ShapeMismatch, "row " + id);
      out += id;
      for (double v : row) out += "," + format_double(v);
      out += "\n";
    }
  } else {
    out += ",frame_index,value\n";
    for (const auto& [id, row] : set.rows)
      for (std::size_t t = 0; t < row.size(); ++t)
        out += id + "," + std::to_string(t) + "," + format_double(row[t]) + "\n";
  }
  return out;
}

PredictionSet decode_predictions_csv(const std::string& text, const std::string& task,
                                     const std::string& where) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::SchemaMismatch, where + ": empty file");
  const auto header = split(trim(line), ',');
  require(header.size() >= 2 && header[0] == "id", ErrorCode::SchemaMismatch,
          where + ": header must start with id");
  PredictionSet set;
  set.task = task;
  const bool regression = header.size() == 3 && header[1] == "frame_index" && header[2] == "value";
  if (!regression) set.class_names.assign(header.begin() + 1, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    const std::string at = where + ":" + std::to_string(line_no);
    require(cells.size() == header.size(), ErrorCode::SchemaMismatch, at + ": wrong cell count");
    if (regression) {
      auto& row = set.rows[cells[0]];
      const auto idx = parse_int(cells[1], at);
      require(idx == static_cast<long long>(row.size()), ErrorCode::SchemaMismatch,
              at + ": frames must be listed in order from 0");
      row.push_back(parse_double(cells[2], at));
    } else {
      std::vector<double> row;
      for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(parse_double(cells[k], at));
      require(set.rows.emplace(cells[0], std::move(row)).second, ErrorCode::DuplicateId,
              at + ": " + cells[0]);
    }
  }
  return set;
}

void write_predictions(const std::filesystem::path& path, const PredictionSet& set) {
  binio::write_file(path.string(), encode_predictions_csv(set));
}

PredictionSet read_predictions(const std::filesystem::path& path, const std::string& task) {
  return decode_predictions_csv(binio::read_file(path.string()), task, path.string());
}

}  // namespace paraling
