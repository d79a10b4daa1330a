#include "paraling/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "paraling/error.hpp"

namespace paraling {

Distribution class_distribution(std::span<const int> labels, int n_classes) {
  require(!labels.empty(), ErrorCode::EmptyLabels, "class_distribution of no labels");
  require(n_classes >= 1, ErrorCode::InvalidArgument, "n_classes must be >= 1");
  Distribution d;
  d.probs.assign(static_cast<std::size_t>(n_classes), 0.0);
  for (int c : labels) {
    require(c >= 0 && c < n_classes, ErrorCode::LabelOutOfRange,
            "label " + std::to_string(c) + " with " + std::to_string(n_classes) + " classes");
    d.probs[static_cast<std::size_t>(c)] += 1.0;
  }
  for (double& p : d.probs) p /= static_cast<double>(labels.size());
  return d;
}

std::vector<int> task_labels(std::span<const LabeledExample> examples, const TaskSpec& task) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto it = ex.labels.find(task.name);
    require(it != ex.labels.end(), ErrorCode::LabelOutOfRange,
            ex.id + ": no label for task " + task.name);
    require(it->second >= 0 && it->second < task.n_classes, ErrorCode::LabelOutOfRange,
            ex.id + ": label " + std::to_string(it->second) + " for task " + task.name);
    out.push_back(it->second);
  }
  return out;
}

namespace {

template <typename Key>
std::vector<std::size_t> balance_groups(const std::map<Key, std::vector<std::size_t>>& groups) {
  std::size_t largest = 0;
  for (const auto& [key, members] : groups) largest = std::max(largest, members.size());
  std::vector<std::size_t> out;
  out.reserve(largest * groups.size());
  for (const auto& [key, members] : groups)
    for (std::size_t i = 0; i < largest; ++i) out.push_back(members[i % members.size()]);
  return out;
}

}  // namespace

std::vector<std::size_t> upsample(std::span<const LabeledExample> examples, const TaskSpec& task) {
  require(!examples.empty(), ErrorCode::EmptyLabels, "upsample of no examples");
  const auto labels = task_labels(examples, task);
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  for (int c = 0; c < task.n_classes; ++c)
    require(groups.count(c) > 0, ErrorCode::MissingClass,
            "task " + task.name + ": class " + std::to_string(c) + " has no examples");
  return balance_groups(groups);
}

std::vector<std::size_t> upsample_multitask(std::span<const LabeledExample> examples,
                                            std::span<const TaskSpec> tasks) {
  require(!examples.empty(), ErrorCode::EmptyLabels, "upsample of no examples");
  std::vector<std::vector<int>> per_task;
  for (const auto& t : tasks) per_task.push_back(task_labels(examples, t));
  std::map<std::vector<int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    std::vector<int> key;
    for (const auto& labels : per_task) key.push_back(labels[i]);
    groups[key].push_back(i);
  }
  return balance_groups(groups);
}

Distribution probabilistic_target(const Distribution& original, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument,
          "lambda must lie in [0, 1]");
  require(original.size() > 0, ErrorCode::EmptyLabels, "empty distribution");
  const double uniform = 1.0 / static_cast<double>(original.size());
  Distribution out;
  out.probs.reserve(original.size());
  for (double p : original.probs) out.probs.push_back(lambda * p + (1.0 - lambda) * uniform);
  return out;
}

namespace {

void check_reachable(const Distribution& target, const std::vector<std::vector<std::size_t>>& by_class,
                     const std::string& task) {
  for (std::size_t c = 0; c < target.size(); ++c)
    require(target.probs[c] <= 0.0 || !by_class[c].empty(), ErrorCode::UnreachableClass,
            "task " + task + ": class " + std::to_string(c) + " has target probability " +
                std::to_string(target.probs[c]) + " but no examples");
}

}  // namespace

ProbabilisticSampler::ProbabilisticSampler(std::span<const LabeledExample> examples,
                                           const TaskSpec& task, double lambda, std::uint64_t seed)
    : rng_(seed, stream::kSampler) {
  require(!examples.empty(), ErrorCode::NoExamples, "sampler over no examples");
  const auto labels = task_labels(examples, task);
  target_ = probabilistic_target(class_distribution(labels, task.n_classes), lambda);
  by_class_.resize(static_cast<std::size_t>(task.n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class_[labels[i]].push_back(i);
  check_reachable(target_, by_class_, task.name);
}

std::size_t ProbabilisticSampler::next() {
  const auto& members = by_class_[rng_.categorical(target_.probs)];
  return members[rng_.below(members.size())];
}

std::vector<std::size_t> ProbabilisticSampler::draw(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = next();
  return out;
}

std::vector<std::size_t> probabilistic_sampler(std::span<const LabeledExample> examples,
                                               const TaskSpec& task, double lambda,
                                               std::uint64_t seed, std::size_t n_draws) {
  return ProbabilisticSampler(examples, task, lambda, seed).draw(n_draws);
}

MultitaskProbabilisticSampler::MultitaskProbabilisticSampler(std::span<const LabeledExample> examples,
                                                             std::span<const TaskSpec> tasks,
                                                             double lambda, std::uint64_t seed,
                                                             int max_rejects)
    : rng_(seed, stream::kSampler), max_rejects_(max_rejects) {
  require(!examples.empty(), ErrorCode::NoExamples, "sampler over no examples");
  for (const auto& t : tasks)
    targets_.push_back(
        probabilistic_target(class_distribution(task_labels(examples, t), t.n_classes), lambda));
  build(examples, tasks);
}

MultitaskProbabilisticSampler::MultitaskProbabilisticSampler(std::span<const LabeledExample> examples,
                                                             std::span<const TaskSpec> tasks,
                                                             std::vector<Distribution> targets,
                                                             std::uint64_t seed, int max_rejects)
    : targets_(std::move(targets)), rng_(seed, stream::kSampler), max_rejects_(max_rejects) {
  require(!examples.empty(), ErrorCode::NoExamples, "sampler over no examples");
  require(targets_.size() == tasks.size(), ErrorCode::InvalidArgument, "one target per task");
  build(examples, tasks);
}

void MultitaskProbabilisticSampler::build(std::span<const LabeledExample> examples,
                                          std::span<const TaskSpec> tasks) {
  require(!tasks.empty(), ErrorCode::InvalidArgument, "at least one task");
  require(max_rejects_ >= 0, ErrorCode::InvalidArgument, "max_rejects must be >= 0");
  std::vector<std::vector<int>> per_task;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    per_task.push_back(task_labels(examples, tasks[t]));
    require(targets_[t].size() == static_cast<std::size_t>(tasks[t].n_classes),
            ErrorCode::InvalidArgument, "target size mismatch for task " + tasks[t].name);
    std::vector<std::vector<std::size_t>> by_class(targets_[t].size());
    for (std::size_t i = 0; i < examples.size(); ++i) by_class[per_task[t][i]].push_back(i);
    check_reachable(targets_[t], by_class, tasks[t].name);
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    std::vector<int> key;
    for (const auto& labels : per_task) key.push_back(labels[i]);
    by_tuple_[key].push_back(i);
  }
}

std::size_t MultitaskProbabilisticSampler::next() {
  std::vector<int> tuple(targets_.size());
  for (int attempt = 0;; ++attempt) {
    for (std::size_t t = 0; t < targets_.size(); ++t)
      tuple[t] = static_cast<int>(rng_.categorical(targets_[t].probs));
    const auto it = by_tuple_.find(tuple);
    if (it != by_tuple_.end()) return it->second[rng_.below(it->second.size())];
    if (attempt >= max_rejects_) break;
  }
  ++fallbacks_;
  const auto& members = by_tuple_.at(nearest_tuple(by_tuple_, tuple));
  return members[rng_.below(members.size())];
}

std::vector<std::size_t> MultitaskProbabilisticSampler::draw(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = next();
  return out;
}

std::vector<std::size_t> probabilistic_sampler_multitask(std::span<const LabeledExample> examples,
                                                         std::span<const TaskSpec> tasks,
                                                         double lambda, std::uint64_t seed,
                                                         std::size_t n_draws, int max_rejects) {
  return MultitaskProbabilisticSampler(examples, tasks, lambda, seed, max_rejects).draw(n_draws);
}

std::vector<int> nearest_tuple(const std::map<std::vector<int>, std::vector<std::size_t>>& existing,
                               const std::vector<int>& query) {
  require(!existing.empty(), ErrorCode::NoExamples, "no label tuples to fall back to");
  const std::vector<int>* best = nullptr;
  std::size_t best_dist = SIZE_MAX;
  // std::map iterates in lexicographic order, so the first minimum wins ties.
  for (const auto& [tuple, members] : existing) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i) d += tuple[i] != query[i];
    if (d < best_dist) {
      best_dist = d;
      best = &tuple;
    }
  }
  return *best;
}

double l1_distance(const Distribution& a, const Distribution& b) {
  require(a.size() == b.size(), ErrorCode::LengthMismatch, "distribution sizes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a.probs[i] - b.probs[i]);
  return d;
}

Distribution empirical_distribution(std::span<const LabeledExample> examples,
                                    std::span<const std::size_t> indices, const TaskSpec& task) {
  const auto labels = task_labels(examples, task);
  std::vector<int> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(labels.at(i));
  return class_distribution(picked, task.n_classes);
}

}  // namespace paraling
