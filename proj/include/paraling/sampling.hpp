#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "paraling/example.hpp"
#include "paraling/rng.hpp"

namespace paraling {

struct Distribution {
  std::vector<double> probs;  // index = class

  std::size_t size() const { return probs.size(); }
};

enum class SamplerMode { None, Upsample, Probabilistic };

struct SamplerConfig {
  SamplerMode mode = SamplerMode::None;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  int max_rejects = 100;
};

struct TaskSpec {
  std::string name;
  int n_classes = 2;
};

Distribution class_distribution(std::span<const int> labels, int n_classes);

/// Labels of `task` for every example; LabelOutOfRange if missing or out of range.
std::vector<int> task_labels(std::span<const LabeledExample> examples, const TaskSpec& task);

/// Balances classes by cycling through each minority class in original order
/// until every class has the majority count. Output is grouped by class.
std::vector<std::size_t> upsample(std::span<const LabeledExample> examples, const TaskSpec& task);

/// Same rule applied to groups of identical label tuples across tasks.
/// Groups are emitted in lexicographic tuple order.
std::vector<std::size_t> upsample_multitask(std::span<const LabeledExample> examples,
                                            std::span<const TaskSpec> tasks);

/// lambda * original + (1 - lambda) * uniform.
Distribution probabilistic_target(const Distribution& original, double lambda);

/// I.i.d. draws: class from the target distribution, then a uniform example of that class.
class ProbabilisticSampler {
 public:
  ProbabilisticSampler(std::span<const LabeledExample> examples, const TaskSpec& task,
                       double lambda, std::uint64_t seed);

  const Distribution& target() const { return target_; }
  std::size_t next();
  std::vector<std::size_t> draw(std::size_t n);

 private:
  Distribution target_;
  std::vector<std::vector<std::size_t>> by_class_;
  Rng rng_;
};

std::vector<std::size_t> probabilistic_sampler(std::span<const LabeledExample> examples,
                                               const TaskSpec& task, double lambda,
                                               std::uint64_t seed, std::size_t n_draws);

/// Multi-task variant: each task's label is drawn independently from its own
/// target; a drawn tuple with no examples is redrawn up to max_rejects times,
/// after which the existing tuple nearest in Hamming distance (lowest tuple
/// on ties) is used.
class MultitaskProbabilisticSampler {
 public:
  MultitaskProbabilisticSampler(std::span<const LabeledExample> examples,
                                std::span<const TaskSpec> tasks, double lambda, std::uint64_t seed,
                                int max_rejects);

  /// Explicit per-task targets instead of lambda mixing.
  MultitaskProbabilisticSampler(std::span<const LabeledExample> examples,
                                std::span<const TaskSpec> tasks, std::vector<Distribution> targets,
                                std::uint64_t seed, int max_rejects);

  const std::vector<Distribution>& targets() const { return targets_; }
  std::size_t next();
  std::vector<std::size_t> draw(std::size_t n);

  /// Number of draws that ended in the nearest-tuple fallback.
  std::size_t fallbacks() const { return fallbacks_; }

 private:
  void build(std::span<const LabeledExample> examples, std::span<const TaskSpec> tasks);

  std::vector<Distribution> targets_;
  std::map<std::vector<int>, std::vector<std::size_t>> by_tuple_;
  Rng rng_;
  int max_rejects_;
  std::size_t fallbacks_ = 0;
};

std::vector<std::size_t> probabilistic_sampler_multitask(std::span<const LabeledExample> examples,
                                                         std::span<const TaskSpec> tasks,
                                                         double lambda, std::uint64_t seed,
                                                         std::size_t n_draws, int max_rejects);

/// Existing tuple with minimum Hamming distance to `query`; ties go to the
/// lexicographically lowest tuple.
std::vector<int> nearest_tuple(const std::map<std::vector<int>, std::vector<std::size_t>>& existing,
                               const std::vector<int>& query);

double l1_distance(const Distribution& a, const Distribution& b);

/// Empirical class distribution of the examples selected by `indices`.
Distribution empirical_distribution(std::span<const LabeledExample> examples,
                                    std::span<const std::size_t> indices, const TaskSpec& task);

}  // namespace paraling
