#include <doctest.h>

#include <algorithm>
#include <map>

#include "paraling/error.hpp"
#include "paraling/sampling.hpp"
#include "test_util.hpp"

using namespace paraling;
using doctest::Approx;

namespace {

std::vector<LabeledExample> single_task(const std::vector<int>& labels, const std::string& task = "t") {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabeledExample e;
    e.id = "e" + std::to_string(i);
    e.labels[task] = labels[i];
    out.push_back(e);
  }
  return out;
}

std::vector<LabeledExample> two_task(const std::vector<std::pair<int, int>>& pairs) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    LabeledExample e;
    e.id = "e" + std::to_string(i);
    e.labels["A"] = pairs[i].first;
    e.labels["V"] = pairs[i].second;
    out.push_back(e);
  }
  return out;
}

std::map<std::size_t, int> multiplicity(const std::vector<std::size_t>& idx) {
  std::map<std::size_t, int> m;
  for (auto i : idx) ++m[i];
  return m;
}

}  // namespace

TEST_CASE("class_distribution") {
  const std::vector<int> a{0, 0, 1, 2};
  CHECK(class_distribution(a, 3).probs == std::vector<double>{0.5, 0.25, 0.25});
  const std::vector<int> b{1, 1};
  CHECK(class_distribution(b, 2).probs == std::vector<double>{0, 1});
  const std::vector<int> c{0, 5};
  CHECK_ERROR_CODE(class_distribution(c, 2), ErrorCode::LabelOutOfRange);
  CHECK_ERROR_CODE(class_distribution(std::vector<int>{}, 2), ErrorCode::EmptyLabels);
}

TEST_CASE("upsample balances by cycling") {
  const TaskSpec task{"t", 2};
  {
    const auto ex = single_task({0, 0, 1, 0, 1, 0});
    const auto idx = upsample(ex, task);
    CHECK(idx.size() == 8);
    const auto m = multiplicity(idx);
    CHECK(m.at(2) == 2);
    CHECK(m.at(4) == 2);
    for (std::size_t i : {0u, 1u, 3u, 5u}) CHECK(m.at(i) == 1);
  }
  {
    const auto ex = single_task({0, 1, 1, 0});
    auto idx = upsample(ex, task);
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<std::size_t>{0, 1, 2, 3});
  }
  {
    const auto ex = single_task({0, 1, 0, 1, 0});
    const auto idx = upsample(ex, task);
    CHECK(idx.size() == 6);
    std::vector<std::size_t> b;
    for (auto i : idx)
      if (ex[i].labels.at("t") == 1) b.push_back(i);
    CHECK(b == std::vector<std::size_t>{1, 3, 1});
  }
  CHECK_ERROR_CODE(upsample(single_task({0, 0}), task), ErrorCode::MissingClass);
}

TEST_CASE("upsample never drops and always equalizes") {
  Rng rng(17, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_classes = 2 + static_cast<int>(rng.below(4));
    std::vector<int> labels;
    for (int c = 0; c < n_classes; ++c) labels.push_back(c);
    const std::size_t extra = rng.below(40);
    for (std::size_t i = 0; i < extra; ++i) labels.push_back(static_cast<int>(rng.below(n_classes)));
    rng.shuffle(labels);
    const auto ex = single_task(labels);
    const auto idx = upsample(ex, {"t", n_classes});
    const auto m = multiplicity(idx);
    CHECK(m.size() == ex.size());
    std::vector<int> counts(n_classes, 0);
    for (auto i : idx) ++counts[ex[i].labels.at("t")];
    CHECK(std::all_of(counts.begin(), counts.end(), [&](int c) { return c == counts[0]; }));
  }
}

TEST_CASE("upsample_multitask balances label tuples") {
  const std::vector<TaskSpec> tasks{{"A", 2}, {"V", 2}};
  {
    const auto ex = two_task({{0, 0}, {0, 0}, {0, 1}, {1, 1}, {1, 1}});
    const auto idx = upsample_multitask(ex, tasks);
    CHECK(idx.size() == 6);
    CHECK(multiplicity(idx).at(2) == 2);
  }
  {
    const auto ex = two_task({{1, 0}, {1, 0}, {1, 0}});
    auto idx = upsample_multitask(ex, tasks);
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<std::size_t>{0, 1, 2});
  }
  {
    const auto ex = two_task({{0, 0}, {0, 0}, {1, 1}, {0, 0}});
    const auto idx = upsample_multitask(ex, tasks);
    CHECK(idx == std::vector<std::size_t>{0, 1, 3, 2, 2, 2});
    const auto marg = empirical_distribution(ex, idx, tasks[0]);
    CHECK(marg.probs == std::vector<double>{0.5, 0.5});
  }
}

TEST_CASE("probabilistic_target") {
  const Distribution orig{{0.5, 0.25, 0.25}};
  CHECK(probabilistic_target(orig, 1.0).probs == orig.probs);
  for (double p : probabilistic_target(orig, 0.0).probs) CHECK(p == Approx(1.0 / 3));
  const auto t = probabilistic_target(orig, 0.6);
  CHECK(t.probs[0] == Approx(0.4333333333).epsilon(1e-9));
  CHECK(t.probs[1] == Approx(0.2833333333).epsilon(1e-9));
  CHECK(t.probs[2] == Approx(0.2833333333).epsilon(1e-9));
}

TEST_CASE("probabilistic_target stays on the simplex and moves toward the original") {
  Rng rng(23, 0);
  for (int trial = 0; trial < 100; ++trial) {
    Distribution d;
    double s = 0;
    for (int c = 0; c < 5; ++c) s += d.probs.emplace_back(rng.uniform());
    for (auto& p : d.probs) p /= s;
    double prev = -1;
    for (double lambda = 1.0; lambda >= -1e-12; lambda -= 0.1) {
      const auto t = probabilistic_target(d, std::max(lambda, 0.0));
      double sum = 0;
      for (double p : t.probs) sum += p;
      CHECK(std::abs(sum - 1.0) < 1e-12);
      const double dist = l1_distance(t, d);
      CHECK(dist >= prev - 1e-15);
      prev = dist;
    }
  }
}

TEST_CASE("probabilistic_sampler") {
  {
    const auto ex = single_task({1, 1, 1});
    for (auto i : probabilistic_sampler(ex, {"t", 2}, 1.0, 3, 500)) CHECK(ex[i].labels.at("t") == 1);
  }
  {
    const auto ex = single_task({0, 0, 0, 0, 0, 0, 0, 1});
    const TaskSpec task{"t", 2};
    const auto idx = probabilistic_sampler(ex, task, 0.0, 99, 100000);
    CHECK(l1_distance(empirical_distribution(ex, idx, task), Distribution{{0.5, 0.5}}) <= 0.02);
  }
  {
    // Class 1 has zero target mass and zero examples: valid.
    const auto ex = single_task({0, 0});
    CHECK(probabilistic_sampler(ex, {"t", 2}, 1.0, 1, 10).size() == 10);
    const auto only1 = single_task({1});
    std::vector<LabeledExample> none_of_1 = single_task({0});
    // lambda < 1 spreads mass onto the missing class.
    CHECK_ERROR_CODE(probabilistic_sampler(none_of_1, {"t", 2}, 0.5, 1, 10), ErrorCode::UnreachableClass);
    CHECK(probabilistic_sampler(only1, {"t", 2}, 1.0, 1, 3).size() == 3);
  }
}

TEST_CASE("probabilistic_sampler is reproducible") {
  const auto ex = single_task({0, 1, 1, 2, 2, 2, 2});
  const TaskSpec task{"t", 3};
  const auto a = probabilistic_sampler(ex, task, 0.6, 42, 1000);
  CHECK(a == probabilistic_sampler(ex, task, 0.6, 42, 1000));
  CHECK(a != probabilistic_sampler(ex, task, 0.6, 43, 1000));
}

TEST_CASE("multitask sampler marginals converge when all pairs exist") {
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < 3; ++a)
    for (int v = 0; v < 3; ++v)
      for (int k = 0; k <= a * 3 + v; ++k) pairs.emplace_back(a, v);
  const auto ex = two_task(pairs);
  const std::vector<TaskSpec> tasks{{"A", 3}, {"V", 3}};
  const auto idx = probabilistic_sampler_multitask(ex, tasks, 0.0, 5, 100000, 100);
  const Distribution uniform{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
  for (const auto& t : tasks) CHECK(l1_distance(empirical_distribution(ex, idx, t), uniform) <= 0.02);
}

TEST_CASE("multitask sampler with one task reduces to the single-task sampler") {
  const auto ex = single_task({0, 0, 1, 2, 2, 2}, "A");
  const std::vector<TaskSpec> tasks{{"A", 3}};
  CHECK(probabilistic_sampler_multitask(ex, tasks, 0.6, 8, 5000, 100) ==
        probabilistic_sampler(ex, tasks[0], 0.6, 8, 5000));
}

TEST_CASE("multitask sampler falls back to the nearest tuple") {
  const auto ex = two_task({{0, 0}, {1, 1}});
  const std::vector<TaskSpec> tasks{{"A", 2}, {"V", 2}};
  // Always draws (0, 1), which has no examples.
  MultitaskProbabilisticSampler s(ex, tasks, {Distribution{{1, 0}}, Distribution{{0, 1}}}, 1, 7);
  for (int i = 0; i < 20; ++i) CHECK(s.next() == 0);
  CHECK(s.fallbacks() == 20);

  std::map<std::vector<int>, std::vector<std::size_t>> existing{{{0, 0}, {0}}, {{1, 1}, {1}}};
  CHECK(nearest_tuple(existing, {0, 1}) == std::vector<int>{0, 0});
  CHECK(nearest_tuple(existing, {1, 0}) == std::vector<int>{0, 0});
  CHECK(nearest_tuple(existing, {1, 1}) == std::vector<int>{1, 1});
  CHECK_ERROR_CODE(probabilistic_sampler_multitask(std::vector<LabeledExample>{}, tasks, 0.5, 1, 1, 1),
                   ErrorCode::NoExamples);
}

TEST_CASE("multitask sampler is reproducible") {
  const auto ex = two_task({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 1}});
  const std::vector<TaskSpec> tasks{{"A", 2}, {"V", 2}};
  CHECK(probabilistic_sampler_multitask(ex, tasks, 0.6, 3, 2000, 100) ==
        probabilistic_sampler_multitask(ex, tasks, 0.6, 3, 2000, 100));
}
