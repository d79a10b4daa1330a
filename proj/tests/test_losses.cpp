#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "paraling/error.hpp"
#include "paraling/losses.hpp"
#include "paraling/rng.hpp"
#include "test_util.hpp"

using namespace paraling;
using doctest::Approx;

namespace {

using Vec = std::vector<double>;

Vec random_vec(Rng& rng, std::size_t n) {
  Vec v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("pearson_r") {
  CHECK(pearson_r(Vec{1, 2, 3}, Vec{1, 2, 3}) == Approx(1.0).epsilon(1e-15));
  CHECK(pearson_r(Vec{1, 2, 3}, Vec{3, 2, 1}) == Approx(-1.0).epsilon(1e-15));
  CHECK(pearson_r(Vec{1, 2, 3, 4}, Vec{1, 3, 2, 4}) == Approx(0.8).epsilon(1e-14));
  CHECK_ERROR_CODE(pearson_r(Vec{1, 2, 3}, Vec{2, 2, 2}), ErrorCode::ConstantInput);
  CHECK_ERROR_CODE(pearson_r(Vec{2, 2, 2}, Vec{1, 2, 3}), ErrorCode::ConstantInput);
  CHECK_ERROR_CODE(pearson_r(Vec{1, 2}, Vec{1, 2, 3}), ErrorCode::LengthMismatch);
  CHECK_ERROR_CODE(pearson_r(Vec{1}, Vec{1}), ErrorCode::LengthMismatch);
}

TEST_CASE("pearson_r is affine invariant") {
  Rng rng(31, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec p = random_vec(rng, 12), t = random_vec(rng, 12);
    const double r = pearson_r(p, t);
    const double a = rng.uniform(0.1, 10), b = rng.uniform(-5, 5);
    Vec q(p.size()), neg(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i] = a * p[i] + b;
      neg[i] = -a * p[i] + b;
    }
    CHECK(std::abs(pearson_r(q, t) - r) < 1e-12);
    CHECK(std::abs(pearson_r(neg, t) + r) < 1e-12);
  }
}

TEST_CASE("corr_loss values and range") {
  CHECK(corr_loss(Vec{1, 2, 3}, Vec{1, 2, 3}).loss == Approx(0.0));
  CHECK(corr_loss(Vec{-1, -2, -3}, Vec{1, 2, 3}).loss == Approx(2.0));
  Rng rng(2, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const double l = corr_loss(random_vec(rng, 8), random_vec(rng, 8)).loss;
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
  }
}

TEST_CASE("mse values") {
  CHECK(mse(Vec{1, 2}, Vec{1, 2}).loss == 0.0);
  CHECK(mse(Vec{0, 0}, Vec{1, 1}).loss == 1.0);
  CHECK(mse(Vec{1, 2}, Vec{0, 4}).loss == 2.5);
  CHECK(mse(Vec{1, 2}, Vec{0, 4}).grad == Vec{1.0, -2.0});
  CHECK_ERROR_CODE(mse(Vec{1}, Vec{1, 2}), ErrorCode::LengthMismatch);
  CHECK_ERROR_CODE(mse(Vec{}, Vec{}), ErrorCode::LengthMismatch);
}

TEST_CASE("corr_plus_mse composes its parts") {
  Rng rng(8, 0);
  const Vec p = random_vec(rng, 10), t = random_vec(rng, 10);
  const auto c = corr_loss(p, t);
  const auto m = mse(p, t);
  const auto zero = corr_plus_mse(p, t, 0.0);
  CHECK(zero.loss == c.loss);
  CHECK(zero.grad == c.grad);
  const auto combo = corr_plus_mse(p, t, 0.1);
  CHECK(combo.loss == Approx(c.loss + 0.1 * m.loss).epsilon(1e-15));
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(combo.grad[i] == Approx(c.grad[i] + 0.1 * m.grad[i]).epsilon(1e-15));
  CHECK(corr_plus_mse(t, t, 0.1).loss == Approx(0.0));
  CHECK(LossSpec{LossKind::CorrPlusMse}.weight == 0.1);
}

TEST_CASE("cross_entropy values") {
  CHECK(cross_entropy(Vec{1, 0}, 0).loss == Approx(0.0));
  CHECK(cross_entropy(Vec{0.25, 0.25, 0.25, 0.25}, 2).loss == Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(cross_entropy(Vec{1, 0}, 1).loss == Approx(-std::log(kPosteriorFloor)));
  CHECK(cross_entropy(Vec{0.7, 0.3}, 1).grad == Vec{0.7, 0.3 - 1.0});
  CHECK_ERROR_CODE(cross_entropy(Vec{0.5, 0.5}, 2), ErrorCode::LabelOutOfRange);
  CHECK_ERROR_CODE(cross_entropy(Vec{0.5, 0.5}, -1), ErrorCode::LabelOutOfRange);
}

TEST_CASE("loss gradients match central differences") {
  Rng rng(77, 0);
  const double h = 1e-6;
  for (int trial = 0; trial < 25; ++trial) {
    const Vec p = random_vec(rng, 10), t = random_vec(rng, 10);
    auto check = [&](auto fn) {
      const auto analytic = fn(p).grad;
      CHECK(gradcheck::max_rel_error([&](const Vec& x) { return fn(x).loss; }, p, analytic, h) < 1e-6);
    };
    check([&](const Vec& x) { return corr_loss(x, t); });
    check([&](const Vec& x) { return mse(x, t); });
    check([&](const Vec& x) { return corr_plus_mse(x, t, 0.1); });

    const Vec logits = random_vec(rng, 4);
    const int label = static_cast<int>(rng.below(4));
    const auto ce = cross_entropy(softmax(logits), label);
    CHECK(gradcheck::max_rel_error([&](const Vec& z) { return cross_entropy(softmax(z), label).loss; }, logits,
                                   ce.grad, h) < 1e-6);
  }
}

TEST_CASE("softmax") {
  const auto p = softmax(Vec{1000, 1000, -1000});
  CHECK(p[0] == Approx(0.5));
  CHECK(p[1] == Approx(0.5));
  CHECK(p[2] >= 0.0);
  double s = 0;
  for (double v : softmax(Vec{0.3, -2, 7, 1})) s += v;
  CHECK(s == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uar") {
  CHECK(uar({{3, 0, 0}, {0, 5, 0}, {0, 0, 1}}) == 1.0);
  CHECK(uar({{2, 0}, {1, 1}}) == 0.75);
  CHECK(uar({{4, 0, 0}, {4, 0, 0}, {4, 0, 0}}) == Approx(1.0 / 3));
  CHECK_ERROR_CODE(uar({{1, 0}, {0, 0}}), ErrorCode::EmptyClassRow);
}

TEST_CASE("uar is invariant to row scaling") {
  Rng rng(12, 0);
  for (int trial = 0; trial < 30; ++trial) {
    Confusion c(3, std::vector<std::size_t>(3));
    for (auto& row : c) {
      for (auto& v : row) v = rng.below(10);
      row[0] += 1;
    }
    const double base = uar(c);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    auto scaled = c;
    const std::size_t r = rng.below(3), k = 1 + rng.below(7);
    for (auto& v : scaled[r]) v *= k;
    CHECK(uar(scaled) == Approx(base).epsilon(1e-15));
  }
}

TEST_CASE("confusion_matrix and argmax") {
  const std::vector<int> truth{0, 0, 1, 1}, pred{0, 0, 0, 1};
  const Confusion c = confusion_matrix(truth, pred, 2);
  CHECK(c == Confusion{{2, 0}, {1, 1}});
  CHECK(uar(c) == 0.75);
  CHECK(argmax(Vec{0.5, 0.5}) == 0);
  CHECK(argmax(Vec{0.1, 0.7, 0.7}) == 1);
  CHECK_ERROR_CODE(confusion_matrix(truth, std::vector<int>{0, 2, 0, 0}, 2), ErrorCode::LabelOutOfRange);
}

TEST_CASE("metric report formats") {
  MetricReport r;
  r.uar = 0.75;
  r.confusion = Confusion{{2, 0}, {1, 1}};
  const std::string csv = r.to_csv();
  CHECK(csv.rfind("metric,value\n", 0) == 0);
  CHECK(csv.find("uar,0.75\n") != std::string::npos);
  CHECK(csv.find("confusion_1_0,1\n") != std::string::npos);
  CHECK(csv.find("pearson_r") == std::string::npos);
  CHECK(r.to_text().find("0.75") != std::string::npos);
}

TEST_CASE("loss kind names") {
  for (auto k : {LossKind::Corr, LossKind::Mse, LossKind::CorrPlusMse, LossKind::CrossEntropy})
    CHECK(parse_loss_kind(to_string(k)) == k);
  CHECK_ERROR_CODE(parse_loss_kind("ccc"), ErrorCode::InvalidConfig);
}
