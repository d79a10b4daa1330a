#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nettest.hpp"
#include "paraling/error.hpp"
#include "paraling/saliency.hpp"
#include "test_util.hpp"

using namespace paraling;
using namespace nettest;
using doctest::Approx;

namespace {

FeatureMatrix feature(Rng& rng, std::size_t frames, std::size_t bands) {
  FeatureMatrix f;
  f.values = random_input(rng, frames, bands);
  f.frame_rate_hz = 100;
  for (std::size_t b = 0; b < bands; ++b) f.band_centers_hz.push_back(50.0 * (b + 1));
  return f;
}

}  // namespace

TEST_CASE("input gradients match finite differences") {
  Rng rng(8, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_params(tiny_arch(trial % 2 ? Readout::Mean : Readout::Final), 300 + trial);
    Matrix x = random_input(rng, 7, 3);
    for (auto [head, target] : {std::pair{"cls", SaliencyTarget::Logit}, std::pair{"cls", SaliencyTarget::Probability},
                                std::pair{"seq", SaliencyTarget::Logit}, std::pair{"val", SaliencyTarget::Logit}}) {
      const OutputSelector sel{head, trial % 3};
      const Matrix g = input_gradients(p, x, sel, target);
      const std::size_t hi = p.arch.head_index(head);
      auto selected = [&](const Matrix& in) {
        const auto out = predict(p, in)[hi];
        if (p.arch.heads[hi].kind != HeadKind::Classification) {
          double s = 0;
          for (double v : out.raw) s += v;
          return s;
        }
        return target == SaliencyTarget::Logit ? out.raw[sel.class_index] : out.posterior[sel.class_index];
      };
      double worst = 0;
      for (std::size_t i = 0; i < x.data().size(); ++i) {
        const double x0 = x.data()[i];
        x.data()[i] = x0 + 1e-5;
        const double up = selected(x);
        x.data()[i] = x0 - 1e-5;
        const double down = selected(x);
        x.data()[i] = x0;
        worst = std::max(worst, gradcheck::rel_error(g.data()[i], (up - down) / 2e-5));
      }
      INFO("trial " << trial << " head " << head);
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("predicted class is the default selection") {
  Rng rng(9, 0);
  const auto p = random_params(tiny_arch(), 5);
  const Matrix x = random_input(rng, 6, 3);
  const int c = argmax(predict(p, x)[0].posterior);
  CHECK(input_gradients(p, x, {"cls", -1}) == input_gradients(p, x, {"cls", c}));
  CHECK_ERROR_CODE(input_gradients(p, x, {"cls", 3}), ErrorCode::LabelOutOfRange);
  CHECK_ERROR_CODE(input_gradients(p, x, {"nope", 0}), ErrorCode::InvalidArgument);
}

TEST_CASE("zero conv weights give zero input gradients") {
  Rng rng(10, 0);
  auto p = random_params(tiny_arch(), 6);
  std::fill(p.conv_w.data.begin(), p.conv_w.data.end(), 0.0);
  const Matrix g = input_gradients(p, random_input(rng, 6, 3), {"cls", 0});
  for (double v : g.data()) CHECK(v == 0.0);
}

TEST_CASE("input gradients are deterministic") {
  Rng rng(11, 0);
  const auto p = random_params(tiny_arch(), 7);
  const auto q = p;
  const Matrix x = random_input(rng, 6, 3);
  CHECK(input_gradients(p, x, {"cls", -1}) == input_gradients(q, Matrix(x), {"cls", -1}));
}

TEST_CASE("band_importance reductions") {
  Rng rng(12, 0);
  const auto p = random_params(tiny_arch(), 8);
  // One output frame needs exactly kernel-many input frames.
  const FeatureMatrix one = feature(rng, 2, 3);
  const Matrix g = input_gradients(p, one.values, {"cls", 1});
  const auto single = band_importance(p, std::vector<FeatureMatrix>{one}, {"cls", 1}, {}, 0);
  for (std::size_t b = 0; b < 3; ++b)
    CHECK(single.per_band[b] == Approx((std::abs(g(0, b)) + std::abs(g(1, b))) / 2).epsilon(1e-15));
  const FeatureMatrix x = feature(rng, 9, 3);
  const auto base = band_importance(p, std::vector<FeatureMatrix>{x}, {"cls", -1});
  const auto dup = band_importance(p, std::vector<FeatureMatrix>(4, x), {"cls", -1});
  for (std::size_t b = 0; b < 3; ++b) CHECK(dup.per_band[b] == Approx(base.per_band[b]).epsilon(1e-14));
  CHECK_ERROR_CODE(band_importance(p, std::vector<FeatureMatrix>{}, {"cls", -1}), ErrorCode::NoExamples);
}

TEST_CASE("band_importance properties") {
  Rng rng(13, 0);
  const auto p = random_params(tiny_arch(), 9);
  std::vector<FeatureMatrix> data;
  for (int i = 0; i < 6; ++i) data.push_back(feature(rng, 6 + i, 3));
  const OutputSelector sel{"cls", 2};
  const auto base = band_importance(p, data, sel, {}, 3);
  for (double v : base.per_band) CHECK(v >= 0.0);
  REQUIRE(base.per_cell.has_value());
  CHECK(base.per_cell->rows() == data[3].frames());

  // Order independence.
  auto shuffled = data;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto rev = band_importance(p, shuffled, sel);
  for (std::size_t b = 0; b < 3; ++b) CHECK(rev.per_band[b] == Approx(base.per_band[b]).epsilon(1e-12));

  // Per-cell means reproduce the single-file per-band values.
  const auto alone = band_importance(p, std::vector<FeatureMatrix>{data[3]}, sel, {}, 0);
  for (std::size_t b = 0; b < 3; ++b) {
    double s = 0;
    for (std::size_t t = 0; t < alone.per_cell->rows(); ++t) s += (*alone.per_cell)(t, b);
    CHECK(std::abs(s / static_cast<double>(alone.per_cell->rows()) - alone.per_band[b]) < 1e-12);
  }

  // Scaling the selected logit's output weights scales every band by the same factor.
  for (double c : {0.5, 2.0, 3.0}) {
    ModelParams q = p;
    const std::size_t U = 6;
    for (std::size_t u = 0; u < U; ++u) q.heads[0].w2[2 * U + u] *= c;
    const auto scaled = band_importance(q, data, sel);
    for (std::size_t b = 0; b < 3; ++b) {
      if (c != 3.0)
        CHECK(scaled.per_band[b] == c * base.per_band[b]);
      else
        CHECK(scaled.per_band[b] == Approx(c * base.per_band[b]).epsilon(1e-13));
    }
  }

  const std::vector<ModelParams> models{p, p};
  const auto multi = band_importance(models, data, sel);
  REQUIRE(multi.size() == 2);
  CHECK(multi[1].per_band == band_importance(p, data, sel).per_band);
}

TEST_CASE("signed gradients when absolute is off") {
  Rng rng(14, 0);
  const auto p = random_params(tiny_arch(), 10);
  const FeatureMatrix x = feature(rng, 2, 3);
  const Matrix g = input_gradients(p, x.values, {"cls", 0});
  const auto m = band_importance(p, std::vector<FeatureMatrix>{x}, {"cls", 0}, {SaliencyTarget::Logit, false});
  for (std::size_t b = 0; b < 3; ++b) CHECK(m.per_band[b] == Approx((g(0, b) + g(1, b)) / 2).epsilon(1e-15));
}

TEST_CASE("band 0 dominates on a band-0 corpus") {
  const auto data = band0_corpus(16, 10, 4, 0.5, 21);
  TrainConfig tcfg;
  tcfg.epochs = 40;
  tcfg.batch_size = 4;
  tcfg.learning_rate = 1e-2;
  std::vector<FeatureMatrix> feats;
  for (const auto& e : data) feats.push_back(e.features);
  for (std::uint64_t seed : {1u, 2u}) {
    tcfg.init_seed = seed;
    tcfg.shuffle_seed = seed + 1000;
    const auto model = train(small_classifier(4), data, {}, tcfg).params;
    const auto m = band_importance(model, feats, {"cls", -1});
    CHECK(std::max_element(m.per_band.begin(), m.per_band.end()) - m.per_band.begin() == 0);
  }
}

TEST_CASE("saliency csv") {
  SaliencyMap m;
  m.per_band = {0.5, 0.25};
  CHECK(encode_saliency_csv(m, std::vector<double>{100, 200}) ==
        "band_index,center_hz,mean_abs_grad\n0,100,0.5\n1,200,0.25\n");
  CHECK_ERROR_CODE(encode_saliency_csv(m, std::vector<double>{100}), ErrorCode::ShapeMismatch);
}
