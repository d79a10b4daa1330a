#include "paraling/saliency.hpp"

#include <cmath>

#include "paraling/error.hpp"
#include "paraling/losses.hpp"
#include "paraling/text.hpp"

namespace paraling {

Matrix input_gradients(const ModelParams& params, const Matrix& input, const OutputSelector& selector,
                       SaliencyTarget target) {
  const std::size_t hi = params.arch.head_index(selector.head);
  const HeadSpec& spec = params.arch.heads[hi];
  const auto fwd = forward(params, input, Mode::Train);
  const HeadOutput& out = fwd.outputs[hi];

  std::vector<std::vector<double>> grads(params.arch.heads.size());
  auto& g = grads[hi];
  g.assign(out.raw.size(), 0.0);
  if (spec.kind == HeadKind::Classification) {
    const int c = selector.class_index >= 0 ? selector.class_index : argmax(out.posterior);
    require(c < spec.n_classes, ErrorCode::LabelOutOfRange,
            "class " + std::to_string(c) + " for head " + spec.name);
    const auto cu = static_cast<std::size_t>(c);
    if (target == SaliencyTarget::Logit) {
      g[cu] = 1.0;
    } else {
      // d p_c / d z_k = p_c (delta_ck - p_k)
      for (std::size_t k = 0; k < g.size(); ++k)
        g[k] = out.posterior[cu] * ((k == cu ? 1.0 : 0.0) - out.posterior[k]);
    }
  } else {
    std::fill(g.begin(), g.end(), 1.0);
  }
  return backward(fwd, params, grads).input;
}

SaliencyMap band_importance(const ModelParams& params, std::span<const FeatureMatrix> dataset,
                            const OutputSelector& selector, const SaliencyOptions& opts,
                            std::optional<std::size_t> single_file) {
  require(!dataset.empty(), ErrorCode::NoExamples, "band_importance over an empty dataset");
  require(!single_file || *single_file < dataset.size(), ErrorCode::InvalidArgument,
          "single-file index out of range");
  const auto bands = static_cast<std::size_t>(params.arch.input_bands);
  SaliencyMap map;
  map.per_band.assign(bands, 0.0);
  for (std::size_t f = 0; f < dataset.size(); ++f) {
    Matrix grad = input_gradients(params, dataset[f].values, selector, opts.target);
    if (opts.absolute)
      for (double& v : grad.data()) v = std::abs(v);
    const auto frames = static_cast<double>(grad.rows());
    for (std::size_t t = 0; t < grad.rows(); ++t)
      for (std::size_t b = 0; b < bands; ++b) map.per_band[b] += grad(t, b) / frames;
    if (single_file && *single_file == f) map.per_cell = std::move(grad);
  }
  for (double& v : map.per_band) v /= static_cast<double>(dataset.size());
  return map;
}

std::vector<SaliencyMap> band_importance(std::span<const ModelParams> models,
                                         std::span<const FeatureMatrix> dataset,
                                         const OutputSelector& selector, const SaliencyOptions& opts,
                                         std::optional<std::size_t> single_file) {
  std::vector<SaliencyMap> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(band_importance(m, dataset, selector, opts, single_file));
  return out;
}

std::string encode_saliency_csv(const SaliencyMap& map, std::span<const double> band_centers_hz) {
  require(band_centers_hz.size() == map.per_band.size(), ErrorCode::ShapeMismatch,
          "band centers do not match saliency bands");
  std::string out = "band_index,center_hz,mean_abs_grad\n";
  for (std::size_t b = 0; b < map.per_band.size(); ++b)
    out += std::to_string(b) + "," + format_double(band_centers_hz[b]) + "," +
           format_double(map.per_band[b]) + "\n";
  return out;
}

}  // namespace paraling
