#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paraling/dsp.hpp"
#include "paraling/net.hpp"

namespace paraling {

/// Which scalar output to differentiate. For classification heads a negative
/// class index selects the predicted (argmax) class of each input; sequence
/// heads use the sum of their frame outputs.
struct OutputSelector {
  std::string head;
  int class_index = -1;
};

enum class SaliencyTarget { Logit, Probability };

struct SaliencyOptions {
  SaliencyTarget target = SaliencyTarget::Logit;
  bool absolute = true;
};

/// d selected output / d input, frames x bands.
Matrix input_gradients(const ModelParams& params, const Matrix& input, const OutputSelector& selector,
                       SaliencyTarget target = SaliencyTarget::Logit);

struct SaliencyMap {
  std::vector<double> per_band;
  std::optional<Matrix> per_cell;  // single-file map, |gradient| (or signed) per cell
};

/// Per band: mean over frames of |gradient| for each file, then mean over files.
/// When single_file is set the map also carries that file's per-cell gradients.
SaliencyMap band_importance(const ModelParams& params, std::span<const FeatureMatrix> dataset,
                            const OutputSelector& selector, const SaliencyOptions& opts = {},
                            std::optional<std::size_t> single_file = std::nullopt);

std::vector<SaliencyMap> band_importance(std::span<const ModelParams> models,
                                         std::span<const FeatureMatrix> dataset,
                                         const OutputSelector& selector, const SaliencyOptions& opts = {},
                                         std::optional<std::size_t> single_file = std::nullopt);

/// "band_index,center_hz,mean_abs_grad" rows.
std::string encode_saliency_csv(const SaliencyMap& map, std::span<const double> band_centers_hz);

}  // namespace paraling
