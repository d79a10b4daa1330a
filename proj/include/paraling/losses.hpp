#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace paraling {

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d prediction (logits for cross-entropy)
};

enum class LossKind { Corr, Mse, CorrPlusMse, CrossEntropy };

struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  double weight = 0.1;  // MSE term weight for CorrPlusMse
};

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& s);

/// Pearson correlation with population normalization, clamped to [-1, 1].
/// ConstantInput when either side has zero variance.
double pearson_r(std::span<const double> pred, std::span<const double> target);

/// 1 - r over the full sequence.
LossValue corr_loss(std::span<const double> pred, std::span<const double> target);

LossValue mse(std::span<const double> pred, std::span<const double> target);

LossValue corr_plus_mse(std::span<const double> pred, std::span<const double> target, double weight);

/// -log(max(posterior[label], 1e-12)); gradient w.r.t. the logits that
/// produced the posterior through softmax.
LossValue cross_entropy(std::span<const double> posterior, int label);

inline constexpr double kPosteriorFloor = 1e-12;

/// Regression loss dispatch for Corr / Mse / CorrPlusMse.
LossValue regression_loss(const LossSpec& spec, std::span<const double> pred,
                          std::span<const double> target);

std::vector<double> softmax(std::span<const double> logits);

/// Row = true class, column = predicted class.
using Confusion = std::vector<std::vector<std::size_t>>;

Confusion confusion_matrix(std::span<const int> truth, std::span<const int> predicted, int n_classes);

/// Mean of per-class recalls. EmptyClassRow if a true class has no counts.
double uar(const Confusion& confusion);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> v);

struct MetricReport {
  std::optional<double> pearson_r;
  std::optional<double> mse;
  std::optional<double> uar;
  std::optional<Confusion> confusion;

  /// "metric,value" rows; confusion cells as confusion_<true>_<pred>.
  std::string to_csv() const;
  /// Aligned two-column text for terminals.
  std::string to_text() const;
};

}  // namespace paraling
