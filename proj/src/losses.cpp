#include "paraling/losses.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "paraling/error.hpp"
#include "paraling/text.hpp"

namespace paraling {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Corr: return "corr";
    case LossKind::Mse: return "mse";
    case LossKind::CorrPlusMse: return "corr_plus_mse";
    case LossKind::CrossEntropy: return "cross_entropy";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "corr") return LossKind::Corr;
  if (s == "mse") return LossKind::Mse;
  if (s == "corr_plus_mse") return LossKind::CorrPlusMse;
  if (s == "cross_entropy") return LossKind::CrossEntropy;
  fail(ErrorCode::InvalidConfig, "unknown loss '" + s + "'");
}

namespace {

struct Moments {
  std::vector<double> dp, dt;  // centered values
  double spp = 0, stt = 0, spt = 0;
};

Moments centered(std::span<const double> pred, std::span<const double> target) {
  require(pred.size() == target.size(), ErrorCode::LengthMismatch,
          std::to_string(pred.size()) + " predictions vs " + std::to_string(target.size()) +
              " targets");
  require(pred.size() >= 2, ErrorCode::LengthMismatch, "correlation needs at least 2 values");
  const double n = static_cast<double>(pred.size());
  double mp = 0, mt = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mp += pred[i];
    mt += target[i];
  }
  mp /= n;
  mt /= n;
  Moments m;
  m.dp.resize(pred.size());
  m.dt.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    m.dp[i] = pred[i] - mp;
    m.dt[i] = target[i] - mt;
    m.spp += m.dp[i] * m.dp[i];
    m.stt += m.dt[i] * m.dt[i];
    m.spt += m.dp[i] * m.dt[i];
  }
  require(m.stt > 0.0, ErrorCode::ConstantInput, "target has zero variance");
  require(m.spp > 0.0, ErrorCode::ConstantInput, "prediction has zero variance");
  return m;
}

}  // namespace

double pearson_r(std::span<const double> pred, std::span<const double> target) {
  const auto m = centered(pred, target);
  // The 1/N factors cancel between covariance and the standard deviations.
  return std::clamp(m.spt / std::sqrt(m.spp * m.stt), -1.0, 1.0);
}

LossValue corr_loss(std::span<const double> pred, std::span<const double> target) {
  const auto m = centered(pred, target);
  const double denom = std::sqrt(m.spp * m.stt);
  const double r = m.spt / denom;
  LossValue out;
  out.loss = 1.0 - std::clamp(r, -1.0, 1.0);
  out.grad.resize(pred.size());
  // dr/dp_i = dt_i / sqrt(spp stt) - r dp_i / spp; the mean terms vanish.
  for (std::size_t i = 0; i < pred.size(); ++i) out.grad[i] = -(m.dt[i] / denom - r * m.dp[i] / m.spp);
  return out;
}

LossValue mse(std::span<const double> pred, std::span<const double> target) {
  require(pred.size() == target.size(), ErrorCode::LengthMismatch,
          std::to_string(pred.size()) + " predictions vs " + std::to_string(target.size()) +
              " targets");
  require(!pred.empty(), ErrorCode::LengthMismatch, "mse of empty sequences");
  const double n = static_cast<double>(pred.size());
  LossValue out;
  out.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.loss += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.loss /= n;
  return out;
}

LossValue corr_plus_mse(std::span<const double> pred, std::span<const double> target, double weight) {
  require(weight >= 0.0, ErrorCode::InvalidArgument, "MSE weight must be >= 0");
  auto c = corr_loss(pred, target);
  const auto e = mse(pred, target);
  c.loss += weight * e.loss;
  for (std::size_t i = 0; i < c.grad.size(); ++i) c.grad[i] += weight * e.grad[i];
  return c;
}

LossValue cross_entropy(std::span<const double> posterior, int label) {
  require(label >= 0 && static_cast<std::size_t>(label) < posterior.size(),
          ErrorCode::LabelOutOfRange,
          "label " + std::to_string(label) + " for " + std::to_string(posterior.size()) + " classes");
  LossValue out;
  out.loss = -std::log(std::max(posterior[static_cast<std::size_t>(label)], kPosteriorFloor));
  out.grad.assign(posterior.begin(), posterior.end());
  out.grad[static_cast<std::size_t>(label)] -= 1.0;
  return out;
}

LossValue regression_loss(const LossSpec& spec, std::span<const double> pred,
                          std::span<const double> target) {
  switch (spec.kind) {
    case LossKind::Corr: return corr_loss(pred, target);
    case LossKind::Mse: return mse(pred, target);
    case LossKind::CorrPlusMse: return corr_plus_mse(pred, target, spec.weight);
    case LossKind::CrossEntropy: break;
  }
  fail(ErrorCode::InvalidConfig, "cross_entropy is not a regression loss");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

Confusion confusion_matrix(std::span<const int> truth, std::span<const int> predicted, int n_classes) {
  require(truth.size() == predicted.size(), ErrorCode::LengthMismatch, "truth/prediction sizes differ");
  const auto n = static_cast<std::size_t>(n_classes);
  Confusion c(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] >= 0 && truth[i] < n_classes && predicted[i] >= 0 && predicted[i] < n_classes,
            ErrorCode::LabelOutOfRange, "class index out of range in confusion");
    ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return c;
}

double uar(const Confusion& confusion) {
  require(!confusion.empty(), ErrorCode::EmptyClassRow, "empty confusion matrix");
  double total = 0.0;
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    require(confusion[r].size() == confusion.size(), ErrorCode::ShapeMismatch,
            "confusion matrix must be square");
    std::size_t row_sum = 0;
    for (auto v : confusion[r]) row_sum += v;
    require(row_sum > 0, ErrorCode::EmptyClassRow, "class " + std::to_string(r) + " has no examples");
    total += static_cast<double>(confusion[r][r]) / static_cast<double>(row_sum);
  }
  return total / static_cast<double>(confusion.size());
}

int argmax(std::span<const double> v) {
  require(!v.empty(), ErrorCode::InvalidArgument, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

namespace {

std::vector<std::pair<std::string, std::string>> report_rows(const MetricReport& r) {
  std::vector<std::pair<std::string, std::string>> rows;
  if (r.pearson_r) rows.emplace_back("pearson_r", format_double(*r.pearson_r));
  if (r.mse) rows.emplace_back("mse", format_double(*r.mse));
  if (r.uar) rows.emplace_back("uar", format_double(*r.uar));
  if (r.confusion)
    for (std::size_t i = 0; i < r.confusion->size(); ++i)
      for (std::size_t j = 0; j < (*r.confusion)[i].size(); ++j)
        rows.emplace_back("confusion_" + std::to_string(i) + "_" + std::to_string(j),
                          std::to_string((*r.confusion)[i][j]));
  return rows;
}

}  // namespace

std::string MetricReport::to_csv() const {
  std::string out = "metric,value\n";
  for (const auto& [k, v] : report_rows(*this)) out += k + "," + v + "\n";
  return out;
}

std::string MetricReport::to_text() const {
  const auto rows = report_rows(*this);
  std::size_t width = 6;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream os;
  for (const auto& [k, v] : rows) os << std::left << std::setw(static_cast<int>(width) + 2) << k << v << "\n";
  return os.str();
}

}  // namespace paraling
