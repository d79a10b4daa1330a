#include "paraling/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "paraling/error.hpp"
#include "paraling/rng.hpp"

namespace paraling {

// ---------------------------------------------------------------------------
// Architecture and parameters

void Architecture::validate() const {
  require(input_bands >= 1 && conv_filters >= 1 && conv_kernel >= 1 && conv_stride >= 1 &&
              lstm_units >= 1 && ff_units >= 1,
          ErrorCode::InvalidConfig, "architecture sizes must be >= 1");
  require(!heads.empty(), ErrorCode::InvalidConfig, "architecture needs at least one head");
  std::set<std::string> names;
  for (const auto& h : heads) {
    require(!h.name.empty(), ErrorCode::InvalidConfig, "head name must not be empty");
    require(names.insert(h.name).second, ErrorCode::InvalidConfig, "duplicate head name " + h.name);
    require(h.ff_units >= 1, ErrorCode::InvalidConfig, "head " + h.name + ": ff_units must be >= 1");
    require(h.kind != HeadKind::Classification || h.n_classes >= 2, ErrorCode::InvalidConfig,
            "head " + h.name + ": classification needs n_classes >= 2");
  }
}

std::size_t Architecture::conv_frames(std::size_t input_frames) const {
  const auto k = static_cast<std::size_t>(conv_kernel);
  if (input_frames < k) return 0;
  return (input_frames - k) / static_cast<std::size_t>(conv_stride) + 1;
}

const HeadSpec& Architecture::head(const std::string& name) const { return heads[head_index(name)]; }

std::size_t Architecture::head_index(const std::string& name) const {
  for (std::size_t i = 0; i < heads.size(); ++i)
    if (heads[i].name == name) return i;
  fail(ErrorCode::InvalidArgument, "no head named " + name);
}

Tensor::Tensor(std::string n, std::vector<std::size_t> s) : name(std::move(n)), shape(std::move(s)) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  data.assign(count, 0.0);
}

ModelParams ModelParams::zeros(const Architecture& arch) {
  arch.validate();
  const auto F = static_cast<std::size_t>(arch.conv_filters);
  const auto K = static_cast<std::size_t>(arch.conv_kernel);
  const auto B = static_cast<std::size_t>(arch.input_bands);
  const auto H = static_cast<std::size_t>(arch.lstm_units);
  ModelParams p;
  p.arch = arch;
  p.conv_w = Tensor("conv_w", {F, K, B});
  p.conv_b = Tensor("conv_b", {F});
  p.lstm_wx = Tensor("lstm_wx", {4 * H, F});
  p.lstm_wh = Tensor("lstm_wh", {4 * H, H});
  p.lstm_b = Tensor("lstm_b", {4 * H});
  for (const auto& h : arch.heads) {
    const auto U = static_cast<std::size_t>(h.ff_units);
    const auto O = static_cast<std::size_t>(h.output_size());
    HeadParams hp;
    hp.w1 = Tensor(h.name + "/w1", {U, H});
    hp.b1 = Tensor(h.name + "/b1", {U});
    hp.w2 = Tensor(h.name + "/w2", {O, U});
    hp.b2 = Tensor(h.name + "/b2", {O});
    p.heads.push_back(std::move(hp));
  }
  return p;
}

std::vector<Tensor*> ModelParams::trunk_tensors() { return {&conv_w, &conv_b, &lstm_wx, &lstm_wh, &lstm_b}; }

std::vector<Tensor*> ModelParams::head_tensors(std::size_t i) {
  auto& h = heads.at(i);
  return {&h.w1, &h.b1, &h.w2, &h.b2};
}

std::vector<Tensor*> ModelParams::tensors() {
  auto out = trunk_tensors();
  for (std::size_t i = 0; i < heads.size(); ++i)
    for (auto* t : head_tensors(i)) out.push_back(t);
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(arch);
  p.init_seed = seed;
  Rng rng(seed, stream::kInit);
  auto fill = [&rng](Tensor& t, std::size_t fan_in, std::size_t fan_out) {
    const double bound = glorot_bound(fan_in, fan_out);
    for (double& v : t.data) v = rng.uniform(-bound, bound);
  };
  const auto F = static_cast<std::size_t>(arch.conv_filters);
  const auto H = static_cast<std::size_t>(arch.lstm_units);
  fill(p.conv_w, static_cast<std::size_t>(arch.conv_kernel * arch.input_bands), F);
  fill(p.lstm_wx, F, 4 * H);
  fill(p.lstm_wh, H, 4 * H);
  for (std::size_t j = H; j < 2 * H; ++j) p.lstm_b[j] = 1.0;
  for (std::size_t i = 0; i < arch.heads.size(); ++i) {
    const auto U = static_cast<std::size_t>(arch.heads[i].ff_units);
    const auto O = static_cast<std::size_t>(arch.heads[i].output_size());
    fill(p.heads[i].w1, H, U);
    fill(p.heads[i].w2, U, O);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y = W x + b for W [rows x cols] row-major.
void affine(const double* w, const double* b, const double* x, std::size_t rows, std::size_t cols,
            double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    double acc = b ? b[r] : 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

// W += d x^T ; dx += W^T d (dx may be null).
void affine_backward(const double* w, const double* d, const double* x, std::size_t rows,
                     std::size_t cols, double* dw, double* db, double* dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double dr = d[r];
    if (db) db[r] += dr;
    if (dr == 0.0) continue;
    double* dwr = dw + r * cols;
    const double* wr = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dwr[c] += dr * x[c];
    if (dx)
      for (std::size_t c = 0; c < cols; ++c) dx[c] += wr[c] * dr;
  }
}

}  // namespace

ForwardResult forward(const ModelParams& params, const Matrix& input, Mode mode) {
  const Architecture& arch = params.arch;
  const auto B = static_cast<std::size_t>(arch.input_bands);
  const auto F = static_cast<std::size_t>(arch.conv_filters);
  const auto K = static_cast<std::size_t>(arch.conv_kernel);
  const auto S = static_cast<std::size_t>(arch.conv_stride);
  const auto H = static_cast<std::size_t>(arch.lstm_units);
  require(input.cols() == B, ErrorCode::ShapeMismatch,
          "input has " + std::to_string(input.cols()) + " bands, model expects " + std::to_string(B));
  const std::size_t T = arch.conv_frames(input.rows());
  require(T > 0, ErrorCode::ShapeMismatch,
          "input has " + std::to_string(input.rows()) + " frames, kernel needs " + std::to_string(K));

  ForwardCache c;
  c.conv_pre = Matrix(T, F);
  c.conv_out = Matrix(T, F);
  const double* x = input.data().data();
  const double* cw = params.conv_w.data.data();
  for (std::size_t t = 0; t < T; ++t) {
    // The receptive field of output t is contiguous: K*B values starting at row t*S.
    const double* window = x + t * S * B;
    for (std::size_t f = 0; f < F; ++f) {
      const double* wf = cw + f * K * B;
      double acc = params.conv_b[f];
      for (std::size_t i = 0; i < K * B; ++i) acc += wf[i] * window[i];
      c.conv_pre(t, f) = acc;
      c.conv_out(t, f) = acc > 0.0 ? acc : 0.0;
    }
  }

  c.gates = Matrix(T, 4 * H);
  c.cell = Matrix(T, H);
  c.cell_tanh = Matrix(T, H);
  c.hidden = Matrix(T, H);
  std::vector<double> z(4 * H), hz(4 * H);
  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    affine(params.lstm_wx.data.data(), params.lstm_b.data.data(), &c.conv_out(t, 0), 4 * H, F, z.data());
    affine(params.lstm_wh.data.data(), nullptr, h_prev.data(), 4 * H, H, hz.data());
    auto g = c.gates.row(t);
    for (std::size_t j = 0; j < H; ++j) {
      const double ig = sigmoid(z[j] + hz[j]);
      const double fg = sigmoid(z[H + j] + hz[H + j]);
      const double cg = std::tanh(z[2 * H + j] + hz[2 * H + j]);
      const double og = sigmoid(z[3 * H + j] + hz[3 * H + j]);
      g[j] = ig;
      g[H + j] = fg;
      g[2 * H + j] = cg;
      g[3 * H + j] = og;
      const double cell = fg * c_prev[j] + ig * cg;
      const double ct = std::tanh(cell);
      c.cell(t, j) = cell;
      c.cell_tanh(t, j) = ct;
      c.hidden(t, j) = og * ct;
    }
    std::copy(c.hidden.row(t).begin(), c.hidden.row(t).end(), h_prev.begin());
    std::copy(c.cell.row(t).begin(), c.cell.row(t).end(), c_prev.begin());
  }

  Matrix summary(1, H);
  if (arch.readout == Readout::Final) {
    std::copy(c.hidden.row(T - 1).begin(), c.hidden.row(T - 1).end(), summary.row(0).begin());
  } else {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < H; ++j) summary(0, j) += c.hidden(t, j) / static_cast<double>(T);
  }

  ForwardResult res;
  for (std::size_t hi = 0; hi < arch.heads.size(); ++hi) {
    const HeadSpec& spec = arch.heads[hi];
    const HeadParams& hp = params.heads[hi];
    const auto U = static_cast<std::size_t>(spec.ff_units);
    const auto O = static_cast<std::size_t>(spec.output_size());
    HeadCache hc;
    hc.input = spec.kind == HeadKind::RegressionSequence ? c.hidden : summary;
    const std::size_t rows = hc.input.rows();
    hc.hidden_pre = Matrix(rows, U);
    hc.hidden = Matrix(rows, U);
    HeadOutput out;
    out.raw.resize(rows * O);
    for (std::size_t r = 0; r < rows; ++r) {
      affine(hp.w1.data.data(), hp.b1.data.data(), &hc.input(r, 0), U, H, &hc.hidden_pre(r, 0));
      for (std::size_t u = 0; u < U; ++u) hc.hidden(r, u) = std::max(0.0, hc.hidden_pre(r, u));
      affine(hp.w2.data.data(), hp.b2.data.data(), &hc.hidden(r, 0), O, U, out.raw.data() + r * O);
    }
    if (spec.kind == HeadKind::Classification) out.posterior = softmax(out.raw);
    res.outputs.push_back(std::move(out));
    c.heads.push_back(std::move(hc));
  }
  if (mode == Mode::Train) {
    c.input = input;
    res.cache = std::move(c);
  }
  return res;
}

std::vector<HeadOutput> predict(const ModelParams& params, const Matrix& input) {
  return forward(params, input, Mode::Infer).outputs;
}

// ---------------------------------------------------------------------------
// Backward

Gradients backward(const ForwardResult& fwd, const ModelParams& params,
                   const std::vector<std::vector<double>>& head_grads) {
  require(fwd.cache.has_value(), ErrorCode::MissingCache, "backward needs forward(Mode::Train)");
  const ForwardCache& c = *fwd.cache;
  const Architecture& arch = params.arch;
  require(head_grads.size() == arch.heads.size(), ErrorCode::ShapeMismatch,
          "need one gradient vector per head");
  const auto B = static_cast<std::size_t>(arch.input_bands);
  const auto F = static_cast<std::size_t>(arch.conv_filters);
  const auto K = static_cast<std::size_t>(arch.conv_kernel);
  const auto S = static_cast<std::size_t>(arch.conv_stride);
  const auto H = static_cast<std::size_t>(arch.lstm_units);
  const std::size_t T = c.hidden.rows();

  Gradients g{ModelParams::zeros(arch), Matrix(c.input.rows(), c.input.cols())};
  g.params.init_seed = params.init_seed;
  Matrix d_hidden(T, H);

  for (std::size_t hi = 0; hi < arch.heads.size(); ++hi) {
    const auto& dy = head_grads[hi];
    if (dy.empty()) continue;
    const HeadSpec& spec = arch.heads[hi];
    const HeadParams& hp = params.heads[hi];
    HeadParams& gp = g.params.heads[hi];
    const HeadCache& hc = c.heads[hi];
    const auto U = static_cast<std::size_t>(spec.ff_units);
    const auto O = static_cast<std::size_t>(spec.output_size());
    const std::size_t rows = hc.input.rows();
    require(dy.size() == rows * O, ErrorCode::ShapeMismatch,
            "head " + spec.name + ": gradient size " + std::to_string(dy.size()) + ", expected " +
                std::to_string(rows * O));
    std::vector<double> d_h(U), d_in(H);
    for (std::size_t r = 0; r < rows; ++r) {
      std::fill(d_h.begin(), d_h.end(), 0.0);
      affine_backward(hp.w2.data.data(), dy.data() + r * O, &hc.hidden(r, 0), O, U, gp.w2.data.data(),
                      gp.b2.data.data(), d_h.data());
      for (std::size_t u = 0; u < U; ++u)
        if (hc.hidden_pre(r, u) <= 0.0) d_h[u] = 0.0;
      std::fill(d_in.begin(), d_in.end(), 0.0);
      affine_backward(hp.w1.data.data(), d_h.data(), &hc.input(r, 0), U, H, gp.w1.data.data(),
                      gp.b1.data.data(), d_in.data());
      if (spec.kind == HeadKind::RegressionSequence) {
        for (std::size_t j = 0; j < H; ++j) d_hidden(r, j) += d_in[j];
      } else if (arch.readout == Readout::Final) {
        for (std::size_t j = 0; j < H; ++j) d_hidden(T - 1, j) += d_in[j];
      } else {
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t j = 0; j < H; ++j) d_hidden(t, j) += d_in[j] / static_cast<double>(T);
      }
    }
  }

  // Backpropagation through time.
  Matrix d_conv_out(T, F);
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dz(4 * H);
  const std::vector<double> zeros(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    const auto gt = c.gates.row(t);
    for (std::size_t j = 0; j < H; ++j) {
      const double ig = gt[j], fg = gt[H + j], cg = gt[2 * H + j], og = gt[3 * H + j];
      const double ct = c.cell_tanh(t, j);
      const double c_prev = t > 0 ? c.cell(t - 1, j) : 0.0;
      const double dh = d_hidden(t, j) + dh_next[j];
      const double dc = dh * og * (1.0 - ct * ct) + dc_next[j];
      dz[j] = dc * cg * ig * (1.0 - ig);
      dz[H + j] = dc * c_prev * fg * (1.0 - fg);
      dz[2 * H + j] = dc * ig * (1.0 - cg * cg);
      dz[3 * H + j] = dh * ct * og * (1.0 - og);
      dc_next[j] = dc * fg;
    }
    affine_backward(params.lstm_wx.data.data(), dz.data(), &c.conv_out(t, 0), 4 * H, F,
                    g.params.lstm_wx.data.data(), g.params.lstm_b.data.data(), &d_conv_out(t, 0));
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    const double* h_prev = t > 0 ? &c.hidden(t - 1, 0) : zeros.data();
    affine_backward(params.lstm_wh.data.data(), dz.data(), h_prev, 4 * H, H,
                    g.params.lstm_wh.data.data(), nullptr, dh_next.data());
  }

  // Convolution.
  const double* x = c.input.data().data();
  double* dx = g.input.data().data();
  const double* cw = params.conv_w.data.data();
  double* gw = g.params.conv_w.data.data();
  for (std::size_t t = 0; t < T; ++t) {
    const double* window = x + t * S * B;
    double* dwindow = dx + t * S * B;
    for (std::size_t f = 0; f < F; ++f) {
      if (c.conv_pre(t, f) <= 0.0) continue;
      const double d = d_conv_out(t, f);
      if (d == 0.0) continue;
      g.params.conv_b[f] += d;
      const double* wf = cw + f * K * B;
      double* gwf = gw + f * K * B;
      for (std::size_t i = 0; i < K * B; ++i) {
        gwf[i] += d * window[i];
        dwindow[i] += d * wf[i];
      }
    }
  }
  return g;
}

std::vector<double> merge_segment_predictions(const std::vector<std::vector<double>>& posteriors) {
  require(!posteriors.empty(), ErrorCode::InvalidArgument, "no segment posteriors to merge");
  std::vector<double> out(posteriors.front().size(), 0.0);
  for (const auto& p : posteriors) {
    require(p.size() == out.size(), ErrorCode::ShapeMismatch, "segment posteriors differ in size");
    for (std::size_t i = 0; i < p.size(); ++i) out[i] += p[i];
  }
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= sum;
  return out;
}

// ---------------------------------------------------------------------------
// Training

LossSpec TrainConfig::loss_for(const HeadSpec& head) const {
  if (const auto it = losses.find(head.name); it != losses.end()) return it->second;
  switch (head.kind) {
    case HeadKind::Classification: return {LossKind::CrossEntropy, 0.0};
    case HeadKind::RegressionSequence: return {LossKind::Corr, 0.0};
    case HeadKind::RegressionScalar: return {LossKind::Mse, 0.0};
  }
  return {};
}

std::vector<TaskSpec> classification_tasks(const Architecture& arch) {
  std::vector<TaskSpec> tasks;
  for (const auto& h : arch.heads)
    if (h.kind == HeadKind::Classification) tasks.push_back({h.name, h.n_classes});
  return tasks;
}

double example_loss(const Architecture& arch, const TrainConfig& tcfg, const LabeledExample& ex,
                    const std::vector<HeadOutput>& outputs,
                    std::vector<std::vector<double>>* head_grads) {
  double total = 0.0;
  if (head_grads) head_grads->assign(arch.heads.size(), {});
  for (std::size_t hi = 0; hi < arch.heads.size(); ++hi) {
    const HeadSpec& spec = arch.heads[hi];
    const LossSpec loss = tcfg.loss_for(spec);
    LossValue lv;
    if (spec.kind == HeadKind::Classification) {
      require(loss.kind == LossKind::CrossEntropy, ErrorCode::InvalidConfig,
              "head " + spec.name + ": classification heads use cross_entropy");
      const auto it = ex.labels.find(spec.name);
      require(it != ex.labels.end(), ErrorCode::LabelOutOfRange, ex.id + ": no label for " + spec.name);
      lv = cross_entropy(outputs[hi].posterior, it->second);
    } else if (spec.kind == HeadKind::RegressionSequence) {
      require(ex.target.size() == outputs[hi].raw.size(), ErrorCode::ShapeMismatch,
              ex.id + ": target has " + std::to_string(ex.target.size()) + " frames, model emits " +
                  std::to_string(outputs[hi].raw.size()));
      lv = regression_loss(loss, outputs[hi].raw, ex.target);
    } else {
      require(loss.kind == LossKind::Mse, ErrorCode::InvalidConfig,
              "head " + spec.name + ": scalar regression heads use mse");
      require(ex.target.size() == 1, ErrorCode::ShapeMismatch, ex.id + ": scalar head needs one target");
      lv = mse(outputs[hi].raw, ex.target);
    }
    total += lv.loss;
    if (head_grads) (*head_grads)[hi] = std::move(lv.grad);
  }
  return total;
}

double global_norm(const ModelParams& grads) {
  double s = 0.0;
  for (const auto* t : grads.tensors())
    for (double v : t->data) s += v * v;
  return std::sqrt(s);
}

namespace {

// Adds src into dst tensor by tensor.
void accumulate(ModelParams& dst, const ModelParams& src) {
  auto d = dst.tensors();
  const auto s = src.tensors();
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d[i]->size(); ++j) d[i]->data[j] += s[i]->data[j];
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const ModelParams& shape)
      : cfg_(cfg), m_(ModelParams::zeros(shape.arch)), v_(ModelParams::zeros(shape.arch)) {}

  void step(ModelParams& params, const ModelParams& grads) {
    ++t_;
    auto p = params.tensors();
    const auto g = grads.tensors();
    auto m = m_.tensors();
    auto v = v_.tensors();
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p[i]->size(); ++j) p[i]->data[j] -= lr * g[i]->data[j];
      return;
    }
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p[i]->size(); ++j) {
        const double gj = g[i]->data[j];
        double& mj = m[i]->data[j];
        double& vj = v[i]->data[j];
        mj = b1 * mj + (1.0 - b1) * gj;
        vj = b2 * vj + (1.0 - b2) * gj * gj;
        p[i]->data[j] -= lr * (mj / c1) / (std::sqrt(vj / c2) + cfg_.adam_eps);
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  ModelParams m_, v_;
  long long t_ = 0;
};

// Produces the example order for each epoch.
class EpochPlan {
 public:
  EpochPlan(const Architecture& arch, std::span<const LabeledExample> data, const SamplerConfig& sc,
            std::uint64_t shuffle_seed)
      : mode_(sc.mode), n_(data.size()), shuffle_(shuffle_seed, stream::kShuffle) {
    const auto tasks = classification_tasks(arch);
    if (mode_ != SamplerMode::None)
      require(!tasks.empty(), ErrorCode::InvalidConfig,
              "resampling needs at least one classification head");
    if (mode_ == SamplerMode::Upsample) {
      base_ = tasks.size() == 1 ? upsample(data, tasks[0]) : upsample_multitask(data, tasks);
    } else if (mode_ == SamplerMode::Probabilistic) {
      sampler_.emplace(data, tasks, sc.lambda, sc.seed, sc.max_rejects);
    } else {
      base_.resize(n_);
      std::iota(base_.begin(), base_.end(), std::size_t{0});
    }
  }

  std::vector<std::size_t> next_epoch() {
    if (mode_ == SamplerMode::Probabilistic) return sampler_->draw(n_);
    auto order = base_;
    shuffle_.shuffle(order);
    return order;
  }

 private:
  SamplerMode mode_;
  std::size_t n_;
  Rng shuffle_;
  std::vector<std::size_t> base_;
  std::optional<MultitaskProbabilisticSampler> sampler_;
};

std::map<std::string, double> training_metrics(const ModelParams& params,
                                               std::span<const LabeledExample> data) {
  const Architecture& arch = params.arch;
  std::vector<std::vector<HeadOutput>> outs;
  outs.reserve(data.size());
  for (const auto& ex : data) outs.push_back(predict(params, ex.features.values));

  std::map<std::string, double> metric;
  for (std::size_t hi = 0; hi < arch.heads.size(); ++hi) {
    const HeadSpec& spec = arch.heads[hi];
    if (spec.kind == HeadKind::Classification) {
      std::vector<int> truth, pred;
      for (std::size_t i = 0; i < data.size(); ++i) {
        truth.push_back(data[i].labels.at(spec.name));
        pred.push_back(argmax(outs[i][hi].posterior));
      }
      const auto conf = confusion_matrix(truth, pred, spec.n_classes);
      // Recall over the classes that occur in the training data.
      double total = 0.0;
      int present = 0;
      for (std::size_t r = 0; r < conf.size(); ++r) {
        const auto row_sum = std::accumulate(conf[r].begin(), conf[r].end(), std::size_t{0});
        if (row_sum == 0) continue;
        total += static_cast<double>(conf[r][r]) / static_cast<double>(row_sum);
        ++present;
      }
      metric[spec.name] = present ? total / present : 0.0;
    } else if (spec.kind == HeadKind::RegressionSequence) {
      double total = 0.0;
      int counted = 0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        try {
          total += pearson_r(outs[i][hi].raw, data[i].target);
          ++counted;
        } catch (const Error&) {
          // constant sequences carry no correlation
        }
      }
      metric[spec.name] = counted ? total / counted : 0.0;
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) total += mse(outs[i][hi].raw, data[i].target).loss;
      metric[spec.name] = total / static_cast<double>(data.size());
    }
  }
  return metric;
}

}  // namespace

TrainResult train(const Architecture& arch, std::span<const LabeledExample> data,
                  const SamplerConfig& sampler, const TrainConfig& tcfg) {
  arch.validate();
  require(!data.empty(), ErrorCode::NoExamples, "training data is empty");
  require(tcfg.epochs >= 1, ErrorCode::InvalidConfig, "epochs must be >= 1");
  require(tcfg.batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be >= 1");
  require(tcfg.learning_rate > 0.0, ErrorCode::InvalidConfig, "learning_rate must be > 0");
  require(sampler.lambda >= 0.0 && sampler.lambda <= 1.0, ErrorCode::InvalidConfig,
          "sampler lambda must lie in [0, 1]");

  TrainResult result{init_params(arch, tcfg.init_seed), {}};
  ModelParams& params = result.params;
  Optimizer opt(tcfg, params);
  EpochPlan plan(arch, data, sampler, tcfg.shuffle_seed);
  const auto batch = static_cast<std::size_t>(tcfg.batch_size);

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    const auto order = plan.next_epoch();
    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t end = std::min(order.size(), start + batch);
      ModelParams grads = ModelParams::zeros(arch);
      std::vector<std::vector<double>> head_grads;
      for (std::size_t k = start; k < end; ++k) {
        const LabeledExample& ex = data[order[k]];
        const auto fwd = forward(params, ex.features.values, Mode::Train);
        const double loss = example_loss(arch, tcfg, ex, fwd.outputs, &head_grads);
        require(std::isfinite(loss), ErrorCode::NonFiniteLoss,
                "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + ", example " +
                    ex.id);
        loss_sum += loss;
        accumulate(grads, backward(fwd, params, head_grads).params);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto* t : grads.tensors())
        for (double& v : t->data) v *= scale;
      const double norm = global_norm(grads);
      require(std::isfinite(norm), ErrorCode::NonFiniteLoss,
              "non-finite gradient at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      if (tcfg.grad_clip && norm > *tcfg.grad_clip) {
        const double c = *tcfg.grad_clip / norm;
        for (auto* t : grads.tensors())
          for (double& v : t->data) v *= c;
      }
      opt.step(params, grads);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    if (tcfg.log_metrics) entry.metric = training_metrics(params, data);
    result.log.push_back(std::move(entry));
  }
  return result;
}

}  // namespace paraling
