#include "sparsekern/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "impulse.hpp"
#include "sparsekern/init.hpp"

namespace sparsekern {

void TrainConfig::validate() const {
  if (steps < 1) throw Error(Errc::parameter, "steps must be >= 1");
  if (!(lr_end > 0.0) || !(lr_start >= lr_end)) throw Error(Errc::parameter, "learning rates must satisfy lr_start >= lr_end > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw Error(Errc::parameter, "Adam betas must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw Error(Errc::parameter, "Adam epsilon must be positive");
  if (offset_scale < 0.0) throw Error(Errc::parameter, "offset scale must be >= 0");
  if (loss.type == LossType::charbonnier && !(loss.epsilon > 0.0))
    throw Error(Errc::parameter, "charbonnier epsilon must be positive");
}

double learning_rate(const TrainConfig& cfg, int step) {
  if (cfg.steps <= 1) return cfg.lr_start;
  return cfg.lr_start + (cfg.lr_end - cfg.lr_start) * static_cast<double>(step) / (cfg.steps - 1);
}

namespace {

double pixel_loss(double d, const LossKind& kind) {
  switch (kind.type) {
    case LossType::charbonnier: return std::sqrt(d * d + kind.epsilon * kind.epsilon);
    case LossType::l1: return std::abs(d);
    case LossType::l2: return d * d;
  }
  return 0.0;
}

double pixel_grad(double d, const LossKind& kind) {
  switch (kind.type) {
    case LossType::charbonnier: return d / std::sqrt(d * d + kind.epsilon * kind.epsilon);
    case LossType::l1: return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    case LossType::l2: return 2.0 * d;
  }
  return 0.0;
}

double loss_same_canvas(const std::vector<double>& syn, const std::vector<double>& tgt, const LossKind& kind) {
  double acc = 0.0;
  for (std::size_t n = 0; n < syn.size(); ++n) acc += pixel_loss(syn[n] - tgt[n], kind);
  return acc;
}

}  // namespace

double loss(const DenseKernel& syn, const DenseKernel& tgt, const LossKind& kind) {
  const int m = std::max(syn.size(), tgt.size());
  return loss_same_canvas(syn.embedded(m).weights(), tgt.embedded(m).weights(), kind);
}

std::vector<double> loss_gradient(const DenseKernel& syn, const DenseKernel& tgt, const LossKind& kind) {
  if (syn.size() != tgt.size()) throw Error(Errc::dimension, "loss gradient needs kernels on one canvas");
  std::vector<double> g(syn.weights().size());
  for (std::size_t n = 0; n < g.size(); ++n) g[n] = pixel_grad(syn.weights()[n] - tgt.weights()[n], kind);
  return g;
}

int fit_canvas(const KernelComplex& c, const DenseKernel& tgt) { return std::max(ir_canvas_size(c), tgt.size()); }

Gradients backward(const KernelComplex& c, const DenseKernel& tgt, const LossKind& kind, int canvas) {
  if (canvas == 0) canvas = fit_canvas(c, tgt);
  if (canvas < tgt.size()) throw Error(Errc::dimension, "gradient canvas is smaller than the target kernel");
  detail::ImpulseEngine engine;
  engine.forward(c, canvas);
  const DenseKernel target = tgt.embedded(canvas);
  const auto& syn = engine.response();

  std::vector<double> d_syn(syn.size());
  for (std::size_t n = 0; n < syn.size(); ++n) d_syn[n] = pixel_grad(syn[n] - target.weights()[n], kind);

  Gradients g;
  g.canvas = canvas;
  g.loss = loss_same_canvas(syn, target.weights(), kind);
  const auto per_sample = engine.backward(c, d_syn);
  g.offset.resize(per_sample.size());
  g.weight.resize(per_sample.size());
  for (std::size_t l = 0; l < per_sample.size(); ++l) {
    for (const auto& s : per_sample[l]) {
      g.offset[l].push_back(s.offset);
      g.weight[l].push_back(s.weight);
    }
  }
  return g;
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, int step,
                 const TrainConfig& cfg) {
  if (params.size() != grads.size()) throw Error(Errc::dimension, "parameter and gradient sizes differ");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  const double lr = learning_rate(cfg, step);
  const double t = static_cast<double>(state.steps_taken + 1);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[k] / bc1;
    const double v_hat = state.v[k] / bc2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
  }
  ++state.steps_taken;
}

void project_sum(SparseLayer& layer) {
  const double s = layer.weight_sum();
  if (!(std::abs(s) >= 1e-8)) throw Error(Errc::degenerate, "SUM normalization failed: layer weight sum is ~0");
  for (auto& smp : layer.samples) smp.weight /= s;
}

namespace {

constexpr int kKwsSign[4][2] = {{+1, +1}, {-1, +1}, {-1, -1}, {+1, -1}};

void require_kws_layout(std::size_t n) {
  if (n % 4 != 0) throw Error(Errc::parameter, "KWS symmetry needs a multiple of 4 samples per layer");
}

}  // namespace

void project_kws(SparseLayer& layer) {
  require_kws_layout(layer.samples.size());
  for (std::size_t g = 0; g < layer.samples.size(); g += 4) {
    double dx = 0.0, dy = 0.0, w = 0.0;
    for (int k = 0; k < 4; ++k) {
      const auto& s = layer.samples[g + k];
      dx += kKwsSign[k][0] * s.offset.x;
      dy += kKwsSign[k][1] * s.offset.y;
      w += s.weight;
    }
    dx /= 4.0;
    dy /= 4.0;
    w /= 4.0;
    for (int k = 0; k < 4; ++k) {
      auto& s = layer.samples[g + k];
      s.offset = {kKwsSign[k][0] * dx, kKwsSign[k][1] * dy};
      s.weight = w;
    }
  }
}

void tie_kws(std::span<double> values) {
  require_kws_layout(values.size());
  for (std::size_t g = 0; g < values.size(); g += 4) {
    const double mean = (values[g] + values[g + 1] + values[g + 2] + values[g + 3]) / 4.0;
    for (int k = 0; k < 4; ++k) values[g + k] = mean;
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double hi = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) z += (out[k] = std::exp(logits[k] - hi));
  for (double& v : out) v /= z;
  return out;
}

FitState::FitState(KernelComplex start, const TrainConfig& cfg, double offset_scale)
    : theta_(std::move(start)), offset_scale_(offset_scale) {
  theta_.validate();
  if (!(offset_scale_ > 0.0)) throw Error(Errc::parameter, "offset scale must be positive");
  if (cfg.constraints.weight_norm == WeightNorm::softmax) {
    logits_.resize(theta_.layers.size());
    for (std::size_t l = 0; l < theta_.layers.size(); ++l) {
      for (const auto& s : theta_.layers[l].samples) {
        if (!(s.weight > 0.0)) throw Error(Errc::parameter, "softmax normalization needs positive initial weights");
        logits_[l].push_back(std::log(s.weight));
      }
    }
  }
  apply_constraints(cfg);
}

void FitState::apply_constraints(const TrainConfig& cfg) {
  const auto& cc = cfg.constraints;
  for (std::size_t l = 0; l < theta_.layers.size(); ++l) {
    auto& layer = theta_.layers[l];
    if (cc.symmetry == Symmetry::kws) {
      project_kws(layer);
      if (cc.weight_norm == WeightNorm::softmax) tie_kws(logits_[l]);
    }
    if (cc.weight_norm == WeightNorm::softmax) {
      const auto w = softmax(logits_[l]);
      for (std::size_t i = 0; i < w.size(); ++i) layer.samples[i].weight = w[i];
    } else if (cc.weight_norm == WeightNorm::sum) {
      project_sum(layer);
    }
  }
}

std::vector<double> FitState::flatten() const {
  std::vector<double> p;
  p.reserve(theta_.total_samples() * 3);
  for (std::size_t l = 0; l < theta_.layers.size(); ++l) {
    const auto& samples = theta_.layers[l].samples;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      p.push_back(samples[i].offset.x / offset_scale_);
      p.push_back(samples[i].offset.y / offset_scale_);
      p.push_back(logits_.empty() ? samples[i].weight : logits_[l][i]);
    }
  }
  return p;
}

void FitState::step(const Gradients& g, int step_index, const TrainConfig& cfg) {
  if (g.offset.size() != theta_.layers.size()) throw Error(Errc::dimension, "gradient layout does not match parameters");
  auto params = flatten();
  std::vector<double> grads;
  grads.reserve(params.size());
  for (std::size_t l = 0; l < theta_.layers.size(); ++l) {
    const auto& samples = theta_.layers[l].samples;
    if (g.offset[l].size() != samples.size()) throw Error(Errc::dimension, "gradient layout does not match parameters");
    // Softmax Jacobian: dL/dz_i = w_i (dL/dw_i - sum_j w_j dL/dw_j).
    double mean_gw = 0.0;
    if (!logits_.empty())
      for (std::size_t i = 0; i < samples.size(); ++i) mean_gw += samples[i].weight * g.weight[l][i];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      grads.push_back(g.offset[l][i].x * offset_scale_);
      grads.push_back(g.offset[l][i].y * offset_scale_);
      grads.push_back(logits_.empty() ? g.weight[l][i] : samples[i].weight * (g.weight[l][i] - mean_gw));
    }
  }

  adam_update(params, grads, adam_, step_index, cfg);

  std::size_t k = 0;
  for (std::size_t l = 0; l < theta_.layers.size(); ++l) {
    auto& samples = theta_.layers[l].samples;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i].offset = {params[k] * offset_scale_, params[k + 1] * offset_scale_};
      if (logits_.empty())
        samples[i].weight = params[k + 2];
      else
        logits_[l][i] = params[k + 2];
      k += 3;
    }
  }
  apply_constraints(cfg);
}

FitResult fit_from(const DenseKernel& tgt, KernelComplex start, const TrainConfig& cfg) {
  cfg.validate();
  start.validate();
  if (cfg.constraints.symmetry == Symmetry::kws)
    for (const auto& layer : start.layers) require_kws_layout(layer.samples.size());

  FitResult result;
  const int canvas0 = fit_canvas(start, tgt);
  const double scale = cfg.offset_scale > 0.0 ? cfg.offset_scale : std::max(1.0, (canvas0 - 1) / 2.0);
  FitState state(std::move(start), cfg, scale);

  result.best_loss = std::numeric_limits<double>::infinity();
  result.trace.reserve(static_cast<std::size_t>(cfg.steps));
  for (int t = 0; t < cfg.steps; ++t) {
    const Gradients g = backward(state.theta(), tgt, cfg.loss);
    result.trace.push_back({t, g.loss, learning_rate(cfg, t)});
    if (g.loss < result.best_loss) {
      result.best_loss = g.loss;
      result.best_step = t;
      result.theta = state.theta();
      result.canvas = g.canvas;
    }
    state.step(g, t, cfg);
  }
  const int canvas = fit_canvas(state.theta(), tgt);
  const double last = loss(synthesize_ir(state.theta(), canvas), tgt, cfg.loss);
  if (last < result.best_loss) {
    result.best_loss = last;
    result.best_step = cfg.steps;
    result.theta = state.theta();
    result.canvas = canvas;
  }
  return result;
}

FitResult fit(const DenseKernel& tgt, const Layout& layout, const InitStrategy& init, const TrainConfig& cfg) {
  return fit_from(tgt, initialize(tgt, layout, init), cfg);
}

}  // namespace sparsekern
