#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparsekern/engine.hpp"
#include "sparsekern/image.hpp"

namespace sparsekern {

struct InitStrategy;

enum class LossType { charbonnier, l1, l2 };

struct LossKind {
  LossType type = LossType::charbonnier;
  double epsilon = 1e-6;  // charbonnier only
};

enum class WeightNorm { none, sum, softmax };
enum class Symmetry { none, kws };

struct ConstraintConfig {
  WeightNorm weight_norm = WeightNorm::sum;
  Symmetry symmetry = Symmetry::none;
};

struct TrainConfig {
  int steps = 1000;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  /// Offsets are optimized in units of this many pixels (the canvas
  /// half-width, as in normalized sampling grids). 0 picks it from the
  /// starting canvas.
  double offset_scale = 0.0;
  LossKind loss;
  ConstraintConfig constraints;

  void validate() const;
};

/// Learning rate at step t of `steps`: linear from lr_start to lr_end.
double learning_rate(const TrainConfig& cfg, int step);

/// Sum over the common canvas (the smaller kernel is zero-embedded).
double loss(const DenseKernel& syn, const DenseKernel& tgt, const LossKind& kind);

/// Per-pixel dL/dK_syn on syn's canvas; `tgt` must already share that canvas.
std::vector<double> loss_gradient(const DenseKernel& syn, const DenseKernel& tgt, const LossKind& kind);

/// Canvas used when fitting `c` to `tgt`: large enough for both.
int fit_canvas(const KernelComplex& c, const DenseKernel& tgt);

struct Gradients {
  std::vector<std::vector<Vec2>> offset;    // [layer][sample], dL/do in pixels
  std::vector<std::vector<double>> weight;  // [layer][sample], dL/dw
  double loss = 0.0;
  int canvas = 0;
};

/// Reverse-mode gradient of loss(synthesize_ir(c), tgt) with respect to
/// every offset and weight. canvas == 0 uses fit_canvas(c, tgt).
Gradients backward(const KernelComplex& c, const DenseKernel& tgt, const LossKind& kind, int canvas = 0);

/// Adam moments over a flat parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long steps_taken = 0;
};

/// Plain Adam with bias correction at step index `step` (0-based) using
/// learning_rate(cfg, step). Moments are lazily sized to params.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, int step,
                 const TrainConfig& cfg);

/// Rescales weights to sum to one; throws Errc::degenerate when
/// |sum| < 1e-8.
void project_sum(SparseLayer& layer);

/// Ties each consecutive 4-group of samples to the pattern
/// (+dx,+dy), (-dx,+dy), (-dx,-dy), (+dx,-dy) with one shared weight,
/// averaging the current values. Layer sizes must be multiples of 4.
void project_kws(SparseLayer& layer);
/// Same averaging applied to a parallel array of per-sample scalars.
void tie_kws(std::span<double> values);

std::vector<double> softmax(std::span<const double> logits);

/// Optimizer state for one complex: the complex itself plus the raw
/// parameters Adam acts on (softmax logits when weight_norm is softmax).
class FitState {
 public:
  FitState(KernelComplex start, const TrainConfig& cfg, double offset_scale);

  const KernelComplex& theta() const noexcept { return theta_; }
  const AdamState& adam() const noexcept { return adam_; }
  double offset_scale() const noexcept { return offset_scale_; }

  /// One Adam step on all parameters followed by the configured projections.
  void step(const Gradients& g, int step_index, const TrainConfig& cfg);

 private:
  void apply_constraints(const TrainConfig& cfg);
  std::vector<double> flatten() const;

  KernelComplex theta_;
  std::vector<std::vector<double>> logits_;
  AdamState adam_;
  double offset_scale_;
};

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct FitResult {
  KernelComplex theta;  // best-loss parameters seen
  double best_loss = 0.0;
  int best_step = 0;
  std::vector<TraceRow> trace;
  int canvas = 0;
};

/// Fits a complex to `tgt` from the given starting parameters. The trace
/// holds the loss before each update; the best-loss parameters (including
/// those after the last update) are returned.
FitResult fit_from(const DenseKernel& tgt, KernelComplex start, const TrainConfig& cfg);

/// fit_from on initialize(tgt, layout, init).
FitResult fit(const DenseKernel& tgt, const Layout& layout, const InitStrategy& init, const TrainConfig& cfg);

}  // namespace sparsekern
