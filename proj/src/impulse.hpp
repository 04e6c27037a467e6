// Impulse-response forward pass and its reverse-mode adjoint. Internal to the
// library: synthesize_ir, the gradient fitter and the tempering baseline all
// run on this.
#pragma once

#include <vector>

#include "sparsekern/engine.hpp"

namespace sparsekern::detail {

/// Inclusive pixel box on the canvas; empty when x0 > x1.
struct Box {
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
  bool empty() const noexcept { return x0 > x1 || y0 > y1; }
};

/// Bilinear footprint of one offset: integer cell origin plus the four
/// corner coefficients (w not folded in). The cell is [floor(o), floor(o)+1),
/// so at integer offsets the derivative is the right-sided one.
struct Footprint {
  int ix = 0, iy = 0;
  double fx = 0.0, fy = 0.0;
  double c00 = 1.0, c10 = 0.0, c01 = 0.0, c11 = 0.0;

  explicit Footprint(Vec2 o);
};

/// Half-extent (in pixels from the center) actually touched by the composed
/// support of a delta pushed through `c`.
int support_half_extent(const KernelComplex& c);

class ImpulseEngine {
 public:
  /// Runs delta -> layer 1 -> ... -> layer L by bilinear splatting on a
  /// canvas x canvas grid. Throws Errc::truncation if the support does not
  /// fit and Errc::numeric (naming layer and sample) on non-finite values.
  /// With clear_outside == false only the support box of the response is
  /// valid; callers must then restrict reads to final_box().
  void forward(const KernelComplex& c, int canvas, bool clear_outside = true);

  int canvas() const noexcept { return canvas_; }
  /// Final impulse response, row-major canvas x canvas.
  const std::vector<double>& response() const noexcept { return stages_.back(); }
  const Box& final_box() const noexcept { return boxes_.back(); }

  struct SampleGrad {
    Vec2 offset;
    double weight = 0.0;
  };

  /// Given dL/dK on the canvas, returns dL/d(offset, weight) per layer and
  /// sample. Must follow forward() on the same complex.
  std::vector<std::vector<SampleGrad>> backward(const KernelComplex& c, const std::vector<double>& d_response);

 private:
  int canvas_ = 0;
  std::vector<std::vector<double>> stages_;  // X_0 .. X_L
  std::vector<Box> boxes_;
  std::vector<double> grad_, grad_prev_;
};

}  // namespace sparsekern::detail
