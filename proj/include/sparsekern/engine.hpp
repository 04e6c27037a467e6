#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sparsekern/image.hpp"

namespace sparsekern {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Sample {
  Vec2 offset;
  double weight = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// One sparse convolution pass: out(p) = sum_i w_i * bilinear(in, p + o_i).
struct SparseLayer {
  std::vector<Sample> samples;

  double weight_sum() const noexcept;
  /// Largest |o|_inf over the samples.
  double reach() const noexcept;

  friend bool operator==(const SparseLayer&, const SparseLayer&) = default;
};

/// Samples per layer, e.g. {4, 4, 4} for "3x4".
using Layout = std::vector<int>;

/// Parses "LxN" into L layers of N samples. Throws Errc::parameter unless
/// both are positive integers.
Layout parse_layout(std::string_view text);
std::string format_layout(const Layout& layout);

/// Ordered sequence of sparse layers applied one after another.
struct KernelComplex {
  std::vector<SparseLayer> layers;

  Layout layout() const;
  std::size_t total_samples() const noexcept;
  /// Throws Errc::parameter on an empty complex or empty layer and
  /// Errc::numeric on non-finite parameters.
  void validate() const;

  friend bool operator==(const KernelComplex&, const KernelComplex&) = default;
};

/// out[x, y] = sum_{i,j} img[x+i, y+j] * k[i, j], zero padding.
Image dense_convolve(const Image& img, const DenseKernel& k);

Image apply_sparse_layer(const Image& img, const SparseLayer& layer);
Image apply_complex(const Image& img, const KernelComplex& c);

/// Canvas that holds the full composed support: 2*(sum_l ceil(reach_l) + 2) + 1.
int ir_canvas_size(const KernelComplex& c);

/// Impulse response of the complex in the same (correlation) convention as
/// dense_convolve, so dense_convolve(img, synthesize_ir(c)) == apply_complex(img, c)
/// away from borders. canvas == 0 auto-sizes; a canvas too small to hold the
/// support throws Errc::truncation.
DenseKernel synthesize_ir(const KernelComplex& c, int canvas = 0);

double sse(const Image& a, const Image& b);
/// Peak is max(|a|_max, 1). Identical inputs report 99 dB.
double psnr(const Image& a, const Image& b);

/// Kernel comparisons on a common canvas (the smaller one is zero-embedded).
double kernel_sse(const DenseKernel& a, const DenseKernel& b);
double kernel_psnr(const DenseKernel& a, const DenseKernel& b);

inline constexpr double kPsnrCap = 99.0;

}  // namespace sparsekern
