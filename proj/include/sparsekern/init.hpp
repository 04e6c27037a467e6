#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sparsekern/engine.hpp"
#include "sparsekern/image.hpp"

namespace sparsekern {

enum class InitKind {
  random,  // first layer uniform over the support bounding box, radial tail (Rand)
  radial,  // increasing-radius rings (IR)
  support, // first layer by support rejection sampling, radial tail (SS)
  hybrid,  // SS first layer, radial tail re-spread over L-1 layers (SS+IR)
};

struct InitStrategy {
  InitKind kind = InitKind::hybrid;
  std::uint64_t seed = 0;
  double radial_step = 0.0;  // radial only; 0 = auto
};

InitKind parse_init_kind(std::string_view text);
const char* to_string(InitKind kind) noexcept;

/// Support threshold relative to the kernel peak.
inline constexpr double kSupportThreshold = 1e-4;

struct SupportBox {
  int x0, x1, y0, y1;  // centered kernel coordinates, inclusive
};

/// Bounding box of pixels above kSupportThreshold * peak. Throws
/// Errc::degenerate on an empty kernel.
SupportBox support_bounding_box(const DenseKernel& k);

/// Centered coordinates of every support pixel, row-major.
std::vector<Vec2> support_pixels(const DenseKernel& k);

/// Ring radius step that makes sum_l l*step = target_size / 2.
double auto_radial_step(int target_size, int layers);

/// Layer l (1-based) gets radius l*step with samples at angles 2*pi*i/N_l,
/// i = 1..N_l; weights 1/N_l.
KernelComplex radial_init(const Layout& layout, int target_size, double radial_step = 0.0);

KernelComplex bbox_random_init(const DenseKernel& tgt, const Layout& layout, std::uint64_t seed);

struct SupportSample {
  std::vector<Vec2> offsets;
  double initial_radius = 0.0;
  double final_radius = 0.0;
  /// Support smaller than the request: drawn with replacement instead.
  bool with_replacement = false;
};

/// Dart throwing over the support pixels: initial exclusion radius
/// sqrt(S / (N pi)), shrunk by 0.9 after 200 consecutive rejections.
SupportSample support_rejection_sample(const DenseKernel& tgt, int count, std::uint64_t seed);

KernelComplex support_init(const DenseKernel& tgt, const Layout& layout, std::uint64_t seed);
KernelComplex hybrid_init(const DenseKernel& tgt, const Layout& layout, std::uint64_t seed);

KernelComplex initialize(const DenseKernel& tgt, const Layout& layout, const InitStrategy& strategy);

}  // namespace sparsekern
