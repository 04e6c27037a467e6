#pragma once

#include <string>
#include <string_view>

#include "sparsekern/image.hpp"

namespace sparsekern {

enum class Shape { delta, gaussian, disk, ring, polygon, star, heart, file };

/// Description of a target kernel. Unused fields are ignored for a given
/// shape; `size == 0` picks the default extent.
struct KernelSpec {
  Shape shape = Shape::gaussian;
  double sigma = 5.0;         // gaussian
  double radius = 12.0;       // disk, polygon, star (outer), heart, ring (outer)
  double inner_radius = 8.0;  // ring, star
  int sides = 6;              // polygon, star points
  double rotation = 0.0;      // radians; polygon, star, heart
  int size = 0;
  std::string path;           // file

  static KernelSpec gaussian(double sigma, int size = 0);
  static KernelSpec disk(double radius, int size = 0);
  static KernelSpec ring(double inner, double outer, int size = 0);
  static KernelSpec polygon(int sides, double radius, double rotation = 0.0, int size = 0);
  static KernelSpec star(int points, double outer, double inner, double rotation = 0.0, int size = 0);
  static KernelSpec heart(double radius, int size = 0);
  static KernelSpec delta();
  static KernelSpec file(std::string path);
};

/// Parses "gaussian:5", "disk:12", "ring:8:12", "polygon:6[:R[:rot]]",
/// "star:4[:R[:inner[:rot]]]", "heart[:R]", "delta" or "file:<path>".
/// Numeric fields may carry a trailing "@M" to force the grid size,
/// e.g. "gaussian:1@5".
KernelSpec parse_kernel_spec(std::string_view text);

/// Canonical text form accepted by parse_kernel_spec.
std::string format_kernel_spec(const KernelSpec& spec);

/// One-parameter family keyed by the scale parameter: "gaussian" -> sigma,
/// "disk" -> radius, "ring" -> outer radius (inner = 2/3 outer),
/// "polygon:n" / "star:n" / "heart" -> radius.
KernelSpec family_member(std::string_view family, double p);

/// Two-parameter family (scale, angle in radians). Only rotating shapes
/// (polygon, star, heart) accept a non-zero angle.
KernelSpec family_member(std::string_view family, double p, double angle);

/// Smallest odd integer >= 6 sigma.
int gaussian_extent(double sigma);

/// Normalized (sum 1), non-negative kernel.
DenseKernel generate_kernel(const KernelSpec& spec);

}  // namespace sparsekern
