#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sparsekern/engine.hpp"
#include "sparsekern/image.hpp"

namespace testing {

inline sparsekern::Image random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  sparsekern::Image img(w, h);
  for (double& v : img.data()) v = u(rng);
  return img;
}

inline sparsekern::DenseKernel random_kernel(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  sparsekern::DenseKernel k(m);
  for (double& v : k.weights()) v = u(rng);
  return k;
}

// Fractional offsets at least 0.1 away from the integer lattice.
inline double off_lattice(std::mt19937_64& rng, double span) {
  std::uniform_real_distribution<double> whole(-span, span);
  std::uniform_real_distribution<double> frac(0.1, 0.9);
  return std::floor(whole(rng)) + frac(rng);
}

inline sparsekern::KernelComplex random_complex(int layers, int samples, double span, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  sparsekern::KernelComplex c;
  for (int l = 0; l < layers; ++l) {
    sparsekern::SparseLayer layer;
    for (int i = 0; i < samples; ++i) layer.samples.push_back({{off_lattice(rng, span), off_lattice(rng, span)}, w(rng)});
    c.layers.push_back(layer);
  }
  return c;
}

inline double max_abs_diff(const sparsekern::Image& a, const sparsekern::Image& b, int border = 0) {
  double m = 0.0;
  for (int y = border; y < a.height() - border; ++y)
    for (int x = border; x < a.width() - border; ++x) m = std::max(m, std::abs(a.at(x, y) - b.at(x, y)));
  return m;
}

}  // namespace testing
