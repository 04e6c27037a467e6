#include "sparsekern/init.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <string>

namespace sparsekern {

namespace {

constexpr int kMaxConsecutiveRejections = 200;
constexpr double kRadiusShrink = 0.9;

void require_layout(const Layout& layout) {
  if (layout.empty()) throw Error(Errc::parameter, "layout needs at least one layer");
  for (int n : layout)
    if (n < 1) throw Error(Errc::parameter, "every layer needs at least one sample");
}

SparseLayer ring_layer(int samples, double radius) {
  SparseLayer layer;
  layer.samples.reserve(static_cast<std::size_t>(samples));
  for (int i = 1; i <= samples; ++i) {
    // i mod N keeps the i = N sample exactly on the +x axis.
    const double a = 2.0 * std::numbers::pi * (i % samples) / samples;
    layer.samples.push_back({{radius * std::cos(a), radius * std::sin(a)}, 1.0 / samples});
  }
  return layer;
}

SparseLayer uniform_box_layer(int samples, const SupportBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(box.x0, std::nextafter(box.x1, box.x1 + 1.0));
  std::uniform_real_distribution<double> uy(box.y0, std::nextafter(box.y1, box.y1 + 1.0));
  SparseLayer layer;
  for (int i = 0; i < samples; ++i) {
    // Degenerate (single-pixel) boxes must map exactly onto the pixel.
    const double x = box.x0 == box.x1 ? box.x0 : std::min<double>(ux(rng), box.x1);
    const double y = box.y0 == box.y1 ? box.y0 : std::min<double>(uy(rng), box.y1);
    layer.samples.push_back({{x, y}, 1.0 / samples});
  }
  return layer;
}

SparseLayer weighted_first_layer(const std::vector<Vec2>& offsets) {
  SparseLayer layer;
  for (const auto& o : offsets) layer.samples.push_back({o, 1.0 / static_cast<double>(offsets.size())});
  return layer;
}

}  // namespace

InitKind parse_init_kind(std::string_view text) {
  if (text == "rand" || text == "random" || text == "bbox") return InitKind::random;
  if (text == "ir" || text == "radial") return InitKind::radial;
  if (text == "ss" || text == "support") return InitKind::support;
  if (text == "ss-ir" || text == "ss+ir" || text == "hybrid") return InitKind::hybrid;
  throw Error(Errc::parameter, "unknown init strategy '" + std::string(text) + "'");
}

const char* to_string(InitKind kind) noexcept {
  switch (kind) {
    case InitKind::random: return "rand";
    case InitKind::radial: return "ir";
    case InitKind::support: return "ss";
    case InitKind::hybrid: return "ss-ir";
  }
  return "?";
}

SupportBox support_bounding_box(const DenseKernel& k) {
  const auto pixels = support_pixels(k);
  SupportBox b{0, 0, 0, 0};
  bool first = true;
  for (const auto& p : pixels) {
    const int x = static_cast<int>(p.x), y = static_cast<int>(p.y);
    if (first) {
      b = {x, x, y, y};
      first = false;
    }
    b.x0 = std::min(b.x0, x);
    b.x1 = std::max(b.x1, x);
    b.y0 = std::min(b.y0, y);
    b.y1 = std::max(b.y1, y);
  }
  return b;
}

std::vector<Vec2> support_pixels(const DenseKernel& k) {
  const double peak = k.peak();
  if (!(peak > 0.0)) throw Error(Errc::degenerate, "kernel has empty support");
  const double tau = kSupportThreshold * peak;
  std::vector<Vec2> out;
  const int r = k.radius();
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i)
      if (k.at(i, j) > tau) out.push_back({static_cast<double>(i), static_cast<double>(j)});
  if (out.empty()) throw Error(Errc::degenerate, "kernel has empty support");
  return out;
}

double auto_radial_step(int target_size, int layers) {
  if (layers < 1) throw Error(Errc::parameter, "radial step needs at least one layer");
  return static_cast<double>(target_size) / (static_cast<double>(layers) * (layers + 1));
}

KernelComplex radial_init(const Layout& layout, int target_size, double radial_step) {
  require_layout(layout);
  if (radial_step < 0.0) throw Error(Errc::parameter, "radial step must be positive");
  const int layers = static_cast<int>(layout.size());
  const double step = radial_step > 0.0 ? radial_step : auto_radial_step(target_size, layers);
  KernelComplex c;
  for (int l = 1; l <= layers; ++l) c.layers.push_back(ring_layer(layout[l - 1], l * step));
  return c;
}

KernelComplex bbox_random_init(const DenseKernel& tgt, const Layout& layout, std::uint64_t seed) {
  require_layout(layout);
  const auto box = support_bounding_box(tgt);
  std::mt19937_64 rng(seed);
  KernelComplex c = radial_init(layout, tgt.size());
  c.layers.front() = uniform_box_layer(layout.front(), box, rng);
  return c;
}

SupportSample support_rejection_sample(const DenseKernel& tgt, int count, std::uint64_t seed) {
  if (count < 1) throw Error(Errc::parameter, "support sampling needs at least one sample");
  const auto pixels = support_pixels(tgt);
  const auto support = static_cast<int>(pixels.size());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, support - 1);

  SupportSample out;
  out.initial_radius = std::sqrt(static_cast<double>(support) / (count * std::numbers::pi));
  if (support < count) {
    out.with_replacement = true;
    out.final_radius = 0.0;
    for (int n = 0; n < count; ++n) out.offsets.push_back(pixels[pick(rng)]);
    return out;
  }

  double r = out.initial_radius;
  int fails = 0;
  std::vector<char> taken(pixels.size(), 0);
  while (static_cast<int>(out.offsets.size()) < count) {
    const int idx = pick(rng);
    const Vec2 p = pixels[idx];
    bool ok = !taken[idx];
    for (std::size_t a = 0; ok && a < out.offsets.size(); ++a) {
      const double dx = p.x - out.offsets[a].x, dy = p.y - out.offsets[a].y;
      ok = dx * dx + dy * dy >= r * r;
    }
    if (ok) {
      taken[idx] = 1;
      out.offsets.push_back(p);
      fails = 0;
    } else if (++fails >= kMaxConsecutiveRejections) {
      r *= kRadiusShrink;
      fails = 0;
    }
  }
  out.final_radius = r;
  return out;
}

namespace {

std::vector<Vec2> first_layer_offsets(const DenseKernel& tgt, int count, std::uint64_t seed) {
  auto s = support_rejection_sample(tgt, count, seed);
  if (s.with_replacement)
    std::clog << "warning: kernel support has fewer pixels than " << count
              << " samples; first layer drawn with replacement\n";
  return std::move(s.offsets);
}

}  // namespace

KernelComplex support_init(const DenseKernel& tgt, const Layout& layout, std::uint64_t seed) {
  require_layout(layout);
  KernelComplex c = radial_init(layout, tgt.size());
  c.layers.front() = weighted_first_layer(first_layer_offsets(tgt, layout.front(), seed));
  return c;
}

KernelComplex hybrid_init(const DenseKernel& tgt, const Layout& layout, std::uint64_t seed) {
  require_layout(layout);
  KernelComplex c;
  c.layers.push_back(weighted_first_layer(first_layer_offsets(tgt, layout.front(), seed)));
  if (layout.size() > 1) {
    const Layout tail(layout.begin() + 1, layout.end());
    auto rest = radial_init(tail, tgt.size());
    for (auto& l : rest.layers) c.layers.push_back(std::move(l));
  }
  return c;
}

KernelComplex initialize(const DenseKernel& tgt, const Layout& layout, const InitStrategy& strategy) {
  switch (strategy.kind) {
    case InitKind::random: return bbox_random_init(tgt, layout, strategy.seed);
    case InitKind::radial: return radial_init(layout, tgt.size(), strategy.radial_step);
    case InitKind::support: return support_init(tgt, layout, strategy.seed);
    case InitKind::hybrid: return hybrid_init(tgt, layout, strategy.seed);
  }
  throw Error(Errc::parameter, "unknown init strategy");
}

}  // namespace sparsekern
