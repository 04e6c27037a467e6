#include "impulse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace sparsekern::detail {

namespace {

struct Corner {
  int dx, dy;
  double coeff;
};

std::array<Corner, 4> corners(const Footprint& fp) {
  return {{{fp.ix, fp.iy, fp.c00}, {fp.ix + 1, fp.iy, fp.c10}, {fp.ix, fp.iy + 1, fp.c01}, {fp.ix + 1, fp.iy + 1, fp.c11}}};
}

// Row/column range of `box` whose shift by (dx, dy) stays on the canvas.
Box shifted_clip(const Box& box, int dx, int dy, int canvas) {
  Box b;
  b.x0 = std::max(box.x0, -dx);
  b.x1 = std::min(box.x1, canvas - 1 - dx);
  b.y0 = std::max(box.y0, -dy);
  b.y1 = std::min(box.y1, canvas - 1 - dy);
  return b;
}

// dst[p + (dx,dy)] += a * src[p] for p in box.
void splat(std::vector<double>& dst, const std::vector<double>& src, const Box& box, int dx, int dy, double a,
           int canvas) {
  const Box b = shifted_clip(box, dx, dy, canvas);
  if (b.empty()) return;
  const int n = b.x1 - b.x0 + 1;
  for (int y = b.y0; y <= b.y1; ++y) {
    const double* s = src.data() + static_cast<std::size_t>(y) * canvas + b.x0;
    double* d = dst.data() + static_cast<std::size_t>(y + dy) * canvas + b.x0 + dx;
    for (int k = 0; k < n; ++k) d[k] += a * s[k];
  }
}

// sum_p x[p] * g[p + (dx,dy)] for p in box.
double shifted_dot(const std::vector<double>& x, const std::vector<double>& g, const Box& box, int dx, int dy,
                   int canvas) {
  const Box b = shifted_clip(box, dx, dy, canvas);
  if (b.empty()) return 0.0;
  const int n = b.x1 - b.x0 + 1;
  double acc = 0.0;
  for (int y = b.y0; y <= b.y1; ++y) {
    const double* xs = x.data() + static_cast<std::size_t>(y) * canvas + b.x0;
    const double* gs = g.data() + static_cast<std::size_t>(y + dy) * canvas + b.x0 + dx;
    double row = 0.0;
    for (int k = 0; k < n; ++k) row += xs[k] * gs[k];
    acc += row;
  }
  return acc;
}

// dst[p] += a * g[p + (dx,dy)] for p in box.
void gather(std::vector<double>& dst, const std::vector<double>& g, const Box& box, int dx, int dy, double a,
            int canvas) {
  const Box b = shifted_clip(box, dx, dy, canvas);
  if (b.empty()) return;
  const int n = b.x1 - b.x0 + 1;
  for (int y = b.y0; y <= b.y1; ++y) {
    double* d = dst.data() + static_cast<std::size_t>(y) * canvas + b.x0;
    const double* gs = g.data() + static_cast<std::size_t>(y + dy) * canvas + b.x0 + dx;
    for (int k = 0; k < n; ++k) d[k] += a * gs[k];
  }
}

Box propagate(const Box& in, const SparseLayer& layer) {
  Box out{1, 0, 1, 0};
  bool first = true;
  for (const auto& s : layer.samples) {
    const Footprint fp(s.offset);
    const Box b{in.x0 + fp.ix, in.x1 + fp.ix + (fp.fx > 0.0 ? 1 : 0), in.y0 + fp.iy,
                in.y1 + fp.iy + (fp.fy > 0.0 ? 1 : 0)};
    if (first) {
      out = b;
      first = false;
    } else {
      out.x0 = std::min(out.x0, b.x0);
      out.x1 = std::max(out.x1, b.x1);
      out.y0 = std::min(out.y0, b.y0);
      out.y1 = std::max(out.y1, b.y1);
    }
  }
  return out;
}

void zero_box(std::vector<double>& buf, const Box& b, int canvas) {
  const int x0 = std::max(b.x0, 0), x1 = std::min(b.x1, canvas - 1);
  for (int y = std::max(b.y0, 0); y <= std::min(b.y1, canvas - 1); ++y)
    if (x0 <= x1)
      std::fill(buf.begin() + static_cast<std::ptrdiff_t>(y) * canvas + x0,
                buf.begin() + static_cast<std::ptrdiff_t>(y) * canvas + x1 + 1, 0.0);
}

Box grow_high(const Box& b, int canvas) {
  return {b.x0, std::min(b.x1 + 1, canvas - 1), b.y0, std::min(b.y1 + 1, canvas - 1)};
}

void check_parameters(const KernelComplex& c) {
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    const auto& samples = c.layers[l].samples;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (!std::isfinite(s.offset.x) || !std::isfinite(s.offset.y) || !std::isfinite(s.weight))
        throw Error(Errc::numeric, "non-finite parameter at layer " + std::to_string(l) + " sample " + std::to_string(i));
    }
  }
}

double box_sum(const std::vector<double>& x, const Box& b, int canvas) {
  double acc = 0.0;
  for (int y = b.y0; y <= b.y1; ++y)
    for (int xx = b.x0; xx <= b.x1; ++xx) acc += x[static_cast<std::size_t>(y) * canvas + xx];
  return acc;
}

}  // namespace

Footprint::Footprint(Vec2 o) {
  const double flx = std::floor(o.x), fly = std::floor(o.y);
  ix = static_cast<int>(flx);
  iy = static_cast<int>(fly);
  fx = o.x - flx;
  fy = o.y - fly;
  c00 = (1.0 - fx) * (1.0 - fy);
  c10 = fx * (1.0 - fy);
  c01 = (1.0 - fx) * fy;
  c11 = fx * fy;
}

int support_half_extent(const KernelComplex& c) {
  Box b{0, 0, 0, 0};
  for (const auto& layer : c.layers) b = propagate(b, layer);
  return std::max({-b.x0, b.x1, -b.y0, b.y1, 0});
}

void ImpulseEngine::forward(const KernelComplex& c, int canvas, bool clear_outside) {
  c.validate();
  check_parameters(c);
  if (canvas < 1 || canvas % 2 == 0) throw Error(Errc::parameter, "impulse canvas must be a positive odd size");
  const int need = support_half_extent(c);
  if (need > canvas / 2)
    throw Error(Errc::truncation, "impulse canvas " + std::to_string(canvas) + " truncates the composed support (needs " +
                                      std::to_string(2 * need + 1) + ")");

  canvas_ = canvas;
  const std::size_t area = static_cast<std::size_t>(canvas) * canvas;
  const int center = canvas / 2;
  stages_.resize(c.layers.size() + 1);
  boxes_.resize(c.layers.size() + 1);
  // Buffers are reused across calls; only the regions a stage is read from
  // are cleared, except the response when the caller wants the full canvas.
  for (auto& s : stages_)
    if (s.size() != area) s.assign(area, 0.0);
  zero_box(stages_[0], {center - 1, center + 1, center - 1, center + 1}, canvas);
  stages_[0][static_cast<std::size_t>(center) * canvas + center] = 1.0;
  boxes_[0] = {center, center, center, center};

  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    const auto& layer = c.layers[l];
    const auto& src = stages_[l];
    auto& dst = stages_[l + 1];
    const bool last = l + 1 == c.layers.size();
    if (last && clear_outside)
      std::fill(dst.begin(), dst.end(), 0.0);
    else
      zero_box(dst, propagate(boxes_[l], layer), canvas);
    for (const auto& s : layer.samples) {
      const Footprint fp(s.offset);
      for (const auto& k : corners(fp)) {
        const double a = s.weight * k.coeff;
        if (a != 0.0) splat(dst, src, boxes_[l], k.dx, k.dy, a, canvas);
      }
    }
    boxes_[l + 1] = propagate(boxes_[l], layer);
    if (!std::isfinite(box_sum(dst, boxes_[l + 1], canvas))) {
      // Re-run sample by sample to name the culprit.
      std::vector<double> probe(area, 0.0);
      for (std::size_t i = 0; i < layer.samples.size(); ++i) {
        const Footprint fp(layer.samples[i].offset);
        for (const auto& k : corners(fp)) splat(probe, src, boxes_[l], k.dx, k.dy, layer.samples[i].weight * k.coeff, canvas);
        if (!std::isfinite(box_sum(probe, boxes_[l + 1], canvas)))
          throw Error(Errc::numeric, "non-finite impulse response at layer " + std::to_string(l) + " sample " + std::to_string(i));
      }
      throw Error(Errc::numeric, "non-finite impulse response at layer " + std::to_string(l));
    }
  }
}

std::vector<std::vector<ImpulseEngine::SampleGrad>> ImpulseEngine::backward(const KernelComplex& c,
                                                                            const std::vector<double>& d_response) {
  const int canvas = canvas_;
  const std::size_t area = static_cast<std::size_t>(canvas) * canvas;
  if (d_response.size() != area) throw Error(Errc::dimension, "gradient canvas does not match the forward pass");
  if (stages_.size() != c.layers.size() + 1) throw Error(Errc::parameter, "backward called without a matching forward pass");

  std::vector<std::vector<SampleGrad>> out(c.layers.size());
  grad_ = d_response;

  for (std::size_t l = c.layers.size(); l-- > 0;) {
    const auto& layer = c.layers[l];
    const auto& x = stages_[l];
    const Box& box = boxes_[l];
    const bool propagate_down = l > 0;
    Box gbox;
    if (propagate_down) {
      gbox = grow_high(box, canvas);
      if (grad_prev_.size() != area) grad_prev_.assign(area, 0.0);
      zero_box(grad_prev_, gbox, canvas);
    }
    out[l].resize(layer.samples.size());
    for (std::size_t i = 0; i < layer.samples.size(); ++i) {
      const auto& s = layer.samples[i];
      const Footprint fp(s.offset);
      const auto cs = corners(fp);
      std::array<double, 4> h{};
      for (int k = 0; k < 4; ++k) h[k] = shifted_dot(x, grad_, box, cs[k].dx, cs[k].dy, canvas);

      SampleGrad g;
      g.weight = fp.c00 * h[0] + fp.c10 * h[1] + fp.c01 * h[2] + fp.c11 * h[3];
      g.offset.x = s.weight * ((1.0 - fp.fy) * (h[1] - h[0]) + fp.fy * (h[3] - h[2]));
      g.offset.y = s.weight * ((1.0 - fp.fx) * (h[2] - h[0]) + fp.fx * (h[3] - h[1]));
      if (!std::isfinite(g.weight) || !std::isfinite(g.offset.x) || !std::isfinite(g.offset.y))
        throw Error(Errc::numeric, "non-finite gradient at layer " + std::to_string(l) + " sample " + std::to_string(i));
      out[l][i] = g;

      if (propagate_down) {
        for (const auto& k : cs) {
          const double a = s.weight * k.coeff;
          if (a != 0.0) gather(grad_prev_, grad_, gbox, k.dx, k.dy, a, canvas);
        }
      }
    }
    if (propagate_down) grad_.swap(grad_prev_);
  }
  return out;
}

}  // namespace sparsekern::detail
