#include "sparsekern/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "impulse.hpp"
#include "sparsekern/parallel.hpp"

namespace sparsekern {

double SparseLayer::weight_sum() const noexcept {
  double s = 0.0;
  for (const auto& smp : samples) s += smp.weight;
  return s;
}

double SparseLayer::reach() const noexcept {
  double r = 0.0;
  for (const auto& smp : samples) r = std::max({r, std::abs(smp.offset.x), std::abs(smp.offset.y)});
  return r;
}

Layout parse_layout(std::string_view text) {
  const auto x = text.find_first_of("xX");
  auto bad = [&] { return Error(Errc::parameter, "layout '" + std::string(text) + "' must look like LxN with L, N >= 1"); };
  if (x == std::string_view::npos) throw bad();
  auto parse = [&](std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || v < 1) throw bad();
    return v;
  };
  const int layers = parse(text.substr(0, x));
  const int samples = parse(text.substr(x + 1));
  return Layout(static_cast<std::size_t>(layers), samples);
}

std::string format_layout(const Layout& layout) {
  if (layout.empty()) return "0x0";
  const bool uniform = std::all_of(layout.begin(), layout.end(), [&](int n) { return n == layout.front(); });
  if (uniform) return std::to_string(layout.size()) + "x" + std::to_string(layout.front());
  std::string s;
  for (std::size_t l = 0; l < layout.size(); ++l) s += (l ? "," : "") + std::to_string(layout[l]);
  return s;
}

Layout KernelComplex::layout() const {
  Layout out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(static_cast<int>(l.samples.size()));
  return out;
}

std::size_t KernelComplex::total_samples() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.samples.size();
  return n;
}

void KernelComplex::validate() const {
  if (layers.empty()) throw Error(Errc::parameter, "kernel complex has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].samples.empty()) throw Error(Errc::parameter, "layer " + std::to_string(l) + " has no samples");
    for (const auto& s : layers[l].samples)
      if (!std::isfinite(s.offset.x) || !std::isfinite(s.offset.y) || !std::isfinite(s.weight))
        throw Error(Errc::numeric, "layer " + std::to_string(l) + " has a non-finite parameter");
  }
}

namespace {

// Zero-padded copy with `pad` extra pixels on every side.
std::vector<double> padded(const Image& img, int pad, int& stride) {
  stride = img.width() + 2 * pad;
  std::vector<double> out(static_cast<std::size_t>(stride) * (img.height() + 2 * pad), 0.0);
  for (int y = 0; y < img.height(); ++y) {
    const auto src = img.row(y);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(y + pad) * stride + pad);
  }
  return out;
}

}  // namespace

Image dense_convolve(const Image& img, const DenseKernel& k) {
  const int r = k.radius();
  int stride = 0;
  const auto src = padded(img, r, stride);
  Image out(img.width(), img.height());
  const int w = img.width();
  parallel_rows(img.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      double* o = out.row(y).data();
      for (int j = -r; j <= r; ++j) {
        const double* s = src.data() + static_cast<std::size_t>(y + j + r) * stride + r;
        for (int i = -r; i <= r; ++i) {
          const double kv = k.at(i, j);
          if (kv == 0.0) continue;
          const double* si = s + i;
          for (int x = 0; x < w; ++x) o[x] += kv * si[x];
        }
      }
    }
  });
  return out;
}

Image apply_sparse_layer(const Image& img, const SparseLayer& layer) {
  struct Tap {
    int ix, iy;
    double a00, a10, a01, a11;
  };
  std::vector<Tap> taps;
  taps.reserve(layer.samples.size());
  int pad = 1;
  for (const auto& s : layer.samples) {
    const detail::Footprint fp(s.offset);
    taps.push_back({fp.ix, fp.iy, s.weight * fp.c00, s.weight * fp.c10, s.weight * fp.c01, s.weight * fp.c11});
    pad = std::max({pad, std::abs(fp.ix) + 1, std::abs(fp.iy) + 1});
  }
  int stride = 0;
  const auto src = padded(img, pad, stride);
  Image out(img.width(), img.height());
  const int w = img.width();
  parallel_rows(img.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      double* o = out.row(y).data();
      for (const auto& t : taps) {
        const double* r0 = src.data() + static_cast<std::size_t>(y + pad + t.iy) * stride + pad + t.ix;
        const double* r1 = r0 + stride;
        for (int x = 0; x < w; ++x) o[x] += t.a00 * r0[x] + t.a10 * r0[x + 1] + t.a01 * r1[x] + t.a11 * r1[x + 1];
      }
    }
  });
  return out;
}

Image apply_complex(const Image& img, const KernelComplex& c) {
  c.validate();
  Image cur = img;
  for (const auto& layer : c.layers) cur = apply_sparse_layer(cur, layer);
  return cur;
}

int ir_canvas_size(const KernelComplex& c) {
  constexpr int kGuard = 2;
  int half = kGuard;
  for (const auto& layer : c.layers) half += static_cast<int>(std::ceil(layer.reach()));
  return 2 * half + 1;
}

DenseKernel synthesize_ir(const KernelComplex& c, int canvas) {
  c.validate();
  if (canvas == 0) canvas = ir_canvas_size(c);
  detail::ImpulseEngine engine;
  engine.forward(c, canvas);
  return DenseKernel(canvas, engine.response());
}

double sse(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw Error(Errc::dimension, "image dimensions differ");
  double acc = 0.0;
  for (std::size_t n = 0; n < a.pixel_count(); ++n) {
    const double d = a.data()[n] - b.data()[n];
    acc += d * d;
  }
  return acc;
}

double psnr(const Image& a, const Image& b) {
  const double err = sse(a, b);
  if (a.pixel_count() == 0 || err == 0.0) return kPsnrCap;
  double peak = 1.0;
  for (double v : a.data()) peak = std::max(peak, std::abs(v));
  const double mse = err / static_cast<double>(a.pixel_count());
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

namespace {

std::pair<Image, Image> common_canvas(const DenseKernel& a, const DenseKernel& b) {
  const int m = std::max(a.size(), b.size());
  return {a.embedded(m).to_image(), b.embedded(m).to_image()};
}

}  // namespace

double kernel_sse(const DenseKernel& a, const DenseKernel& b) {
  const auto [ia, ib] = common_canvas(a, b);
  return sse(ia, ib);
}

double kernel_psnr(const DenseKernel& a, const DenseKernel& b) {
  const auto [ia, ib] = common_canvas(a, b);
  return psnr(ia, ib);
}

}  // namespace sparsekern
