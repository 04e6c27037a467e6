#include "sparsekern/svfilter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "impulse.hpp"
#include "sparsekern/parallel.hpp"

namespace sparsekern {

namespace {

void check_layouts(const std::vector<KernelComplex>& filters) {
  if (filters.empty()) throw Error(Errc::parameter, "basis has no filters");
  for (const auto& f : filters) f.validate();
  const Layout ref = filters.front().layout();
  for (const auto& f : filters)
    if (f.layout() != ref) throw Error(Errc::parameter, "basis filters must share one layout");
}

void check_increasing(std::span<const double> params, const char* what) {
  if (params.empty()) throw Error(Errc::parameter, std::string(what) + " is empty");
  for (double p : params)
    if (!std::isfinite(p)) throw Error(Errc::parameter, std::string(what) + " contains a non-finite value");
  for (std::size_t k = 1; k < params.size(); ++k)
    if (!(params[k] > params[k - 1])) throw Error(Errc::parameter, std::string(what) + " must be strictly increasing");
}

bool uniform_step(std::span<const double> params, std::size_t k) {
  if (k == 0 || params.size() < 2) return false;
  const double step = params[1] - params[0];
  return std::abs((params[k] - params[k - 1]) - step) <= 1e-9 * std::max(1.0, std::abs(step));
}

double rms_radius(const DenseKernel& k) {
  const int r = k.radius();
  double m = 0.0, acc = 0.0;
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) {
      const double w = std::abs(k.at(i, j));
      m += w;
      acc += w * (i * i + j * j);
    }
  return m > 0.0 ? std::sqrt(acc / m) : 0.0;
}

KernelComplex rescaled(KernelComplex c, double factor) {
  for (auto& layer : c.layers)
    for (auto& s : layer.samples) s.offset = {s.offset.x * factor, s.offset.y * factor};
  return c;
}

// Fits `tgt`, warm-starting from `prev` (fitted to `prev_tgt`) when given.
KernelComplex fit_entry(const DenseKernel& tgt, const Layout& layout, const BasisBuildOptions& opts,
                        const KernelComplex* prev, const DenseKernel* prev_tgt) {
  KernelComplex start;
  if (prev != nullptr) {
    const double r0 = rms_radius(*prev_tgt), r1 = rms_radius(tgt);
    start = rescaled(*prev, r0 > 0.0 && r1 > 0.0 ? r1 / r0 : 1.0);
  } else {
    start = initialize(tgt, layout, opts.init);
  }
  return fit_from(tgt, std::move(start), opts.train).theta;
}

struct Entry {
  std::size_t index;
  double alpha;
};

// Runs the multi-pass filter where each pixel blends up to four basis entries.
template <class EntriesAt>
Image blended_passes(const Image& img, const std::vector<KernelComplex>& filters, EntriesAt&& entries_at) {
  const Layout layout = filters.front().layout();
  Image cur = img;
  for (std::size_t l = 0; l < layout.size(); ++l) {
    Image out(img.width(), img.height());
    parallel_rows(img.height(), [&](int y0, int y1) {
      for (int y = y0; y < y1; ++y) {
        for (int x = 0; x < img.width(); ++x) {
          const auto entries = entries_at(x, y);
          double acc = 0.0;
          for (std::size_t i = 0; i < static_cast<std::size_t>(layout[l]); ++i) {
            Vec2 o{0.0, 0.0};
            double w = 0.0;
            for (const Entry& e : entries) {
              if (e.alpha == 0.0) continue;
              const Sample& s = filters[e.index].layers[l].samples[i];
              o.x += e.alpha * s.offset.x;
              o.y += e.alpha * s.offset.y;
              w += e.alpha * s.weight;
            }
            const detail::Footprint fp(o);
            const int sx = x + fp.ix, sy = y + fp.iy;
            acc += w * fp.c00 * cur.get(sx, sy) + w * fp.c10 * cur.get(sx + 1, sy) + w * fp.c01 * cur.get(sx, sy + 1) +
                   w * fp.c11 * cur.get(sx + 1, sy + 1);
          }
          out.at(x, y) = acc;
        }
      }
    });
    cur = std::move(out);
  }
  return cur;
}

}  // namespace

Layout FilterBasis::layout() const { return filters.empty() ? Layout{} : filters.front().layout(); }

void FilterBasis::validate() const {
  check_increasing(params, "basis parameters");
  if (params.size() != filters.size()) throw Error(Errc::parameter, "basis needs one filter per parameter");
  check_layouts(filters);
}

Layout FilterBasis2D::layout() const { return filters.empty() ? Layout{} : filters.front().layout(); }

void FilterBasis2D::validate() const {
  check_increasing(params_p, "basis parameters (p)");
  check_increasing(params_q, "basis parameters (q)");
  if (params_p.size() * params_q.size() != filters.size())
    throw Error(Errc::parameter, "2D basis needs one filter per grid point");
  check_layouts(filters);
}

KernelFamily named_family(const std::string& name) {
  (void)family_member(name, 1.0);  // validates the name
  return [name](double p) { return family_member(name, p); };
}

KernelFamily2D named_family_2d(const std::string& name) {
  (void)family_member(name, 1.0, 0.0);
  return [name](double p, double q) { return family_member(name, p, q); };
}

FilterBasis build_basis(const KernelFamily& family, std::span<const double> params, const Layout& layout,
                        const BasisBuildOptions& opts) {
  check_increasing(params, "basis parameters");
  FilterBasis basis;
  basis.params.assign(params.begin(), params.end());
  DenseKernel prev_tgt;
  for (std::size_t k = 0; k < params.size(); ++k) {
    DenseKernel tgt = generate_kernel(family(params[k]));
    const bool warm = opts.warm_start && uniform_step(params, k);
    basis.filters.push_back(fit_entry(tgt, layout, opts, warm ? &basis.filters.back() : nullptr, &prev_tgt));
    prev_tgt = std::move(tgt);
  }
  return basis;
}

FilterBasis2D build_basis_2d(const KernelFamily2D& family, std::span<const double> params_p,
                             std::span<const double> params_q, const Layout& layout, const BasisBuildOptions& opts) {
  check_increasing(params_p, "basis parameters (p)");
  check_increasing(params_q, "basis parameters (q)");
  FilterBasis2D basis;
  basis.params_p.assign(params_p.begin(), params_p.end());
  basis.params_q.assign(params_q.begin(), params_q.end());
  const std::size_t nq = params_q.size();
  std::vector<DenseKernel> targets;
  for (std::size_t i = 0; i < params_p.size(); ++i) {
    for (std::size_t j = 0; j < nq; ++j) {
      targets.push_back(generate_kernel(family(params_p[i], params_q[j])));
      const KernelComplex* prev = nullptr;
      const DenseKernel* prev_tgt = nullptr;
      if (opts.warm_start && j > 0 && uniform_step(params_q, j)) {
        prev = &basis.filters[i * nq + j - 1];
        prev_tgt = &targets[i * nq + j - 1];
      } else if (opts.warm_start && i > 0 && uniform_step(params_p, i)) {
        prev = &basis.filters[(i - 1) * nq + j];
        prev_tgt = &targets[(i - 1) * nq + j];
      }
      basis.filters.push_back(fit_entry(targets.back(), layout, opts, prev, prev_tgt));
    }
  }
  return basis;
}

Bracket bracket(double p, std::span<const double> params) {
  if (params.empty()) throw Error(Errc::parameter, "basis has no parameters");
  const std::size_t n = params.size();
  if (!(p > params.front())) return {0, 0, 1.0, 0.0};  // also catches NaN
  if (p >= params.back()) return {n - 1, n - 1, 1.0, 0.0};
  const auto it = std::upper_bound(params.begin(), params.end(), p);
  const std::size_t hi = static_cast<std::size_t>(it - params.begin());
  const std::size_t lo = hi - 1;
  const double t = (p - params[lo]) / (params[hi] - params[lo]);
  if (t == 0.0) return {lo, lo, 1.0, 0.0};
  return {lo, hi, 1.0 - t, t};
}

std::vector<double> interp_weights(double p, std::span<const double> params) {
  const Bracket b = bracket(p, params);
  std::vector<double> alpha(params.size(), 0.0);
  alpha[b.lo] += b.alpha_lo;
  alpha[b.hi] += b.alpha_hi;
  return alpha;
}

KernelComplex synthesize_filter(std::span<const double> alpha, std::span<const KernelComplex> filters) {
  if (alpha.size() != filters.size()) throw Error(Errc::dimension, "one weight per basis filter required");
  std::vector<KernelComplex> copy(filters.begin(), filters.end());
  check_layouts(copy);
  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw Error(Errc::parameter, "interpolation weights must be non-negative");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(Errc::parameter, "interpolation weights must sum to 1");

  KernelComplex out = filters.front();
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    for (std::size_t i = 0; i < out.layers[l].samples.size(); ++i) {
      Sample acc{{0.0, 0.0}, 0.0};
      for (std::size_t k = 0; k < filters.size(); ++k) {
        if (alpha[k] == 0.0) continue;
        const Sample& s = filters[k].layers[l].samples[i];
        acc.offset.x += alpha[k] * s.offset.x;
        acc.offset.y += alpha[k] * s.offset.y;
        acc.weight += alpha[k] * s.weight;
      }
      out.layers[l].samples[i] = acc;
    }
  }
  return out;
}

KernelComplex synthesize_filter(std::span<const double> alpha, const FilterBasis& basis) {
  basis.validate();
  return synthesize_filter(alpha, std::span<const KernelComplex>(basis.filters));
}

Image sv_filter(const Image& img, const FilterBasis& basis, const Image& pmap) {
  basis.validate();
  if (!img.same_shape(pmap)) throw Error(Errc::dimension, "parameter map and image dimensions differ");
  std::vector<Bracket> br(pmap.pixel_count());
  for (std::size_t n = 0; n < br.size(); ++n) br[n] = bracket(pmap.data()[n], basis.params);
  const int w = img.width();
  return blended_passes(img, basis.filters, [&](int x, int y) {
    const Bracket& b = br[static_cast<std::size_t>(y) * w + x];
    return std::array<Entry, 2>{Entry{b.lo, b.alpha_lo}, Entry{b.hi, b.alpha_hi}};
  });
}

Image sv_filter_2d(const Image& img, const FilterBasis2D& basis, const Image& pmap_p, const Image& pmap_q) {
  basis.validate();
  if (!img.same_shape(pmap_p) || !img.same_shape(pmap_q))
    throw Error(Errc::dimension, "parameter map and image dimensions differ");
  const std::size_t nq = basis.params_q.size();
  std::vector<std::array<Entry, 4>> entries(img.pixel_count());
  for (std::size_t n = 0; n < entries.size(); ++n) {
    const Bracket bp = bracket(pmap_p.data()[n], basis.params_p);
    const Bracket bq = bracket(pmap_q.data()[n], basis.params_q);
    entries[n] = {Entry{bp.lo * nq + bq.lo, bp.alpha_lo * bq.alpha_lo}, Entry{bp.lo * nq + bq.hi, bp.alpha_lo * bq.alpha_hi},
                  Entry{bp.hi * nq + bq.lo, bp.alpha_hi * bq.alpha_lo}, Entry{bp.hi * nq + bq.hi, bp.alpha_hi * bq.alpha_hi}};
  }
  const int w = img.width();
  return blended_passes(img, basis.filters,
                        [&](int x, int y) -> const std::array<Entry, 4>& { return entries[static_cast<std::size_t>(y) * w + x]; });
}

namespace {

template <class KernelAt>
Image per_pixel_dense(const Image& img, KernelAt&& kernel_at) {
  Image out(img.width(), img.height());
  parallel_rows(img.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < img.width(); ++x) {
        const DenseKernel k = kernel_at(x, y);
        const int r = k.radius();
        double acc = 0.0;
        for (int j = -r; j <= r; ++j)
          for (int i = -r; i <= r; ++i) acc += img.get(x + i, y + j) * k.at(i, j);
        out.at(x, y) = acc;
      }
    }
  });
  return out;
}

}  // namespace

Image sv_ground_truth(const Image& img, const KernelFamily& family, const Image& pmap) {
  if (!img.same_shape(pmap)) throw Error(Errc::dimension, "parameter map and image dimensions differ");
  return per_pixel_dense(img, [&](int x, int y) { return generate_kernel(family(pmap.at(x, y))); });
}

Image sv_ground_truth_2d(const Image& img, const KernelFamily2D& family, const Image& pmap_p, const Image& pmap_q) {
  if (!img.same_shape(pmap_p) || !img.same_shape(pmap_q))
    throw Error(Errc::dimension, "parameter map and image dimensions differ");
  return per_pixel_dense(img, [&](int x, int y) { return generate_kernel(family(pmap_p.at(x, y), pmap_q.at(x, y))); });
}

FilterBasis build_pst_basis(const KernelFamily& family, std::span<const double> params, const Layout& layout,
                            const PstConfig& cfg, const InitStrategy& init) {
  check_increasing(params, "basis parameters");
  FilterBasis basis;
  basis.params.assign(params.begin(), params.end());
  for (double p : params) basis.filters.push_back(pst_fit(generate_kernel(family(p)), layout, cfg, init).theta);
  return basis;
}

LowRankBasis build_lowrank_basis(const KernelFamily& family, std::span<const double> params, int rank) {
  check_increasing(params, "basis parameters");
  LowRankBasis basis;
  basis.params.assign(params.begin(), params.end());
  for (double p : params) basis.filters.push_back(lowrank_decompose(generate_kernel(family(p)), rank));
  return basis;
}

Image sv_lowrank_filter(const Image& img, const LowRankBasis& basis, const Image& pmap) {
  check_increasing(basis.params, "basis parameters");
  if (basis.params.size() != basis.filters.size()) throw Error(Errc::parameter, "basis needs one filter per parameter");
  if (!img.same_shape(pmap)) throw Error(Errc::dimension, "parameter map and image dimensions differ");
  const int rank = basis.filters.front().rank();
  int size = 0;
  for (const auto& f : basis.filters) {
    if (f.rank() != rank) throw Error(Errc::parameter, "low-rank basis entries must share one rank");
    size = std::max(size, f.size);
  }
  // Factors embedded on a common length, signs fixed so each v sums >= 0;
  // otherwise blending two entries could cancel.
  const auto n_basis = basis.filters.size();
  std::vector<double> us(n_basis * rank * size, 0.0), vs(n_basis * rank * size, 0.0);
  for (std::size_t m = 0; m < n_basis; ++m) {
    const auto& f = basis.filters[m];
    const int off = (size - f.size) / 2;
    for (int k = 0; k < rank; ++k) {
      double vsum = 0.0;
      for (double x : f.v[k]) vsum += x;
      const double sign = vsum < 0.0 ? -1.0 : 1.0;
      double* u = us.data() + (m * rank + k) * size + off;
      double* v = vs.data() + (m * rank + k) * size + off;
      for (int t = 0; t < f.size; ++t) {
        u[t] = sign * f.u[k][t];
        v[t] = sign * f.v[k][t];
      }
    }
  }
  const int w = img.width(), h = img.height(), r = size / 2;
  std::vector<Bracket> br(pmap.pixel_count());
  for (std::size_t n = 0; n < br.size(); ++n) br[n] = bracket(pmap.data()[n], basis.params);
  auto blended = [&](const std::vector<double>& factors, const Bracket& b, int k, std::vector<double>& out) {
    const double* lo = factors.data() + (b.lo * rank + k) * size;
    const double* hi = factors.data() + (b.hi * rank + k) * size;
    for (int t = 0; t < size; ++t) out[t] = b.alpha_lo * lo[t] + b.alpha_hi * hi[t];
  };

  // Vertical pass first, then horizontal, each with the pixel's own factors.
  std::vector<Image> tmp(static_cast<std::size_t>(rank), Image(w, h));
  parallel_rows(h, [&](int y0, int y1) {
    std::vector<double> u(size);
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < w; ++x)
        for (int k = 0; k < rank; ++k) {
          blended(us, br[static_cast<std::size_t>(y) * w + x], k, u);
          double acc = 0.0;
          for (int j = std::max(-r, -y); j <= std::min(r, h - 1 - y); ++j) acc += u[j + r] * img.at(x, y + j);
          tmp[k].at(x, y) = acc;
        }
  });
  Image out(w, h);
  parallel_rows(h, [&](int y0, int y1) {
    std::vector<double> v(size);
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = 0; k < rank; ++k) {
          blended(vs, br[static_cast<std::size_t>(y) * w + x], k, v);
          for (int i = std::max(-r, -x); i <= std::min(r, w - 1 - x); ++i) acc += v[i + r] * tmp[k].at(x + i, y);
        }
        out.at(x, y) = acc;
      }
  });
  return out;
}

std::vector<FilterBasis> lowrank_sparse_basis(const LowRankBasis& basis, int taps) {
  if (basis.filters.empty()) throw Error(Errc::parameter, "low-rank basis is empty");
  std::vector<FilterBasis> out(static_cast<std::size_t>(basis.filters.front().rank()));
  for (auto& b : out) b.params = basis.params;
  for (const auto& f : basis.filters) {
    auto terms = lowrank_sparse_terms(f, taps);
    if (terms.size() != out.size()) throw Error(Errc::parameter, "low-rank basis entries must share one rank");
    for (std::size_t k = 0; k < terms.size(); ++k) out[k].filters.push_back(std::move(terms[k]));
  }
  return out;
}

Image sv_filter_sum(const Image& img, const std::vector<FilterBasis>& terms, const Image& pmap) {
  if (terms.empty()) throw Error(Errc::parameter, "no basis terms");
  Image out = sv_filter(img, terms.front(), pmap);
  for (std::size_t k = 1; k < terms.size(); ++k) {
    const Image part = sv_filter(img, terms[k], pmap);
    for (std::size_t n = 0; n < out.pixel_count(); ++n) out.data()[n] += part.data()[n];
  }
  return out;
}

Image scale_parameter_map(const Image& unit_map, double lo, double hi) {
  Image out = unit_map;
  for (double& v : out.data()) v = lo + v * (hi - lo);
  return out;
}

}  // namespace sparsekern
