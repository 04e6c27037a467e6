#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sparsekern/baselines.hpp"
#include "sparsekern/engine.hpp"
#include "sparsekern/init.hpp"
#include "sparsekern/kernels.hpp"
#include "sparsekern/optim.hpp"

namespace sparsekern {

/// Sparse filters keyed by a strictly increasing scalar parameter. Every
/// entry shares one layout so slots correspond across entries.
struct FilterBasis {
  std::vector<double> params;
  std::vector<KernelComplex> filters;

  Layout layout() const;
  /// Throws Errc::parameter for unordered params, size mismatch or
  /// differing layouts.
  void validate() const;
};

/// Two-parameter basis on a (p, q) grid, filters stored row-major with q
/// varying fastest.
struct FilterBasis2D {
  std::vector<double> params_p;
  std::vector<double> params_q;
  std::vector<KernelComplex> filters;

  const KernelComplex& at(std::size_t i, std::size_t j) const { return filters[i * params_q.size() + j]; }
  Layout layout() const;
  void validate() const;
};

using KernelFamily = std::function<KernelSpec(double)>;
using KernelFamily2D = std::function<KernelSpec(double, double)>;

/// Family from a name accepted by family_member ("gaussian", "ring", ...).
KernelFamily named_family(const std::string& name);
KernelFamily2D named_family_2d(const std::string& name);

struct BasisBuildOptions {
  TrainConfig train;
  InitStrategy init;  // used for entries that are not warm-started
  bool warm_start = true;
};

/// Fits one complex per parameter. With warm_start, an entry whose spacing
/// to the previous one equals the first grid step starts from the previous
/// fit, offsets rescaled by the ratio of the targets' RMS radii.
FilterBasis build_basis(const KernelFamily& family, std::span<const double> params, const Layout& layout,
                        const BasisBuildOptions& opts);

FilterBasis2D build_basis_2d(const KernelFamily2D& family, std::span<const double> params_p,
                             std::span<const double> params_q, const Layout& layout, const BasisBuildOptions& opts);

/// Bracketing pair for parameter p: alpha_lo on entry `lo`, alpha_hi on
/// lo + 1 (or on lo itself at the ends). Out-of-range p clamps.
struct Bracket {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double alpha_lo = 1.0;
  double alpha_hi = 0.0;
};

Bracket bracket(double p, std::span<const double> params);

/// Hat-function weights over the knots: at most two non-zeros, sum 1.
std::vector<double> interp_weights(double p, std::span<const double> params);

/// Slot-wise convex combination of basis entries.
KernelComplex synthesize_filter(std::span<const double> alpha, std::span<const KernelComplex> filters);
KernelComplex synthesize_filter(std::span<const double> alpha, const FilterBasis& basis);

/// Per-pixel filter from pmap, evaluated pass by pass: each pass reads the
/// previous pass's output with that pass's interpolated samples.
Image sv_filter(const Image& img, const FilterBasis& basis, const Image& pmap);
Image sv_filter_2d(const Image& img, const FilterBasis2D& basis, const Image& pmap_p, const Image& pmap_q);

/// Reference: generates the dense family kernel at every pixel's parameter
/// and evaluates the dense sum there.
Image sv_ground_truth(const Image& img, const KernelFamily& family, const Image& pmap);
Image sv_ground_truth_2d(const Image& img, const KernelFamily2D& family, const Image& pmap_p, const Image& pmap_q);

/// Comparison bases over the same parameter grid. The tempering basis fits
/// every entry independently with pst_fit.
FilterBasis build_pst_basis(const KernelFamily& family, std::span<const double> params, const Layout& layout,
                            const PstConfig& cfg, const InitStrategy& init);

struct LowRankBasis {
  std::vector<double> params;
  std::vector<LowRankFilter> filters;
};

LowRankBasis build_lowrank_basis(const KernelFamily& family, std::span<const double> params, int rank);

/// Per pixel, blends the bracketing entries' factor vectors with the hat
/// weights and evaluates a vertical then a horizontal pass.
Image sv_lowrank_filter(const Image& img, const LowRankBasis& basis, const Image& pmap);

/// Budget-limited low-rank basis: one sparse basis per rank term (see
/// lowrank_sparse_terms); sv filtering sums the terms' sv_filter outputs.
std::vector<FilterBasis> lowrank_sparse_basis(const LowRankBasis& basis, int taps);
Image sv_filter_sum(const Image& img, const std::vector<FilterBasis>& terms, const Image& pmap);

/// Maps [0, 1] map values linearly onto [lo, hi].
Image scale_parameter_map(const Image& unit_map, double lo, double hi);

}  // namespace sparsekern
