#pragma once

#include <cstdint>
#include <vector>

#include "sparsekern/engine.hpp"
#include "sparsekern/init.hpp"
#include "sparsekern/optim.hpp"

namespace sparsekern {

/// Sum of rank-1 separable terms. u_k runs along y (column pass), v_k along
/// x (row pass); sqrt(sigma_k) is folded into both.
struct LowRankFilter {
  int size = 0;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> v;
  std::vector<double> singular_values;  // all of them, descending

  int rank() const noexcept { return static_cast<int>(u.size()); }
  DenseKernel reconstruct() const;
  /// sqrt(sum_{k > rank} sigma_k^2).
  double tail_energy() const;
};

/// Truncated SVD of the kernel. Requires 1 <= rank <= size.
LowRankFilter lowrank_decompose(const DenseKernel& tgt, int rank);

/// sum_k (img * column u_k) * row v_k, zero padding.
Image lowrank_filter(const Image& img, const LowRankFilter& f);

/// Budget-limited form: every rank term becomes a two-layer complex (a
/// vertical pass of `taps` samples, then a horizontal one). Each factor is
/// cut into `taps` equal-width bins; a bin becomes one tap carrying its mass
/// at its centroid (the bin center when the bin mixes signs). Factor signs
/// are fixed so each horizontal factor sums >= 0.
std::vector<KernelComplex> lowrank_sparse_terms(const LowRankFilter& f, int taps);

struct PstConfig {
  int chains = 10;
  int iterations = 10000;
  /// Geometric ladder from t_max (chain 0) to t_min (last chain). Zero picks
  /// 1e-2 * E_init and 1e-6 * E_init.
  double t_max = 0.0;
  double t_min = 0.0;
  /// Mutation scales; offset_sigma == 0 picks 0.05 * target size.
  double offset_sigma = 0.0;
  double weight_sigma = 0.02;
  int swap_interval = 10;
  std::uint64_t seed = 0;
  LossKind loss;
  WeightNorm weight_norm = WeightNorm::sum;

  void validate() const;
};

struct PstTraceRow {
  int iteration = 0;
  double best_energy = 0.0;
  std::vector<double> chain_energies;
};

struct PstResult {
  KernelComplex theta;
  double best_energy = 0.0;
  std::vector<double> temperatures;
  std::vector<PstTraceRow> trace;  // row 0 is the initial state
  long evaluations = 0;
  long accepted_swaps = 0;
};

/// Parallel tempering over offsets and weights with Metropolis moves and
/// periodic adjacent-chain swaps. Energy is the same loss as the gradient
/// fitter. Offsets are kept within |o|_inf <= target size.
PstResult pst_fit(const DenseKernel& tgt, const Layout& layout, const PstConfig& cfg, const InitStrategy& init);

/// Swap acceptance probability for adjacent chains.
double swap_probability(double t_a, double e_a, double t_b, double e_b);

}  // namespace sparsekern
