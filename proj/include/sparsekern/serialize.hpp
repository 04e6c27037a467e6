#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sparsekern/baselines.hpp"
#include "sparsekern/engine.hpp"
#include "sparsekern/optim.hpp"
#include "sparsekern/svfilter.hpp"

namespace sparsekern {

/// {"layers":[{"samples":[{"ox":..,"oy":..,"w":..},...]},...]} with 17
/// significant digits, so a save/load cycle is bit-exact.
std::string theta_to_json(const KernelComplex& c);
KernelComplex theta_from_json(std::string_view text);
void save_theta(const std::string& path, const KernelComplex& c);
KernelComplex load_theta(const std::string& path);

/// {"params":[...],"layout":{"layers":L,"samples":[...]},"filters":[theta,...]}.
/// A two-parameter basis adds "params_q" and stores filters q-fastest.
std::string basis_to_json(const FilterBasis& b);
std::string basis_to_json(const FilterBasis2D& b);
FilterBasis basis_from_json(std::string_view text);
FilterBasis2D basis_2d_from_json(std::string_view text);
/// True when the document carries a second parameter axis.
bool basis_json_is_2d(std::string_view text);
void save_basis(const std::string& path, const FilterBasis& b);
void save_basis(const std::string& path, const FilterBasis2D& b);
FilterBasis load_basis(const std::string& path);
FilterBasis2D load_basis_2d(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

/// step,loss,lr
void save_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);
std::vector<TraceRow> load_trace_csv(const std::string& path);

/// iter,best_energy,chain_0,...,chain_{C-1}
void save_pst_trace_csv(const std::string& path, const std::vector<PstTraceRow>& trace);
std::vector<PstTraceRow> load_pst_trace_csv(const std::string& path);

struct BenchRow {
  std::string method;
  int layers = 0;
  int samples = 0;
  double latency_ms = 0.0;
  double psnr_db = 0.0;
};

/// method,layers,samples,latency_ms,psnr_db. A noisy run (single repetition)
/// gets a leading "# noisy" comment line.
std::string bench_csv(const std::vector<BenchRow>& rows, bool noisy);
std::vector<BenchRow> parse_bench_csv(std::string_view text);

/// "%.17g" rendering (round-trips every finite double).
std::string format_double(double v);

}  // namespace sparsekern
