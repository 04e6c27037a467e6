// Command-line front end. Talks to the library only through the C API.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sparsekern/sparsekern.h"

namespace fs = std::filesystem;

namespace {

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Image = std::unique_ptr<sk_image, Deleter<sk_image, sk_image_free>>;
using Kernel = std::unique_ptr<sk_kernel, Deleter<sk_kernel, sk_kernel_free>>;
using Complex = std::unique_ptr<sk_complex, Deleter<sk_complex, sk_complex_free>>;
using FitResult = std::unique_ptr<sk_fit_result, Deleter<sk_fit_result, sk_fit_result_free>>;
using PstResult = std::unique_ptr<sk_pst_result, Deleter<sk_pst_result, sk_pst_result_free>>;
using LowRank = std::unique_ptr<sk_lowrank, Deleter<sk_lowrank, sk_lowrank_free>>;
using Basis = std::unique_ptr<sk_basis, Deleter<sk_basis, sk_basis_free>>;

// A failed library call; carries the library's message.
struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(sk_status s) {
  if (s != SK_OK) throw Failure(std::string(sk_status_string(s)) + ": " + sk_last_error());
}

#define SK_MAKE(Handle, call_with_out) \
  ([&] {                               \
    Handle::pointer raw_ = nullptr;    \
    check(call_with_out);              \
    return Handle(raw_);               \
  }())

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// --- option values shared by several commands ---

struct Options {
  std::string kernel;
  std::string layout = "12x4";
  std::string init = "ss-ir";
  std::string loss = "charb";
  std::string norm = "sum";
  std::string sym = "none";
  int steps = 1000;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string image;
  std::string pmap;
  std::string basis;
  std::string params;
  std::string theta;
  std::string family;
  std::string methods = "ours,pst,lowrank";
  std::string method = "ours";
  int rank = 1;
  int chains = 10;
  int iters = 10000;
  int reps = 5;
  int size = 512;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  bool warm_start = true;
};

const std::map<std::string, sk_loss> kLosses{{"charb", SK_LOSS_CHARBONNIER}, {"l1", SK_LOSS_L1}, {"l2", SK_LOSS_L2}};
const std::map<std::string, sk_norm> kNorms{{"none", SK_NORM_NONE}, {"sum", SK_NORM_SUM}, {"sofm", SK_NORM_SOFTMAX}};
const std::map<std::string, sk_symmetry> kSyms{{"none", SK_SYM_NONE}, {"kws", SK_SYM_KWS}};
const std::map<std::string, sk_init> kInits{{"rand", SK_INIT_RAND}, {"ir", SK_INIT_IR}, {"ss", SK_INIT_SS}, {"ss-ir", SK_INIT_SS_IR}};

sk_fit_options fit_options(const Options& o) {
  sk_fit_options f;
  sk_fit_options_default(&f);
  f.steps = o.steps;
  f.seed = o.seed;
  f.lr_start = o.lr_start;
  f.lr_end = o.lr_end;
  f.loss = kLosses.at(o.loss);
  f.norm = kNorms.at(o.norm);
  f.symmetry = kSyms.at(o.sym);
  f.init = kInits.at(o.init);
  return f;
}

sk_pst_options pst_options(const Options& o) {
  sk_pst_options p;
  sk_pst_options_default(&p);
  p.chains = o.chains;
  p.iterations = o.iters;
  p.seed = o.seed;
  p.loss = kLosses.at(o.loss);
  p.norm = kNorms.at(o.norm);
  p.init = kInits.at(o.init);
  return p;
}

template <class Map>
CLI::Validator one_of(const Map& m) {
  std::vector<std::string> keys;
  for (const auto& [k, v] : m) keys.push_back(k);
  return CLI::IsMember(keys);
}

const CLI::Validator kLayout(
    [](std::string& s) -> std::string {
      const auto x = s.find('x');
      auto positive = [](const std::string& t) {
        return !t.empty() && t.size() < 7 && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
               std::stoi(t) >= 1;
      };
      if (x == std::string::npos || !positive(s.substr(0, x)) || !positive(s.substr(x + 1)))
        return "layout must be LxN with positive integers, got '" + s + "'";
      return {};
    },
    "LxN");

std::vector<double> parse_params(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--params", "not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError("--params", "needs at least one value");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure("cannot write " + path.string());
  f << text;
}

// Deterministic test image: smooth waves, a checkerboard and some noise.
Image synthetic_image(int size, std::uint64_t seed) {
  auto img = SK_MAKE(Image, sk_image_create(size, size, 1, &raw_));
  double* d = sk_image_data(img.get(), 0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double wave = 0.25 * std::sin(0.11 * x) * std::cos(0.07 * y);
      const double check = ((x / 32 + y / 32) % 2) ? 0.2 : -0.2;
      d[static_cast<std::size_t>(y) * size + x] = std::clamp(0.5 + wave + check + noise(rng), 0.0, 1.0);
    }
  return img;
}

Image load_or_synthetic(const Options& o) {
  if (!o.image.empty()) return SK_MAKE(Image, sk_image_load(o.image.c_str(), &raw_));
  return synthetic_image(o.size, o.seed);
}

// Copy of img inside a border of b pixels, zero or edge-replicated.
Image pad(const sk_image* img, int b, bool clamp) {
  const int w = sk_image_width(img), h = sk_image_height(img), ch = sk_image_channels(img);
  const int pw = w + 2 * b, ph = h + 2 * b;
  auto out = SK_MAKE(Image, sk_image_create(pw, ph, ch, &raw_));
  for (int c = 0; c < ch; ++c) {
    const double* src = sk_image_cdata(img, c);
    double* dst = sk_image_data(out.get(), c);
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) {
        int sx = x - b, sy = y - b;
        if (clamp) {
          sx = std::clamp(sx, 0, w - 1);
          sy = std::clamp(sy, 0, h - 1);
        } else if (sx < 0 || sy < 0 || sx >= w || sy >= h) {
          continue;
        }
        dst[static_cast<std::size_t>(y) * pw + x] = src[static_cast<std::size_t>(sy) * w + sx];
      }
  }
  return out;
}

Image crop(const sk_image* img, int b) {
  const int pw = sk_image_width(img), ch = sk_image_channels(img);
  const int w = pw - 2 * b, h = sk_image_height(img) - 2 * b;
  auto out = SK_MAKE(Image, sk_image_create(w, h, ch, &raw_));
  for (int c = 0; c < ch; ++c) {
    const double* src = sk_image_cdata(img, c);
    double* dst = sk_image_data(out.get(), c);
    for (int y = 0; y < h; ++y)
      std::copy_n(src + static_cast<std::size_t>(y + b) * pw + b, w, dst + static_cast<std::size_t>(y) * w);
  }
  return out;
}

// Half-width of the composed support; padding by this much makes a chain of
// passes see the same zero border as a single dense pass.
int margin(const sk_complex* c) {
  auto ir = SK_MAKE(Kernel, sk_complex_impulse_response(c, 0, &raw_));
  return sk_kernel_size(ir.get()) / 2;
}

int margin(const sk_basis* b) {
  int m = 0;
  for (int i = 0; i < sk_basis_size(b); ++i) {
    auto c = SK_MAKE(Complex, sk_basis_filter(b, i, &raw_));
    m = std::max(m, margin(c.get()));
  }
  return m;
}

Image sparse_padded(const sk_image* img, const sk_complex* c) {
  const int b = margin(c);
  auto big = pad(img, b, false);
  auto out = SK_MAKE(Image, sk_filter_sparse(big.get(), c, &raw_));
  return crop(out.get(), b);
}

Image sv_padded(const sk_image* img, const sk_basis* basis, const sk_image* pmap) {
  const int b = margin(basis);
  auto big = pad(img, b, false);
  auto big_map = pad(pmap, b, true);
  auto out = SK_MAKE(Image, sk_filter_sv(big.get(), basis, big_map.get(), &raw_));
  return crop(out.get(), b);
}

// Vertical ramp 0 -> 1, the tilt-shift map.
Image ramp_map(int w, int h) {
  auto img = SK_MAKE(Image, sk_image_create(w, h, 1, &raw_));
  double* d = sk_image_data(img.get(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) d[static_cast<std::size_t>(y) * w + x] = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
  return img;
}

template <class F>
double median_ms(int reps, F&& body) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    t.push_back(elapsed_ms(t0));
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

// --- commands ---

// Kernels with negative lobes cannot be stored as kernel files; those get a
// clamped, peak-normalized preview instead.
void save_ir(const sk_kernel* k, const fs::path& path) {
  if (sk_kernel_save(k, path.c_str()) == SK_OK) return;
  auto img = SK_MAKE(Image, sk_kernel_to_image(k, &raw_));
  check(sk_image_save(img.get(), path.c_str()));
}

int cmd_optimize(const Options& o) {
  const auto dir = out_dir(o);
  auto target = SK_MAKE(Kernel, sk_kernel_generate(o.kernel.c_str(), &raw_));
  const auto opts = fit_options(o);
  const auto t0 = std::chrono::steady_clock::now();
  auto result = SK_MAKE(FitResult, sk_fit(target.get(), o.layout.c_str(), &opts, &raw_));
  const double ms = elapsed_ms(t0);
  auto theta = SK_MAKE(Complex, sk_fit_result_complex(result.get(), &raw_));
  auto ir = SK_MAKE(Kernel, sk_complex_impulse_response(theta.get(), 0, &raw_));
  double psnr = 0.0;
  check(sk_kernel_psnr(ir.get(), target.get(), &psnr));

  check(sk_complex_save(theta.get(), (dir / "theta.json").c_str()));
  save_ir(ir.get(), dir / "ir.pgm");
  check(sk_fit_result_save_trace(result.get(), (dir / "trace.csv").c_str()));
  const std::string line = o.kernel + ',' + o.layout + ',' + o.init + ',' + fmt(sk_fit_result_best_loss(result.get()), 10) +
                           ',' + fixed(psnr, 4) + ',' + fixed(ms, 1);
  write_file(dir / "summary.csv", "kernel,layout,init,final_loss,psnr_ir,time_ms\n" + line + '\n');
  std::cout << line << '\n';
  return 0;
}

int cmd_pst(const Options& o) {
  const auto dir = out_dir(o);
  auto target = SK_MAKE(Kernel, sk_kernel_generate(o.kernel.c_str(), &raw_));
  const auto opts = pst_options(o);
  const auto t0 = std::chrono::steady_clock::now();
  auto result = SK_MAKE(PstResult, sk_pst(target.get(), o.layout.c_str(), &opts, &raw_));
  const double ms = elapsed_ms(t0);
  auto theta = SK_MAKE(Complex, sk_pst_result_complex(result.get(), &raw_));
  auto ir = SK_MAKE(Kernel, sk_complex_impulse_response(theta.get(), 0, &raw_));
  double psnr = 0.0;
  check(sk_kernel_psnr(ir.get(), target.get(), &psnr));

  check(sk_complex_save(theta.get(), (dir / "theta.json").c_str()));
  save_ir(ir.get(), dir / "ir.pgm");
  check(sk_pst_result_save_trace(result.get(), (dir / "pst_trace.csv").c_str()));
  const std::string line = o.kernel + ',' + o.layout + ',' + o.init + ',' + fmt(sk_pst_result_best_energy(result.get()), 10) +
                           ',' + fixed(psnr, 4) + ',' + fixed(ms, 1);
  write_file(dir / "summary.csv", "kernel,layout,init,final_loss,psnr_ir,time_ms\n" + line + '\n');
  std::cout << line << '\n';
  return 0;
}

int cmd_lowrank(const Options& o) {
  const auto dir = out_dir(o);
  auto target = SK_MAKE(Kernel, sk_kernel_generate(o.kernel.c_str(), &raw_));
  auto f = SK_MAKE(LowRank, sk_lowrank_decompose(target.get(), o.rank, &raw_));
  auto rec = SK_MAKE(Kernel, sk_lowrank_reconstruct(f.get(), &raw_));
  double psnr = 0.0;
  check(sk_kernel_psnr(rec.get(), target.get(), &psnr));
  save_ir(rec.get(), dir / "lowrank_ir.pgm");
  if (!o.image.empty()) {
    auto img = SK_MAKE(Image, sk_image_load(o.image.c_str(), &raw_));
    auto out = SK_MAKE(Image, sk_filter_lowrank(img.get(), f.get(), &raw_));
    check(sk_image_save(out.get(), (dir / (sk_image_channels(out.get()) == 3 ? "filtered.ppm" : "filtered.pgm")).c_str()));
  }
  std::cout << "kernel,rank,frobenius_error,psnr_ir\n"
            << o.kernel << ',' << o.rank << ',' << fmt(sk_lowrank_tail_energy(f.get()), 10) << ',' << fixed(psnr, 4) << '\n';
  return 0;
}

int cmd_filter(const Options& o) {
  const auto dir = out_dir(o);
  auto img = SK_MAKE(Image, sk_image_load(o.image.c_str(), &raw_));
  Image out;
  std::string what;
  if (!o.theta.empty()) {
    auto theta = SK_MAKE(Complex, sk_complex_load(o.theta.c_str(), &raw_));
    out = SK_MAKE(Image, sk_filter_sparse(img.get(), theta.get(), &raw_));
    what = "sparse";
  } else if (!o.kernel.empty()) {
    auto k = SK_MAKE(Kernel, sk_kernel_generate(o.kernel.c_str(), &raw_));
    out = SK_MAKE(Image, sk_filter_dense(img.get(), k.get(), &raw_));
    what = "dense";
  } else {
    throw CLI::ValidationError("filter", "give --theta (sparse) or --kernel (dense)");
  }
  const auto path = dir / (sk_image_channels(out.get()) == 3 ? "filtered.ppm" : "filtered.pgm");
  check(sk_image_save(out.get(), path.c_str()));
  std::cout << what << ',' << path.string() << '\n';
  return 0;
}

int cmd_sv_build(const Options& o) {
  const auto dir = out_dir(o);
  const auto params = parse_params(o.params);
  const std::string family = o.family.empty() ? o.kernel : o.family;
  if (family.empty()) throw CLI::ValidationError("sv-build", "give the kernel family with --kernel");
  Basis basis;
  const auto t0 = std::chrono::steady_clock::now();
  if (o.method == "pst") {
    const auto opts = pst_options(o);
    basis = SK_MAKE(Basis, sk_basis_build_pst(family.c_str(), params.data(), static_cast<int>(params.size()), o.layout.c_str(),
                                              &opts, &raw_));
  } else {
    const auto opts = fit_options(o);
    basis = SK_MAKE(Basis, sk_basis_build(family.c_str(), params.data(), static_cast<int>(params.size()), o.layout.c_str(),
                                          &opts, o.warm_start ? 1 : 0, &raw_));
  }
  const double ms = elapsed_ms(t0);
  const auto path = dir / "basis.json";
  check(sk_basis_save(basis.get(), path.c_str()));
  std::cout << family << ',' << o.layout << ',' << params.size() << ',' << fixed(ms, 1) << ',' << path.string() << '\n';
  return 0;
}

int cmd_sv_apply(const Options& o) {
  const auto dir = out_dir(o);
  auto img = SK_MAKE(Image, sk_image_load(o.image.c_str(), &raw_));
  auto basis = SK_MAKE(Basis, sk_basis_load(o.basis.c_str(), &raw_));
  Image unit;
  if (o.pmap.empty()) {
    unit = ramp_map(sk_image_width(img.get()), sk_image_height(img.get()));
  } else {
    auto loaded = SK_MAKE(Image, sk_image_load(o.pmap.c_str(), &raw_));
    unit = SK_MAKE(Image, sk_image_gray(loaded.get(), &raw_));
  }
  const double lo = sk_basis_param(basis.get(), 0), hi = sk_basis_param(basis.get(), sk_basis_size(basis.get()) - 1);
  auto pmap = SK_MAKE(Image, sk_parameter_map_scale(unit.get(), lo, hi, &raw_));
  const auto t0 = std::chrono::steady_clock::now();
  auto out = sv_padded(img.get(), basis.get(), pmap.get());
  const double ms = elapsed_ms(t0);
  const bool color = sk_image_channels(out.get()) == 3;
  check(sk_image_save(out.get(), (dir / (color ? "sv.ppm" : "sv.pgm")).c_str()));
  std::string line = "sv_filter," + fixed(ms, 2);
  if (!o.family.empty()) {
    const auto t1 = std::chrono::steady_clock::now();
    auto gt = SK_MAKE(Image, sk_sv_ground_truth(img.get(), o.family.c_str(), pmap.get(), &raw_));
    const double gt_ms = elapsed_ms(t1);
    check(sk_image_save(gt.get(), (dir / (color ? "gt.ppm" : "gt.pgm")).c_str()));
    double psnr = 0.0;
    check(sk_image_psnr(gt.get(), out.get(), &psnr));
    line += ",sv_ground_truth," + fixed(gt_ms, 2) + ",psnr_db," + fixed(psnr, 4);
  }
  std::cout << line << '\n';
  return 0;
}

struct BenchRow {
  std::string method;
  int layers;
  int samples;
  double latency_ms;
  double psnr_db;
};

int cmd_bench(const Options& o) {
  const auto dir = out_dir(o);
  auto img = load_or_synthetic(o);
  auto gray = SK_MAKE(Image, sk_image_gray(img.get(), &raw_));
  const std::string spec = o.kernel.empty() ? "gaussian:11" : o.kernel;
  auto target = SK_MAKE(Kernel, sk_kernel_generate(spec.c_str(), &raw_));
  const int m = sk_kernel_size(target.get());

  Complex theta;
  if (!o.theta.empty()) {
    theta = SK_MAKE(Complex, sk_complex_load(o.theta.c_str(), &raw_));
  } else {
    const auto opts = fit_options(o);
    auto fitted = SK_MAKE(FitResult, sk_fit(target.get(), o.layout.c_str(), &opts, &raw_));
    theta = SK_MAKE(Complex, sk_fit_result_complex(fitted.get(), &raw_));
  }
  auto lowrank = SK_MAKE(LowRank, sk_lowrank_decompose(target.get(), o.rank, &raw_));

  std::vector<BenchRow> rows;
  Image dense_out, sparse_out, lowrank_out;
  const double dense_ms = median_ms(o.reps, [&] { dense_out = SK_MAKE(Image, sk_filter_dense(gray.get(), target.get(), &raw_)); });
  const double sparse_ms = median_ms(o.reps, [&] { sparse_out = SK_MAKE(Image, sk_filter_sparse(gray.get(), theta.get(), &raw_)); });
  const double lowrank_ms =
      median_ms(o.reps, [&] { lowrank_out = SK_MAKE(Image, sk_filter_lowrank(gray.get(), lowrank.get(), &raw_)); });
  double p_dense = 0.0, p_sparse = 0.0, p_lowrank = 0.0;
  check(sk_image_psnr(dense_out.get(), dense_out.get(), &p_dense));
  auto sparse_full = sparse_padded(gray.get(), theta.get());
  check(sk_image_psnr(dense_out.get(), sparse_full.get(), &p_sparse));
  check(sk_image_psnr(dense_out.get(), lowrank_out.get(), &p_lowrank));
  rows.push_back({"dense", 1, m * m, dense_ms, p_dense});
  rows.push_back({"sparse", sk_complex_layers(theta.get()), sk_complex_total_samples(theta.get()), sparse_ms, p_sparse});
  rows.push_back({"lowrank", 2 * o.rank, 2 * o.rank * m, lowrank_ms, p_lowrank});

  if (!o.basis.empty()) {
    auto basis = SK_MAKE(Basis, sk_basis_load(o.basis.c_str(), &raw_));
    const std::string family = o.family.empty() ? "gaussian" : o.family;
    Image unit;
    if (o.pmap.empty()) {
      unit = ramp_map(sk_image_width(gray.get()), sk_image_height(gray.get()));
    } else {
      auto loaded = SK_MAKE(Image, sk_image_load(o.pmap.c_str(), &raw_));
      unit = SK_MAKE(Image, sk_image_gray(loaded.get(), &raw_));
    }
    const double lo = sk_basis_param(basis.get(), 0), hi = sk_basis_param(basis.get(), sk_basis_size(basis.get()) - 1);
    auto pmap = SK_MAKE(Image, sk_parameter_map_scale(unit.get(), lo, hi, &raw_));
    Image sv_out, gt_out;
    const double sv_ms = median_ms(o.reps, [&] { sv_out = SK_MAKE(Image, sk_filter_sv(gray.get(), basis.get(), pmap.get(), &raw_)); });
    const double gt_ms =
        median_ms(o.reps, [&] { gt_out = SK_MAKE(Image, sk_sv_ground_truth(gray.get(), family.c_str(), pmap.get(), &raw_)); });
    double p_sv = 0.0, p_gt = 0.0;
    auto sv_full = sv_padded(gray.get(), basis.get(), pmap.get());
    check(sk_image_psnr(gt_out.get(), sv_full.get(), &p_sv));
    check(sk_image_psnr(gt_out.get(), gt_out.get(), &p_gt));
    Complex first = SK_MAKE(Complex, sk_basis_filter(basis.get(), 0, &raw_));
    rows.push_back({"sv_filter", sk_complex_layers(first.get()), sk_complex_total_samples(first.get()), sv_ms, p_sv});
    auto gt_kernel = SK_MAKE(Kernel, sk_kernel_family(family.c_str(), hi, &raw_));
    const int gm = sk_kernel_size(gt_kernel.get());
    rows.push_back({"sv_ground_truth", 1, gm * gm, gt_ms, p_gt});
  }

  std::string csv;
  if (o.reps < 2) csv += "# noisy: single repetition\n";
  csv += "method,layers,samples,latency_ms,psnr_db\n";
  for (const auto& r : rows)
    csv += r.method + ',' + std::to_string(r.layers) + ',' + std::to_string(r.samples) + ',' + fixed(r.latency_ms, 4) + ',' +
           fixed(r.psnr_db, 4) + '\n';
  write_file(dir / "bench.csv", csv);
  std::cout << csv;
  return 0;
}

struct Cell {
  std::string kernel;
  std::string method;
  std::string budget;
  double psnr = 0.0;
  double sse = 0.0;
  double latency_ms = 0.0;
  std::string error;
};

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Grouped bar chart of IR PSNR, one group per kernel.
std::string compare_svg(const std::vector<Cell>& cells, const std::vector<std::string>& methods) {
  std::vector<std::string> kernels;
  for (const auto& c : cells)
    if (std::find(kernels.begin(), kernels.end(), c.kernel) == kernels.end()) kernels.push_back(c.kernel);
  const int bar = 28, gap = 36, left = 60, top = 30, plot_h = 240;
  const int group_w = static_cast<int>(methods.size()) * bar + gap;
  const int width = left + static_cast<int>(kernels.size()) * group_w + 160;
  const int height = top + plot_h + 70;
  double max_psnr = 1.0;
  for (const auto& c : cells)
    if (c.error.empty()) max_psnr = std::max(max_psnr, c.psnr);
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">IR PSNR (dB) by kernel and method</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - 150 << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = max_psnr * t / 4;
    const int y = top + plot_h - static_cast<int>(plot_h * t / 4.0);
    s << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fixed(v, 0) << "</text>\n";
  }
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const int x0 = left + gap / 2 + static_cast<int>(k) * group_w;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto it = std::find_if(cells.begin(), cells.end(),
                                   [&](const Cell& c) { return c.kernel == kernels[k] && c.method == methods[m]; });
      if (it == cells.end() || !it->error.empty()) continue;
      const int h = static_cast<int>(plot_h * std::max(0.0, it->psnr) / max_psnr);
      s << "<rect x=\"" << x0 + static_cast<int>(m) * bar << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar - 4
        << "\" height=\"" << h << "\" fill=\"" << colors[m % 6] << "\"><title>" << svg_escape(it->kernel + " " + it->method) << ": "
        << fixed(it->psnr, 2) << " dB</title></rect>\n";
    }
    s << "<text x=\"" << x0 + static_cast<int>(methods.size()) * bar / 2 << "\" y=\"" << top + plot_h + 16
      << "\" text-anchor=\"middle\">" << svg_escape(kernels[k]) << "</text>\n";
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const int y = top + 10 + static_cast<int>(m) * 18;
    s << "<rect x=\"" << width - 140 << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\"" << colors[m % 6] << "\"/>\n";
    s << "<text x=\"" << width - 122 << "\" y=\"" << y + 1 << "\">" << svg_escape(methods[m]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

int cmd_compare(const Options& o) {
  const auto dir = out_dir(o);
  const auto kernels = split_list(o.kernel.empty() ? "gaussian:5,ring" : o.kernel);
  const auto methods = split_list(o.methods);
  for (const auto& m : methods)
    if (m != "ours" && m != "pst" && m != "lowrank") throw CLI::ValidationError("--methods", "unknown method '" + m + "'");
  auto img = synthetic_image(256, o.seed);

  std::vector<Cell> cells;
  for (const auto& spec : kernels) {
    for (const auto& method : methods) {
      Cell cell;
      cell.kernel = spec;
      cell.method = method;
      cell.budget = method == "lowrank" ? "rank" + std::to_string(o.rank) : o.layout;
      try {
        auto target = SK_MAKE(Kernel, sk_kernel_generate(spec.c_str(), &raw_));
        Kernel approx;
        Image filtered;
        if (method == "lowrank") {
          auto f = SK_MAKE(LowRank, sk_lowrank_decompose(target.get(), o.rank, &raw_));
          approx = SK_MAKE(Kernel, sk_lowrank_reconstruct(f.get(), &raw_));
          cell.latency_ms = median_ms(1, [&] { filtered = SK_MAKE(Image, sk_filter_lowrank(img.get(), f.get(), &raw_)); });
        } else {
          Complex theta;
          if (method == "ours") {
            const auto opts = fit_options(o);
            auto r = SK_MAKE(FitResult, sk_fit(target.get(), o.layout.c_str(), &opts, &raw_));
            theta = SK_MAKE(Complex, sk_fit_result_complex(r.get(), &raw_));
          } else {
            const auto opts = pst_options(o);
            auto r = SK_MAKE(PstResult, sk_pst(target.get(), o.layout.c_str(), &opts, &raw_));
            theta = SK_MAKE(Complex, sk_pst_result_complex(r.get(), &raw_));
          }
          approx = SK_MAKE(Kernel, sk_complex_impulse_response(theta.get(), 0, &raw_));
          cell.latency_ms = median_ms(1, [&] { filtered = SK_MAKE(Image, sk_filter_sparse(img.get(), theta.get(), &raw_)); });
        }
        check(sk_kernel_psnr(approx.get(), target.get(), &cell.psnr));
        check(sk_kernel_sse(approx.get(), target.get(), &cell.sse));
      } catch (const Failure& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  std::sort(cells.begin(), cells.end(),
            [](const Cell& a, const Cell& b) { return std::tie(a.kernel, a.method) < std::tie(b.kernel, b.method); });

  std::string csv = "kernel,method,budget,psnr_ir,sse,latency_ms,status\n";
  bool ok = true;
  for (const auto& c : cells) {
    std::string status = "ok";
    if (!c.error.empty()) {
      ok = false;
      status = c.error;
      std::replace(status.begin(), status.end(), ',', ';');
      std::replace(status.begin(), status.end(), '\n', ' ');
    }
    csv += c.kernel + ',' + c.method + ',' + c.budget + ',' + fixed(c.psnr, 4) + ',' + fmt(c.sse, 10) + ',' +
           fixed(c.latency_ms, 2) + ',' + status + '\n';
  }
  write_file(dir / "compare.csv", csv);
  write_file(dir / "compare.svg", compare_svg(cells, methods));
  std::cout << csv;
  return ok ? 0 : 1;
}

// --- config file handling ---

// key=value lines ('#' comments) become "--key value" arguments for every
// key not already given on the command line.
std::vector<std::string> with_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
  auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == "--" + key || a.rfind("--" + key + "=", 0) == 0; });
  };
  std::vector<std::string> extra;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--config", path + ":" + std::to_string(n) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!given(key)) {
      extra.push_back("--" + key);
      extra.push_back(value);
    }
  }
  // Insert after the subcommand name so the options bind to it.
  const auto at = args.size() > 1 ? args.begin() + 2 : args.end();
  args.insert(at, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse kernel decomposition: fit, filter, compare"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sk_version()));
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "random seed");
    c->add_option("--out", o.out, "output directory");
  };
  auto add_fit = [&](CLI::App* c) {
    c->add_option("--layout", o.layout, "layers x samples, e.g. 12x4")->check(kLayout);
    c->add_option("--init", o.init, "initialization")->check(one_of(kInits));
    c->add_option("--loss", o.loss, "impulse-response loss")->check(one_of(kLosses));
    c->add_option("--norm", o.norm, "weight normalization")->check(one_of(kNorms));
    c->add_option("--sym", o.sym, "offset symmetry")->check(one_of(kSyms));
    c->add_option("--steps", o.steps, "optimization steps")->check(CLI::PositiveNumber);
    c->add_option("--lr-start", o.lr_start, "initial learning rate")->check(CLI::PositiveNumber);
    c->add_option("--lr-end", o.lr_end, "final learning rate")->check(CLI::PositiveNumber);
  };
  auto add_pst = [&](CLI::App* c) {
    c->add_option("--chains", o.chains, "tempering chains")->check(CLI::Range(2, 1000));
    c->add_option("--iters", o.iters, "iterations per chain")->check(CLI::NonNegativeNumber);
  };

  auto* optimize = app.add_subcommand("optimize", "fit a sparse complex to a kernel");
  optimize->add_option("--kernel", o.kernel, "kernel spec, e.g. gaussian:5")->required();
  add_fit(optimize);
  add_common(optimize);

  auto* pst = app.add_subcommand("pst", "parallel-tempering baseline fit");
  pst->add_option("--kernel", o.kernel, "kernel spec")->required();
  pst->add_option("--layout", o.layout, "layers x samples")->check(kLayout);
  pst->add_option("--init", o.init, "initialization")->check(one_of(kInits));
  pst->add_option("--loss", o.loss, "energy")->check(one_of(kLosses));
  pst->add_option("--norm", o.norm, "weight normalization (none or sum)")->check(CLI::IsMember({"none", "sum"}));
  add_pst(pst);
  add_common(pst);

  auto* lowrank = app.add_subcommand("lowrank", "separable low-rank baseline");
  lowrank->add_option("--kernel", o.kernel, "kernel spec")->required();
  lowrank->add_option("--rank", o.rank, "rank")->check(CLI::PositiveNumber);
  lowrank->add_option("--image", o.image, "optional image to filter")->check(CLI::ExistingFile);
  add_common(lowrank);

  auto* filter = app.add_subcommand("filter", "filter an image with a dense kernel or a sparse complex");
  filter->add_option("--image", o.image, "input PGM/PPM")->required()->check(CLI::ExistingFile);
  filter->add_option("--kernel", o.kernel, "dense kernel spec");
  filter->add_option("--theta", o.theta, "sparse complex JSON")->check(CLI::ExistingFile);
  add_common(filter);

  auto* sv_build = app.add_subcommand("sv-build", "fit a basis of sparse filters over a parameter grid");
  sv_build->add_option("--kernel", o.kernel, "kernel family (gaussian, disk, ring, polygon:N, star:N, heart)")->required();
  sv_build->add_option("--params", o.params, "p1,p2,... strictly increasing")->required();
  sv_build->add_option("--method", o.method, "fitting method")->check(CLI::IsMember({"ours", "pst"}));
  sv_build->add_flag("!--no-warm-start", o.warm_start, "fit every entry from a fresh initialization");
  add_fit(sv_build);
  add_pst(sv_build);
  add_common(sv_build);

  auto* sv_apply = app.add_subcommand("sv-apply", "spatially varying filtering with a basis");
  sv_apply->add_option("--image", o.image, "input PGM/PPM")->required()->check(CLI::ExistingFile);
  sv_apply->add_option("--basis", o.basis, "basis JSON")->required()->check(CLI::ExistingFile);
  sv_apply->add_option("--pmap", o.pmap, "parameter map PGM, [0,1] mapped onto the basis range (default: vertical ramp)")
      ->check(CLI::ExistingFile);
  sv_apply->add_option("--family", o.family, "also compute the per-pixel dense reference for this family");
  add_common(sv_apply);

  auto* bench = app.add_subcommand("bench", "time dense, sparse, low-rank and spatially varying filtering");
  bench->add_option("--image", o.image, "input image (default: synthetic)")->check(CLI::ExistingFile);
  bench->add_option("--size", o.size, "synthetic image size")->check(CLI::PositiveNumber);
  bench->add_option("--kernel", o.kernel, "dense target (default gaussian:11)");
  bench->add_option("--theta", o.theta, "sparse complex JSON (default: fit --layout)")->check(CLI::ExistingFile);
  bench->add_option("--rank", o.rank, "low-rank rank")->check(CLI::PositiveNumber);
  bench->add_option("--basis", o.basis, "basis JSON for the spatially varying rows")->check(CLI::ExistingFile);
  bench->add_option("--pmap", o.pmap, "parameter map PGM")->check(CLI::ExistingFile);
  bench->add_option("--family", o.family, "reference family for the basis (default gaussian)");
  bench->add_option("--reps", o.reps, "repetitions (median reported)")->check(CLI::PositiveNumber);
  add_fit(bench);
  add_common(bench);

  auto* compare = app.add_subcommand("compare", "compare methods across kernels");
  compare->add_option("--kernel", o.kernel, "comma-separated kernel specs (default gaussian:5,ring)");
  compare->add_option("--methods", o.methods, "comma-separated subset of ours,pst,lowrank");
  compare->add_option("--rank", o.rank, "low-rank rank")->check(CLI::PositiveNumber);
  add_fit(compare);
  add_pst(compare);
  add_common(compare);

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = with_config(std::move(args));
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (o.steps < 1) throw CLI::ValidationError("--steps", "must be positive");
    if (*optimize) return cmd_optimize(o);
    if (*pst) return cmd_pst(o);
    if (*lowrank) return cmd_lowrank(o);
    if (*filter) return cmd_filter(o);
    if (*sv_build) return cmd_sv_build(o);
    if (*sv_apply) return cmd_sv_apply(o);
    if (*bench) return cmd_bench(o);
    if (*compare) return cmd_compare(o);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
