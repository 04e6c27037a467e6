#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <unistd.h>

#include "sparsekern/sparsekern.h"

namespace {

std::string scratch(const char* name) {
  return "/tmp/sparsekern_capi_" + std::to_string(::getpid()) + "_" + name;
}

sk_image* ramp_image(int w, int h) {
  sk_image* img = nullptr;
  REQUIRE(sk_image_create(w, h, 1, &img) == SK_OK);
  double* d = sk_image_data(img, 0);
  for (int i = 0; i < w * h; ++i) d[i] = std::fmod(0.37 * i, 1.0);
  return img;
}

}  // namespace

TEST_CASE("status strings and errors") {
  CHECK(std::string(sk_status_string(SK_OK)) == "ok");
  CHECK(std::string(sk_version()).size() > 0);
  sk_kernel* k = nullptr;
  CHECK(sk_kernel_generate("gaussian:-1", &k) == SK_ERR_PARAMETER);
  CHECK(k == nullptr);
  CHECK(std::string(sk_last_error()).find("positive") != std::string::npos);
  CHECK(sk_kernel_generate(nullptr, &k) == SK_ERR_PARAMETER);
  CHECK(sk_kernel_generate("gaussian:2", nullptr) == SK_ERR_PARAMETER);
  sk_image* img = nullptr;
  CHECK(sk_image_load("/nonexistent.pgm", &img) == SK_ERR_IO);
  CHECK(sk_image_create(0, 4, 1, &img) == SK_ERR_PARAMETER);
  // null frees are fine
  sk_image_free(nullptr);
  sk_kernel_free(nullptr);
  sk_complex_free(nullptr);
}

TEST_CASE("kernels and dense filtering") {
  sk_kernel* k = nullptr;
  REQUIRE(sk_kernel_generate("gaussian:5", &k) == SK_OK);
  CHECK(sk_kernel_size(k) == 31);
  CHECK(sk_kernel_sum(k) == doctest::Approx(1.0));
  sk_kernel* fam = nullptr;
  REQUIRE(sk_kernel_family("gaussian", 5.0, &fam) == SK_OK);
  double psnr = 0.0;
  REQUIRE(sk_kernel_psnr(k, fam, &psnr) == SK_OK);
  CHECK(psnr == 99.0);

  const auto path = scratch("k.pgm");
  REQUIRE(sk_kernel_save(k, path.c_str()) == SK_OK);
  sk_kernel* back = nullptr;
  REQUIRE(sk_kernel_load(path.c_str(), &back) == SK_OK);
  double sse = 1.0;
  REQUIRE(sk_kernel_sse(k, back, &sse) == SK_OK);
  CHECK(sse < 1e-12);

  sk_image* img = ramp_image(40, 30);
  sk_kernel* id = nullptr;
  REQUIRE(sk_kernel_generate("delta", &id) == SK_OK);
  sk_image* out = nullptr;
  REQUIRE(sk_filter_dense(img, id, &out) == SK_OK);
  REQUIRE(sk_image_psnr(img, out, &psnr) == SK_OK);
  CHECK(psnr == 99.0);
  sk_image* small = nullptr;
  REQUIRE(sk_image_create(3, 3, 1, &small) == SK_OK);
  CHECK(sk_image_psnr(img, small, &psnr) == SK_ERR_DIMENSION);

  sk_image_free(small);
  sk_image_free(out);
  sk_image_free(img);
  sk_kernel_free(id);
  sk_kernel_free(back);
  sk_kernel_free(fam);
  sk_kernel_free(k);
  std::remove(path.c_str());
}

TEST_CASE("complexes") {
  const int per_layer[2] = {2, 1};
  const double ox[3] = {1, -1, 0.5}, oy[3] = {0, 0, 0}, w[3] = {0.5, 0.5, 1.0};
  sk_complex* c = nullptr;
  REQUIRE(sk_complex_create(2, per_layer, ox, oy, w, &c) == SK_OK);
  CHECK(sk_complex_layers(c) == 2);
  CHECK(sk_complex_layer_samples(c, 0) == 2);
  CHECK(sk_complex_total_samples(c) == 3);
  double x, y, ww;
  REQUIRE(sk_complex_sample(c, 1, 0, &x, &y, &ww) == SK_OK);
  CHECK(x == 0.5);
  CHECK(sk_complex_sample(c, 2, 0, &x, &y, &ww) == SK_ERR_PARAMETER);

  sk_kernel* ir = nullptr;
  REQUIRE(sk_complex_impulse_response(c, 0, &ir) == SK_OK);
  CHECK(sk_kernel_sum(ir) == doctest::Approx(1.0));
  sk_kernel* tiny = nullptr;
  CHECK(sk_complex_impulse_response(c, 1, &tiny) == SK_ERR_TRUNCATION);

  const auto path = scratch("theta.json");
  REQUIRE(sk_complex_save(c, path.c_str()) == SK_OK);
  sk_complex* back = nullptr;
  REQUIRE(sk_complex_load(path.c_str(), &back) == SK_OK);
  REQUIRE(sk_complex_sample(back, 0, 1, &x, &y, &ww) == SK_OK);
  CHECK(x == -1.0);
  CHECK(ww == 0.5);

  sk_image* img = ramp_image(32, 32);
  sk_image* a = nullptr;
  sk_image* b = nullptr;
  REQUIRE(sk_filter_sparse(img, c, &a) == SK_OK);
  REQUIRE(sk_filter_sparse(img, back, &b) == SK_OK);
  double sse = 1.0;
  REQUIRE(sk_image_sse(a, b, &sse) == SK_OK);
  CHECK(sse == 0.0);

  const int empty[1] = {0};
  sk_complex* bad = nullptr;
  CHECK(sk_complex_create(1, empty, ox, oy, w, &bad) == SK_ERR_PARAMETER);

  sk_image_free(a);
  sk_image_free(b);
  sk_image_free(img);
  sk_kernel_free(ir);
  sk_complex_free(back);
  sk_complex_free(c);
  std::remove(path.c_str());
}

TEST_CASE("fitting through the C interface") {
  sk_kernel* delta = nullptr;
  REQUIRE(sk_kernel_generate("delta", &delta) == SK_OK);
  sk_fit_options opts;
  sk_fit_options_default(&opts);
  CHECK(opts.steps == 1000);
  CHECK(opts.init == SK_INIT_SS_IR);
  opts.steps = 200;
  sk_fit_result* r = nullptr;
  REQUIRE(sk_fit(delta, "1x1", &opts, &r) == SK_OK);
  CHECK(sk_fit_result_trace_length(r) == 200);
  int step;
  double loss, lr;
  REQUIRE(sk_fit_result_trace(r, 0, &step, &loss, &lr) == SK_OK);
  CHECK(lr == opts.lr_start);
  sk_complex* c = nullptr;
  REQUIRE(sk_fit_result_complex(r, &c) == SK_OK);
  sk_kernel* ir = nullptr;
  REQUIRE(sk_complex_impulse_response(c, 0, &ir) == SK_OK);
  double psnr = 0.0;
  REQUIRE(sk_kernel_psnr(ir, delta, &psnr) == SK_OK);
  CHECK(psnr >= 80.0);

  sk_fit_result* bad = nullptr;
  CHECK(sk_fit(delta, "0x4", &opts, &bad) == SK_ERR_PARAMETER);
  CHECK(bad == nullptr);

  sk_pst_options po;
  sk_pst_options_default(&po);
  po.iterations = 50;
  po.chains = 3;
  sk_pst_result* pr = nullptr;
  REQUIRE(sk_pst(delta, "1x2", &po, &pr) == SK_OK);
  CHECK(sk_pst_result_evaluations(pr) >= 1);
  po.norm = SK_NORM_SOFTMAX;
  sk_pst_result* pbad = nullptr;
  CHECK(sk_pst(delta, "1x2", &po, &pbad) == SK_ERR_PARAMETER);

  sk_pst_result_free(pr);
  sk_kernel_free(ir);
  sk_complex_free(c);
  sk_fit_result_free(r);
  sk_kernel_free(delta);
}

TEST_CASE("low rank") {
  sk_kernel* g = nullptr;
  REQUIRE(sk_kernel_generate("gaussian:3", &g) == SK_OK);
  sk_lowrank* f = nullptr;
  REQUIRE(sk_lowrank_decompose(g, 1, &f) == SK_OK);
  CHECK(sk_lowrank_rank(f) == 1);
  CHECK(sk_lowrank_tail_energy(f) < 1e-9);
  sk_kernel* rec = nullptr;
  REQUIRE(sk_lowrank_reconstruct(f, &rec) == SK_OK);
  double sse = 1.0;
  REQUIRE(sk_kernel_sse(rec, g, &sse) == SK_OK);
  CHECK(sse < 1e-18);
  sk_lowrank* bad = nullptr;
  CHECK(sk_lowrank_decompose(g, 0, &bad) == SK_ERR_PARAMETER);
  sk_kernel_free(rec);
  sk_lowrank_free(f);
  sk_kernel_free(g);
}

TEST_CASE("spatially varying filtering") {
  const double params[2] = {2.0, 3.0};
  sk_fit_options opts;
  sk_fit_options_default(&opts);
  opts.steps = 40;
  sk_basis* b = nullptr;
  REQUIRE(sk_basis_build("gaussian", params, 2, "3x4", &opts, 1, &b) == SK_OK);
  CHECK(sk_basis_size(b) == 2);
  CHECK(sk_basis_param(b, 1) == 3.0);

  const auto path = scratch("basis.json");
  REQUIRE(sk_basis_save(b, path.c_str()) == SK_OK);
  sk_basis* back = nullptr;
  REQUIRE(sk_basis_load(path.c_str(), &back) == SK_OK);

  sk_image* img = ramp_image(40, 40);
  sk_image* unit = nullptr;
  REQUIRE(sk_image_create(40, 40, 1, &unit) == SK_OK);
  sk_image* pmap = nullptr;
  REQUIRE(sk_parameter_map_scale(unit, 2.0, 3.0, &pmap) == SK_OK);
  CHECK(sk_image_cdata(pmap, 0)[7] == 2.0);

  sk_image* sv = nullptr;
  REQUIRE(sk_filter_sv(img, back, pmap, &sv) == SK_OK);
  sk_complex* first = nullptr;
  REQUIRE(sk_basis_filter(b, 0, &first) == SK_OK);
  sk_image* uniform = nullptr;
  REQUIRE(sk_filter_sparse(img, first, &uniform) == SK_OK);
  double sse = 1.0;
  REQUIRE(sk_image_sse(sv, uniform, &sse) == SK_OK);
  CHECK(sse < 1e-20);

  sk_image* gt = nullptr;
  REQUIRE(sk_sv_ground_truth(img, "gaussian", pmap, &gt) == SK_OK);
  CHECK(sk_image_width(gt) == 40);
  sk_complex* none = nullptr;
  CHECK(sk_basis_filter(b, 5, &none) == SK_ERR_PARAMETER);

  sk_image_free(gt);
  sk_image_free(uniform);
  sk_complex_free(first);
  sk_image_free(sv);
  sk_image_free(pmap);
  sk_image_free(unit);
  sk_image_free(img);
  sk_basis_free(back);
  sk_basis_free(b);
  std::remove(path.c_str());
}

TEST_CASE("colour images filter per channel") {
  sk_image* img = nullptr;
  REQUIRE(sk_image_create(8, 6, 3, &img) == SK_OK);
  for (int c = 0; c < 3; ++c) sk_image_data(img, c)[10] = 0.25 * (c + 1);
  sk_kernel* g = nullptr;
  REQUIRE(sk_kernel_generate("gaussian:1", &g) == SK_OK);
  sk_image* out = nullptr;
  REQUIRE(sk_filter_dense(img, g, &out) == SK_OK);
  CHECK(sk_image_channels(out) == 3);
  CHECK(sk_image_cdata(out, 2)[10] == doctest::Approx(3 * sk_image_cdata(out, 0)[10]));
  sk_image* gray = nullptr;
  REQUIRE(sk_image_gray(img, &gray) == SK_OK);
  CHECK(sk_image_cdata(gray, 0)[10] == doctest::Approx(0.5));
  const auto path = scratch("c.ppm");
  REQUIRE(sk_image_save(out, path.c_str()) == SK_OK);
  sk_image* back = nullptr;
  REQUIRE(sk_image_load(path.c_str(), &back) == SK_OK);
  CHECK(sk_image_channels(back) == 3);
  sk_image_free(back);
  sk_image_free(gray);
  sk_image_free(out);
  sk_kernel_free(g);
  sk_image_free(img);
  std::remove(path.c_str());
}
