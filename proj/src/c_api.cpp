#include "sparsekern/sparsekern.h"

#include <algorithm>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "sparsekern/baselines.hpp"
#include "sparsekern/engine.hpp"
#include "sparsekern/init.hpp"
#include "sparsekern/kernels.hpp"
#include "sparsekern/optim.hpp"
#include "sparsekern/pgm.hpp"
#include "sparsekern/serialize.hpp"
#include "sparsekern/svfilter.hpp"

namespace sk = sparsekern;

struct sk_image {
  std::vector<sk::Image> channels;
};
struct sk_kernel {
  sk::DenseKernel k;
};
struct sk_complex {
  sk::KernelComplex c;
};
struct sk_fit_result {
  sk::FitResult r;
};
struct sk_pst_result {
  sk::PstResult r;
};
struct sk_lowrank {
  sk::LowRankFilter f;
};
struct sk_basis {
  sk::FilterBasis b;
};

namespace {

thread_local std::string g_last_error;

sk_status code_of(sk::Errc e) {
  switch (e) {
    case sk::Errc::parameter: return SK_ERR_PARAMETER;
    case sk::Errc::io: return SK_ERR_IO;
    case sk::Errc::dimension: return SK_ERR_DIMENSION;
    case sk::Errc::truncation: return SK_ERR_TRUNCATION;
    case sk::Errc::numeric: return SK_ERR_NUMERIC;
    case sk::Errc::degenerate: return SK_ERR_DEGENERATE;
  }
  return SK_ERR_INTERNAL;
}

sk_status fail(sk_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
sk_status guarded(F&& body) {
  try {
    body();
    return SK_OK;
  } catch (const sk::Error& e) {
    return fail(code_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SK_ERR_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw sk::Error(sk::Errc::parameter, std::string(what) + " is null");
}

sk::LossKind loss_of(sk_loss l, double eps) {
  sk::LossKind k;
  switch (l) {
    case SK_LOSS_CHARBONNIER: k.type = sk::LossType::charbonnier; break;
    case SK_LOSS_L1: k.type = sk::LossType::l1; break;
    case SK_LOSS_L2: k.type = sk::LossType::l2; break;
    default: throw sk::Error(sk::Errc::parameter, "unknown loss");
  }
  k.epsilon = eps;
  return k;
}

sk::WeightNorm norm_of(sk_norm n) {
  switch (n) {
    case SK_NORM_NONE: return sk::WeightNorm::none;
    case SK_NORM_SUM: return sk::WeightNorm::sum;
    case SK_NORM_SOFTMAX: return sk::WeightNorm::softmax;
  }
  throw sk::Error(sk::Errc::parameter, "unknown weight normalization");
}

sk::InitKind init_of(sk_init i) {
  switch (i) {
    case SK_INIT_RAND: return sk::InitKind::random;
    case SK_INIT_IR: return sk::InitKind::radial;
    case SK_INIT_SS: return sk::InitKind::support;
    case SK_INIT_SS_IR: return sk::InitKind::hybrid;
  }
  throw sk::Error(sk::Errc::parameter, "unknown init strategy");
}

sk::TrainConfig train_of(const sk_fit_options& o) {
  sk::TrainConfig cfg;
  cfg.steps = o.steps;
  cfg.lr_start = o.lr_start;
  cfg.lr_end = o.lr_end;
  cfg.seed = o.seed;
  cfg.loss = loss_of(o.loss, o.loss_epsilon);
  cfg.offset_scale = o.offset_scale;
  cfg.constraints.weight_norm = norm_of(o.norm);
  switch (o.symmetry) {
    case SK_SYM_NONE: cfg.constraints.symmetry = sk::Symmetry::none; break;
    case SK_SYM_KWS: cfg.constraints.symmetry = sk::Symmetry::kws; break;
    default: throw sk::Error(sk::Errc::parameter, "unknown symmetry");
  }
  return cfg;
}

sk::PstConfig pst_of(const sk_pst_options& o) {
  sk::PstConfig cfg;
  cfg.chains = o.chains;
  cfg.iterations = o.iterations;
  cfg.t_max = o.t_max;
  cfg.t_min = o.t_min;
  cfg.offset_sigma = o.offset_sigma;
  cfg.weight_sigma = o.weight_sigma;
  cfg.swap_interval = o.swap_interval;
  cfg.seed = o.seed;
  cfg.loss = loss_of(o.loss, o.loss_epsilon);
  cfg.weight_norm = norm_of(o.norm);
  return cfg;
}

template <class Op>
sk_image* per_channel(const sk_image* img, Op&& op) {
  auto out = std::make_unique<sk_image>();
  for (const auto& ch : img->channels) out->channels.push_back(op(ch));
  return out.release();
}

const sk::Image& single_channel(const sk_image* img, const char* what) {
  need(img, what);
  if (img->channels.size() != 1) throw sk::Error(sk::Errc::dimension, std::string(what) + " must have one channel");
  return img->channels.front();
}

void check_same_shape(const sk_image* a, const sk_image* b) {
  if (a->channels.size() != b->channels.size() || !a->channels.front().same_shape(b->channels.front()))
    throw sk::Error(sk::Errc::dimension, "image shapes differ");
}

std::vector<sk::Image> flat_channels(const sk_image* img) { return img->channels; }

}  // namespace

extern "C" {

const char* sk_last_error(void) { return g_last_error.c_str(); }

const char* sk_status_string(sk_status status) {
  switch (status) {
    case SK_OK: return "ok";
    case SK_ERR_PARAMETER: return "parameter error";
    case SK_ERR_IO: return "i/o error";
    case SK_ERR_DIMENSION: return "dimension error";
    case SK_ERR_TRUNCATION: return "truncation error";
    case SK_ERR_NUMERIC: return "numeric error";
    case SK_ERR_DEGENERATE: return "degenerate input";
    case SK_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sk_version(void) { return "0.1.0"; }

sk_status sk_image_create(int width, int height, int channels, sk_image** out) {
  return guarded([&] {
    need(out, "out");
    if (width < 1 || height < 1 || channels < 1) throw sk::Error(sk::Errc::parameter, "image dimensions must be positive");
    auto img = std::make_unique<sk_image>();
    img->channels.assign(static_cast<std::size_t>(channels), sk::Image(width, height));
    *out = img.release();
  });
}

sk_status sk_image_load(const char* path, sk_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto img = std::make_unique<sk_image>();
    img->channels = sk::load_image_channels(path);
    *out = img.release();
  });
}

sk_status sk_image_save(const sk_image* img, const char* path) {
  return guarded([&] {
    need(img, "image");
    need(path, "path");
    sk::save_image(path, flat_channels(img));
  });
}

int sk_image_width(const sk_image* img) { return img ? img->channels.front().width() : 0; }
int sk_image_height(const sk_image* img) { return img ? img->channels.front().height() : 0; }
int sk_image_channels(const sk_image* img) { return img ? static_cast<int>(img->channels.size()) : 0; }

double* sk_image_data(sk_image* img, int channel) {
  if (!img || channel < 0 || channel >= static_cast<int>(img->channels.size())) return nullptr;
  return img->channels[channel].data().data();
}

const double* sk_image_cdata(const sk_image* img, int channel) {
  if (!img || channel < 0 || channel >= static_cast<int>(img->channels.size())) return nullptr;
  return img->channels[channel].data().data();
}

sk_status sk_image_gray(const sk_image* img, sk_image** out) {
  return guarded([&] {
    need(img, "image");
    need(out, "out");
    sk::Image g = img->channels.front();
    for (std::size_t c = 1; c < img->channels.size(); ++c)
      for (std::size_t n = 0; n < g.pixel_count(); ++n) g.data()[n] += img->channels[c].data()[n];
    for (double& v : g.data()) v /= static_cast<double>(img->channels.size());
    auto res = std::make_unique<sk_image>();
    res->channels.push_back(std::move(g));
    *out = res.release();
  });
}

void sk_image_free(sk_image* img) { delete img; }

sk_status sk_kernel_generate(const char* spec, sk_kernel** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    *out = new sk_kernel{sk::generate_kernel(sk::parse_kernel_spec(spec))};
  });
}

sk_status sk_kernel_family(const char* family, double p, sk_kernel** out) {
  return guarded([&] {
    need(family, "family");
    need(out, "out");
    *out = new sk_kernel{sk::generate_kernel(sk::family_member(family, p))};
  });
}

sk_status sk_kernel_load(const char* path, sk_kernel** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sk_kernel{sk::load_kernel_image(path)};
  });
}

sk_status sk_kernel_save(const sk_kernel* k, const char* path) {
  return guarded([&] {
    need(k, "kernel");
    need(path, "path");
    sk::save_kernel_image(k->k, path);
  });
}

int sk_kernel_size(const sk_kernel* k) { return k ? k->k.size() : 0; }
const double* sk_kernel_data(const sk_kernel* k) { return k ? k->k.weights().data() : nullptr; }
double sk_kernel_sum(const sk_kernel* k) { return k ? k->k.sum() : 0.0; }

sk_status sk_kernel_to_image(const sk_kernel* k, sk_image** out) {
  return guarded([&] {
    need(k, "kernel");
    need(out, "out");
    sk::Image img = k->k.to_image();
    const double peak = k->k.peak();
    if (peak > 0.0)
      for (double& v : img.data()) v /= peak;
    auto res = std::make_unique<sk_image>();
    res->channels.push_back(std::move(img));
    *out = res.release();
  });
}

void sk_kernel_free(sk_kernel* k) { delete k; }

sk_status sk_complex_create(int layers, const int* samples_per_layer, const double* ox, const double* oy,
                            const double* w, sk_complex** out) {
  return guarded([&] {
    need(samples_per_layer, "samples_per_layer");
    need(ox, "ox");
    need(oy, "oy");
    need(w, "w");
    need(out, "out");
    if (layers < 1) throw sk::Error(sk::Errc::parameter, "a complex needs at least one layer");
    auto c = std::make_unique<sk_complex>();
    std::size_t n = 0;
    for (int l = 0; l < layers; ++l) {
      if (samples_per_layer[l] < 1) throw sk::Error(sk::Errc::parameter, "every layer needs at least one sample");
      sk::SparseLayer layer;
      for (int i = 0; i < samples_per_layer[l]; ++i, ++n) layer.samples.push_back({{ox[n], oy[n]}, w[n]});
      c->c.layers.push_back(std::move(layer));
    }
    c->c.validate();
    *out = c.release();
  });
}

int sk_complex_layers(const sk_complex* c) { return c ? static_cast<int>(c->c.layers.size()) : 0; }

int sk_complex_layer_samples(const sk_complex* c, int layer) {
  if (!c || layer < 0 || layer >= static_cast<int>(c->c.layers.size())) return 0;
  return static_cast<int>(c->c.layers[layer].samples.size());
}

int sk_complex_total_samples(const sk_complex* c) { return c ? static_cast<int>(c->c.total_samples()) : 0; }

sk_status sk_complex_sample(const sk_complex* c, int layer, int index, double* ox, double* oy, double* w) {
  return guarded([&] {
    need(c, "complex");
    if (layer < 0 || layer >= static_cast<int>(c->c.layers.size()) || index < 0 ||
        index >= static_cast<int>(c->c.layers[layer].samples.size()))
      throw sk::Error(sk::Errc::parameter, "sample index out of range");
    const auto& s = c->c.layers[layer].samples[index];
    if (ox) *ox = s.offset.x;
    if (oy) *oy = s.offset.y;
    if (w) *w = s.weight;
  });
}

sk_status sk_complex_load(const char* path, sk_complex** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sk_complex{sk::load_theta(path)};
  });
}

sk_status sk_complex_save(const sk_complex* c, const char* path) {
  return guarded([&] {
    need(c, "complex");
    need(path, "path");
    sk::save_theta(path, c->c);
  });
}

sk_status sk_complex_impulse_response(const sk_complex* c, int canvas, sk_kernel** out) {
  return guarded([&] {
    need(c, "complex");
    need(out, "out");
    *out = new sk_kernel{sk::synthesize_ir(c->c, canvas)};
  });
}

void sk_complex_free(sk_complex* c) { delete c; }

sk_status sk_filter_dense(const sk_image* img, const sk_kernel* k, sk_image** out) {
  return guarded([&] {
    need(img, "image");
    need(k, "kernel");
    need(out, "out");
    *out = per_channel(img, [&](const sk::Image& ch) { return sk::dense_convolve(ch, k->k); });
  });
}

sk_status sk_filter_sparse(const sk_image* img, const sk_complex* c, sk_image** out) {
  return guarded([&] {
    need(img, "image");
    need(c, "complex");
    need(out, "out");
    *out = per_channel(img, [&](const sk::Image& ch) { return sk::apply_complex(ch, c->c); });
  });
}

sk_status sk_filter_lowrank(const sk_image* img, const sk_lowrank* f, sk_image** out) {
  return guarded([&] {
    need(img, "image");
    need(f, "low-rank filter");
    need(out, "out");
    *out = per_channel(img, [&](const sk::Image& ch) { return sk::lowrank_filter(ch, f->f); });
  });
}

sk_status sk_image_psnr(const sk_image* a, const sk_image* b, double* db) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(db, "db");
    check_same_shape(a, b);
    // Pool all channels into one comparison.
    const auto& fa = a->channels;
    const auto& fb = b->channels;
    const int w = fa.front().width(), h = fa.front().height();
    sk::Image pa(w, h * static_cast<int>(fa.size())), pb(w, h * static_cast<int>(fb.size()));
    for (std::size_t c = 0; c < fa.size(); ++c) {
      std::copy(fa[c].data().begin(), fa[c].data().end(), pa.data().begin() + static_cast<std::ptrdiff_t>(c * fa[c].pixel_count()));
      std::copy(fb[c].data().begin(), fb[c].data().end(), pb.data().begin() + static_cast<std::ptrdiff_t>(c * fb[c].pixel_count()));
    }
    *db = sk::psnr(pa, pb);
  });
}

sk_status sk_image_sse(const sk_image* a, const sk_image* b, double* sse) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(sse, "sse");
    check_same_shape(a, b);
    double acc = 0.0;
    for (std::size_t c = 0; c < a->channels.size(); ++c) acc += sk::sse(a->channels[c], b->channels[c]);
    *sse = acc;
  });
}

sk_status sk_kernel_psnr(const sk_kernel* a, const sk_kernel* b, double* db) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(db, "db");
    *db = sk::kernel_psnr(a->k, b->k);
  });
}

sk_status sk_kernel_sse(const sk_kernel* a, const sk_kernel* b, double* sse) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(sse, "sse");
    *sse = sk::kernel_sse(a->k, b->k);
  });
}

void sk_fit_options_default(sk_fit_options* opts) {
  if (!opts) return;
  const sk::TrainConfig cfg;
  opts->steps = cfg.steps;
  opts->lr_start = cfg.lr_start;
  opts->lr_end = cfg.lr_end;
  opts->seed = cfg.seed;
  opts->loss = SK_LOSS_CHARBONNIER;
  opts->loss_epsilon = cfg.loss.epsilon;
  opts->norm = SK_NORM_SUM;
  opts->symmetry = SK_SYM_NONE;
  opts->init = SK_INIT_SS_IR;
  opts->offset_scale = 0.0;
}

sk_status sk_fit(const sk_kernel* target, const char* layout, const sk_fit_options* opts, sk_fit_result** out) {
  return guarded([&] {
    need(target, "target");
    need(layout, "layout");
    need(out, "out");
    sk_fit_options o;
    sk_fit_options_default(&o);
    if (opts) o = *opts;
    sk::InitStrategy init;
    init.kind = init_of(o.init);
    init.seed = o.seed;
    *out = new sk_fit_result{sk::fit(target->k, sk::parse_layout(layout), init, train_of(o))};
  });
}

sk_status sk_fit_result_complex(const sk_fit_result* r, sk_complex** out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    *out = new sk_complex{r->r.theta};
  });
}

double sk_fit_result_best_loss(const sk_fit_result* r) { return r ? r->r.best_loss : 0.0; }
int sk_fit_result_best_step(const sk_fit_result* r) { return r ? r->r.best_step : 0; }
int sk_fit_result_trace_length(const sk_fit_result* r) { return r ? static_cast<int>(r->r.trace.size()) : 0; }

sk_status sk_fit_result_trace(const sk_fit_result* r, int row, int* step, double* loss, double* lr) {
  return guarded([&] {
    need(r, "result");
    if (row < 0 || row >= static_cast<int>(r->r.trace.size())) throw sk::Error(sk::Errc::parameter, "trace row out of range");
    const auto& t = r->r.trace[row];
    if (step) *step = t.step;
    if (loss) *loss = t.loss;
    if (lr) *lr = t.lr;
  });
}

sk_status sk_fit_result_save_trace(const sk_fit_result* r, const char* path) {
  return guarded([&] {
    need(r, "result");
    need(path, "path");
    sk::save_trace_csv(path, r->r.trace);
  });
}

void sk_fit_result_free(sk_fit_result* r) { delete r; }

void sk_pst_options_default(sk_pst_options* opts) {
  if (!opts) return;
  const sk::PstConfig cfg;
  opts->chains = cfg.chains;
  opts->iterations = cfg.iterations;
  opts->t_max = cfg.t_max;
  opts->t_min = cfg.t_min;
  opts->offset_sigma = cfg.offset_sigma;
  opts->weight_sigma = cfg.weight_sigma;
  opts->swap_interval = cfg.swap_interval;
  opts->seed = cfg.seed;
  opts->loss = SK_LOSS_CHARBONNIER;
  opts->loss_epsilon = cfg.loss.epsilon;
  opts->norm = SK_NORM_SUM;
  opts->init = SK_INIT_SS_IR;
}

sk_status sk_pst(const sk_kernel* target, const char* layout, const sk_pst_options* opts, sk_pst_result** out) {
  return guarded([&] {
    need(target, "target");
    need(layout, "layout");
    need(out, "out");
    sk_pst_options o;
    sk_pst_options_default(&o);
    if (opts) o = *opts;
    sk::InitStrategy init;
    init.kind = init_of(o.init);
    init.seed = o.seed;
    *out = new sk_pst_result{sk::pst_fit(target->k, sk::parse_layout(layout), pst_of(o), init)};
  });
}

sk_status sk_pst_result_complex(const sk_pst_result* r, sk_complex** out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    *out = new sk_complex{r->r.theta};
  });
}

double sk_pst_result_best_energy(const sk_pst_result* r) { return r ? r->r.best_energy : 0.0; }
long sk_pst_result_evaluations(const sk_pst_result* r) { return r ? r->r.evaluations : 0; }

sk_status sk_pst_result_save_trace(const sk_pst_result* r, const char* path) {
  return guarded([&] {
    need(r, "result");
    need(path, "path");
    sk::save_pst_trace_csv(path, r->r.trace);
  });
}

void sk_pst_result_free(sk_pst_result* r) { delete r; }

sk_status sk_lowrank_decompose(const sk_kernel* target, int rank, sk_lowrank** out) {
  return guarded([&] {
    need(target, "target");
    need(out, "out");
    *out = new sk_lowrank{sk::lowrank_decompose(target->k, rank)};
  });
}

int sk_lowrank_rank(const sk_lowrank* f) { return f ? f->f.rank() : 0; }

sk_status sk_lowrank_reconstruct(const sk_lowrank* f, sk_kernel** out) {
  return guarded([&] {
    need(f, "low-rank filter");
    need(out, "out");
    *out = new sk_kernel{f->f.reconstruct()};
  });
}

double sk_lowrank_tail_energy(const sk_lowrank* f) { return f ? f->f.tail_energy() : 0.0; }
void sk_lowrank_free(sk_lowrank* f) { delete f; }

sk_status sk_basis_build(const char* family, const double* params, int count, const char* layout,
                         const sk_fit_options* opts, int warm_start, sk_basis** out) {
  return guarded([&] {
    need(family, "family");
    need(params, "params");
    need(layout, "layout");
    need(out, "out");
    if (count < 1) throw sk::Error(sk::Errc::parameter, "basis needs at least one parameter");
    sk_fit_options o;
    sk_fit_options_default(&o);
    if (opts) o = *opts;
    sk::BasisBuildOptions bo;
    bo.train = train_of(o);
    bo.init.kind = init_of(o.init);
    bo.init.seed = o.seed;
    bo.warm_start = warm_start != 0;
    *out = new sk_basis{sk::build_basis(sk::named_family(family), std::span<const double>(params, count), sk::parse_layout(layout), bo)};
  });
}

sk_status sk_basis_build_pst(const char* family, const double* params, int count, const char* layout,
                             const sk_pst_options* opts, sk_basis** out) {
  return guarded([&] {
    need(family, "family");
    need(params, "params");
    need(layout, "layout");
    need(out, "out");
    if (count < 1) throw sk::Error(sk::Errc::parameter, "basis needs at least one parameter");
    sk_pst_options o;
    sk_pst_options_default(&o);
    if (opts) o = *opts;
    sk::InitStrategy init;
    init.kind = init_of(o.init);
    init.seed = o.seed;
    *out = new sk_basis{sk::build_pst_basis(sk::named_family(family), std::span<const double>(params, count),
                                            sk::parse_layout(layout), pst_of(o), init)};
  });
}

sk_status sk_basis_load(const char* path, sk_basis** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sk_basis{sk::load_basis(path)};
  });
}

sk_status sk_basis_save(const sk_basis* b, const char* path) {
  return guarded([&] {
    need(b, "basis");
    need(path, "path");
    sk::save_basis(path, b->b);
  });
}

int sk_basis_size(const sk_basis* b) { return b ? static_cast<int>(b->b.params.size()) : 0; }

double sk_basis_param(const sk_basis* b, int index) {
  if (!b || index < 0 || index >= static_cast<int>(b->b.params.size())) return 0.0;
  return b->b.params[index];
}

sk_status sk_basis_filter(const sk_basis* b, int index, sk_complex** out) {
  return guarded([&] {
    need(b, "basis");
    need(out, "out");
    if (index < 0 || index >= static_cast<int>(b->b.filters.size())) throw sk::Error(sk::Errc::parameter, "basis index out of range");
    *out = new sk_complex{b->b.filters[index]};
  });
}

void sk_basis_free(sk_basis* b) { delete b; }

sk_status sk_parameter_map_scale(const sk_image* unit_map, double lo, double hi, sk_image** out) {
  return guarded([&] {
    const sk::Image& m = single_channel(unit_map, "parameter map");
    need(out, "out");
    auto res = std::make_unique<sk_image>();
    res->channels.push_back(sk::scale_parameter_map(m, lo, hi));
    *out = res.release();
  });
}

sk_status sk_filter_sv(const sk_image* img, const sk_basis* b, const sk_image* pmap, sk_image** out) {
  return guarded([&] {
    need(img, "image");
    need(b, "basis");
    need(out, "out");
    const sk::Image& p = single_channel(pmap, "parameter map");
    *out = per_channel(img, [&](const sk::Image& ch) { return sk::sv_filter(ch, b->b, p); });
  });
}

sk_status sk_sv_ground_truth(const sk_image* img, const char* family, const sk_image* pmap, sk_image** out) {
  return guarded([&] {
    need(img, "image");
    need(family, "family");
    need(out, "out");
    const sk::Image& p = single_channel(pmap, "parameter map");
    const auto fam = sk::named_family(family);
    *out = per_channel(img, [&](const sk::Image& ch) { return sk::sv_ground_truth(ch, fam, p); });
  });
}

}  // extern "C"
