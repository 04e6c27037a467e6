/* C interface to the sparsekern library.
 *
 * Every handle is opaque and owned by the caller; release it with the
 * matching *_free function (NULL is accepted). Functions return an
 * sk_status; on failure sk_last_error() holds a message for the calling
 * thread until its next failing call. Output handles are only written on
 * success. */
#ifndef SPARSEKERN_H
#define SPARSEKERN_H

#include <stddef.h>
#include <stdint.h>

#if defined(SPARSEKERN_BUILDING)
#define SK_API __attribute__((visibility("default")))
#else
#define SK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sk_status {
  SK_OK = 0,
  SK_ERR_PARAMETER = 1,
  SK_ERR_IO = 2,
  SK_ERR_DIMENSION = 3,
  SK_ERR_TRUNCATION = 4,
  SK_ERR_NUMERIC = 5,
  SK_ERR_DEGENERATE = 6,
  SK_ERR_INTERNAL = 7
} sk_status;

typedef enum sk_loss { SK_LOSS_CHARBONNIER = 0, SK_LOSS_L1 = 1, SK_LOSS_L2 = 2 } sk_loss;
typedef enum sk_norm { SK_NORM_NONE = 0, SK_NORM_SUM = 1, SK_NORM_SOFTMAX = 2 } sk_norm;
typedef enum sk_symmetry { SK_SYM_NONE = 0, SK_SYM_KWS = 1 } sk_symmetry;
typedef enum sk_init { SK_INIT_RAND = 0, SK_INIT_IR = 1, SK_INIT_SS = 2, SK_INIT_SS_IR = 3 } sk_init;

typedef struct sk_image sk_image;       /* one or more channels of doubles */
typedef struct sk_kernel sk_kernel;     /* odd, square dense kernel */
typedef struct sk_complex sk_complex;   /* chain of sparse layers */
typedef struct sk_fit_result sk_fit_result;
typedef struct sk_pst_result sk_pst_result;
typedef struct sk_lowrank sk_lowrank;
typedef struct sk_basis sk_basis;       /* one-parameter sparse filter basis */

SK_API const char* sk_last_error(void);
SK_API const char* sk_status_string(sk_status status);
SK_API const char* sk_version(void);

/* Images. Pixel (x, y) of channel c is data(c)[y * width + x]. */
SK_API sk_status sk_image_create(int width, int height, int channels, sk_image** out);
/* PGM/PPM (P2, P3, P5, P6), values scaled to [0, 1]. */
SK_API sk_status sk_image_load(const char* path, sk_image** out);
/* 16-bit P5 for one channel, P6 for three; values clamped to [0, 1]. */
SK_API sk_status sk_image_save(const sk_image* img, const char* path);
SK_API int sk_image_width(const sk_image* img);
SK_API int sk_image_height(const sk_image* img);
SK_API int sk_image_channels(const sk_image* img);
SK_API double* sk_image_data(sk_image* img, int channel);
SK_API const double* sk_image_cdata(const sk_image* img, int channel);
/* Channel average as a one-channel image. */
SK_API sk_status sk_image_gray(const sk_image* img, sk_image** out);
SK_API void sk_image_free(sk_image* img);

/* Kernels. Entry (i, j), i along x, j along y, both in [-r, r], sits at
 * data[(j + r) * size + (i + r)]. */
SK_API sk_status sk_kernel_generate(const char* spec, sk_kernel** out);
/* Member of a named family ("gaussian", "disk", "ring", "polygon:N",
 * "star:N", "heart") at parameter p. */
SK_API sk_status sk_kernel_family(const char* family, double p, sk_kernel** out);
SK_API sk_status sk_kernel_load(const char* path, sk_kernel** out);
SK_API sk_status sk_kernel_save(const sk_kernel* k, const char* path);
SK_API int sk_kernel_size(const sk_kernel* k);
SK_API const double* sk_kernel_data(const sk_kernel* k);
SK_API double sk_kernel_sum(const sk_kernel* k);
/* Square one-channel image scaled so the peak is 1. */
SK_API sk_status sk_kernel_to_image(const sk_kernel* k, sk_image** out);
SK_API void sk_kernel_free(sk_kernel* k);

/* Sparse complexes. Samples are given layer after layer. */
SK_API sk_status sk_complex_create(int layers, const int* samples_per_layer, const double* ox, const double* oy,
                                   const double* w, sk_complex** out);
SK_API int sk_complex_layers(const sk_complex* c);
SK_API int sk_complex_layer_samples(const sk_complex* c, int layer);
SK_API int sk_complex_total_samples(const sk_complex* c);
SK_API sk_status sk_complex_sample(const sk_complex* c, int layer, int index, double* ox, double* oy, double* w);
SK_API sk_status sk_complex_load(const char* path, sk_complex** out);
SK_API sk_status sk_complex_save(const sk_complex* c, const char* path);
/* canvas 0 picks a size that holds the whole support. */
SK_API sk_status sk_complex_impulse_response(const sk_complex* c, int canvas, sk_kernel** out);
SK_API void sk_complex_free(sk_complex* c);

/* Filtering, channel by channel, zero padding at the borders. */
SK_API sk_status sk_filter_dense(const sk_image* img, const sk_kernel* k, sk_image** out);
SK_API sk_status sk_filter_sparse(const sk_image* img, const sk_complex* c, sk_image** out);
SK_API sk_status sk_filter_lowrank(const sk_image* img, const sk_lowrank* f, sk_image** out);

/* Metrics. Images are compared channel-wise; peak is max(|a|, 1). */
SK_API sk_status sk_image_psnr(const sk_image* a, const sk_image* b, double* db);
SK_API sk_status sk_image_sse(const sk_image* a, const sk_image* b, double* sse);
SK_API sk_status sk_kernel_psnr(const sk_kernel* a, const sk_kernel* b, double* db);
SK_API sk_status sk_kernel_sse(const sk_kernel* a, const sk_kernel* b, double* sse);

/* Gradient fit. */
typedef struct sk_fit_options {
  int steps;
  double lr_start;
  double lr_end;
  uint64_t seed;
  sk_loss loss;
  double loss_epsilon;
  sk_norm norm;
  sk_symmetry symmetry;
  sk_init init;
  double offset_scale; /* 0 = automatic */
} sk_fit_options;

SK_API void sk_fit_options_default(sk_fit_options* opts);
/* layout is "LxN", e.g. "12x4". */
SK_API sk_status sk_fit(const sk_kernel* target, const char* layout, const sk_fit_options* opts, sk_fit_result** out);
SK_API sk_status sk_fit_result_complex(const sk_fit_result* r, sk_complex** out);
SK_API double sk_fit_result_best_loss(const sk_fit_result* r);
SK_API int sk_fit_result_best_step(const sk_fit_result* r);
SK_API int sk_fit_result_trace_length(const sk_fit_result* r);
SK_API sk_status sk_fit_result_trace(const sk_fit_result* r, int row, int* step, double* loss, double* lr);
/* CSV step,loss,lr */
SK_API sk_status sk_fit_result_save_trace(const sk_fit_result* r, const char* path);
SK_API void sk_fit_result_free(sk_fit_result* r);

/* Parallel tempering baseline. */
typedef struct sk_pst_options {
  int chains;
  int iterations;
  double t_max; /* t_max = t_min = 0 picks a ladder from the initial energy */
  double t_min;
  double offset_sigma; /* 0 = 5% of the target size */
  double weight_sigma;
  int swap_interval;
  uint64_t seed;
  sk_loss loss;
  double loss_epsilon;
  sk_norm norm; /* none or sum */
  sk_init init;
} sk_pst_options;

SK_API void sk_pst_options_default(sk_pst_options* opts);
SK_API sk_status sk_pst(const sk_kernel* target, const char* layout, const sk_pst_options* opts, sk_pst_result** out);
SK_API sk_status sk_pst_result_complex(const sk_pst_result* r, sk_complex** out);
SK_API double sk_pst_result_best_energy(const sk_pst_result* r);
SK_API long sk_pst_result_evaluations(const sk_pst_result* r);
/* CSV iter,best_energy,chain_0,... */
SK_API sk_status sk_pst_result_save_trace(const sk_pst_result* r, const char* path);
SK_API void sk_pst_result_free(sk_pst_result* r);

/* Low-rank separable baseline. */
SK_API sk_status sk_lowrank_decompose(const sk_kernel* target, int rank, sk_lowrank** out);
SK_API int sk_lowrank_rank(const sk_lowrank* f);
SK_API sk_status sk_lowrank_reconstruct(const sk_lowrank* f, sk_kernel** out);
/* Frobenius norm of the discarded singular values. */
SK_API double sk_lowrank_tail_energy(const sk_lowrank* f);
SK_API void sk_lowrank_free(sk_lowrank* f);

/* Spatially varying filtering. */
SK_API sk_status sk_basis_build(const char* family, const double* params, int count, const char* layout,
                                const sk_fit_options* opts, int warm_start, sk_basis** out);
SK_API sk_status sk_basis_build_pst(const char* family, const double* params, int count, const char* layout,
                                    const sk_pst_options* opts, sk_basis** out);
SK_API sk_status sk_basis_load(const char* path, sk_basis** out);
SK_API sk_status sk_basis_save(const sk_basis* b, const char* path);
SK_API int sk_basis_size(const sk_basis* b);
SK_API double sk_basis_param(const sk_basis* b, int index);
SK_API sk_status sk_basis_filter(const sk_basis* b, int index, sk_complex** out);
SK_API void sk_basis_free(sk_basis* b);

/* Rescales a one-channel map from [0, 1] onto [lo, hi]. */
SK_API sk_status sk_parameter_map_scale(const sk_image* unit_map, double lo, double hi, sk_image** out);
/* pmap holds parameter values (one channel, image-sized). */
SK_API sk_status sk_filter_sv(const sk_image* img, const sk_basis* b, const sk_image* pmap, sk_image** out);
/* Per-pixel dense reference for a named family. */
SK_API sk_status sk_sv_ground_truth(const sk_image* img, const char* family, const sk_image* pmap, sk_image** out);

#ifdef __cplusplus
}
#endif

#endif /* SPARSEKERN_H */
