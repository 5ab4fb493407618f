/* ivp: next-frame video prediction with convolutional and inception LSTMs
 * inside a multi-layer predictive-coding stack.
 *
 * C interface to the shared library. All objects are opaque handles freed
 * with their matching *_free function; every fallible call returns an
 * ivp_status, with a human-readable message available from ivp_last_error()
 * (thread-local, valid until the next library call on that thread).
 */
#ifndef IVP_H
#define IVP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ivp_status {
  IVP_OK = 0,
  IVP_ERR_ARGUMENT = 1, /* null pointer or invalid option value */
  IVP_ERR_SHAPE = 2,    /* tensor/frame dimensions disagree */
  IVP_ERR_FORMAT = 3,   /* malformed IVSQ/IVCK file */
  IVP_ERR_IO = 4,       /* file cannot be read or written */
  IVP_ERR_CONTRACT = 5, /* API misuse (e.g. uninitialized state) */
  IVP_ERR_NUMERIC = 6,  /* diverged training or non-finite values */
  IVP_ERR_VERSION = 7,  /* file version not supported */
  IVP_ERR_CONFIG = 8,   /* invalid model/training configuration */
  IVP_ERR_UNKNOWN = 127
} ivp_status;

const char* ivp_status_name(ivp_status status);
const char* ivp_last_error(void);

typedef struct ivp_sequence ivp_sequence;
typedef struct ivp_model ivp_model;
typedef struct ivp_eval_report ivp_eval_report;

/* ---------------------------------------------------------------- frames */

enum { IVP_SHAPE_SQUARE = 0, IVP_SHAPE_CIRCLE = 1 };
enum { IVP_DTYPE_F32 = 0, IVP_DTYPE_F64 = 1 };

typedef struct ivp_shape_spec {
  int kind;         /* IVP_SHAPE_* */
  int size;         /* bounding box side, pixels */
  double color[3];  /* per-channel value in [0,1] */
  int row, col;     /* top-left position at t = 0 */
  int vel_row, vel_col; /* pixels per frame, not both zero */
} ivp_shape_spec;

typedef struct ivp_scene_spec {
  uint32_t height, width;
  uint32_t channels;    /* 1 or 3 */
  uint32_t frame_count;
  uint64_t seed;
  uint32_t auto_shapes; /* extra shapes drawn deterministically from seed */
  const ivp_shape_spec* shapes; /* optional explicit shapes */
  size_t shape_count;
} ivp_scene_spec;

void ivp_scene_spec_init(ivp_scene_spec* spec); /* 16x16 RGB, 10 frames */

ivp_status ivp_sequence_generate(const ivp_scene_spec* spec, ivp_sequence** out);
ivp_status ivp_sequence_load(const char* path, ivp_sequence** out);
ivp_status ivp_sequence_save(const ivp_sequence* seq, const char* path, int dtype);
void ivp_sequence_free(ivp_sequence* seq);

uint32_t ivp_sequence_frame_count(const ivp_sequence* seq);
uint32_t ivp_sequence_channels(const ivp_sequence* seq);
uint32_t ivp_sequence_height(const ivp_sequence* seq);
uint32_t ivp_sequence_width(const ivp_sequence* seq);

/* Copies frame t (channel-major, row-major) into out[0..len); len must be
 * exactly channels*height*width. */
ivp_status ivp_sequence_copy_frame(const ivp_sequence* seq, uint32_t t, double* out, size_t len);
ivp_status ivp_sequence_write_ppm(const ivp_sequence* seq, uint32_t t, const char* path);

/* ---------------------------------------------------------------- models */

enum { IVP_CELL_CONV = 0, IVP_CELL_INCEPTION_V1 = 1, IVP_CELL_INCEPTION_V2 = 2 };
enum { IVP_PRECISION_F32 = 0, IVP_PRECISION_F64 = 1 };

typedef struct ivp_model_config {
  uint32_t layers;    /* 1..4 */
  int cell_type;      /* IVP_CELL_* for every layer */
  uint64_t seed;
  int precision;      /* IVP_PRECISION_* */
  int candidate_sigmoid; /* nonzero: sigmoid instead of tanh on the candidate gate */
  uint32_t conv_kernel;  /* conv-LSTM gate kernel size, odd, default 3 */
  uint32_t frame_channels; /* default 3 */
  /* Optional per-layer channel plans (layers entries each). Defaults to
   * 3, 48, 96, 192 truncated to the layer count, hidden = input. */
  const uint32_t* input_channels;
  const uint32_t* hidden_channels;
} ivp_model_config;

void ivp_model_config_init(ivp_model_config* cfg);

ivp_status ivp_model_create(const ivp_model_config* cfg, ivp_model** out);
ivp_status ivp_model_load(const char* path, ivp_model** out);
ivp_status ivp_model_save(const ivp_model* model, const char* path);
void ivp_model_free(ivp_model* model);

uint32_t ivp_model_layers(const ivp_model* model);
const char* ivp_model_cell_name(const ivp_model* model); /* "conv", "iv1", "iv2", "mixed" */
uint64_t ivp_model_train_steps(const ivp_model* model);

typedef struct ivp_param_report {
  uint64_t network_total;     /* learnable scalars in the whole network */
  uint64_t cell_total;        /* learnable scalars in this layer's cell */
  uint64_t cell_kernel_elems;
  uint64_t cell_biases;
  uint32_t gate_kernel_coeff; /* kernel taps per gate: 2k^2 / 35 / 28 */
} ivp_param_report;

ivp_status ivp_model_param_report(const ivp_model* model, uint32_t layer, ivp_param_report* out);

/* -------------------------------------------------------------- training */

enum { IVP_LOSS_PIXEL_MSE = 0, IVP_LOSS_LAYER_WEIGHTED = 1 };

typedef struct ivp_train_config {
  double learning_rate;  /* default 1e-3 */
  double adam_beta1;     /* default 0.9 */
  double adam_beta2;     /* default 0.999 */
  double adam_eps;       /* default 1e-8 */
  uint32_t steps;
  uint32_t batch;        /* sequences per step, default 1 */
  uint32_t seq_len;      /* window length T, default 10 */
  uint64_t seed;         /* seeds window sampling on the first train call */
  int loss_mode;         /* IVP_LOSS_* */
  const double* layer_loss_weights; /* for IVP_LOSS_LAYER_WEIGHTED */
  size_t layer_loss_weight_count;
} ivp_train_config;

void ivp_train_config_init(ivp_train_config* cfg);

typedef void (*ivp_loss_fn)(uint64_t step, double loss, void* user);

/* Trains in place, continuing from the model's current optimizer state and
 * step counter. The callback (may be NULL) sees every (step, loss) pair. */
ivp_status ivp_model_train(ivp_model* model, const ivp_sequence* const* data, size_t count,
                           const ivp_train_config* cfg, ivp_loss_fn on_loss, void* user);

/* Rolls the model over `input`, then `extrapolate` further steps feeding its
 * own output back in. Yields frame_count-1+extrapolate predictions;
 * prediction i targets input frame i+1. */
ivp_status ivp_model_predict(const ivp_model* model, const ivp_sequence* input,
                             uint32_t extrapolate, ivp_sequence** out);

/* ------------------------------------------------------------ evaluation */

enum { IVP_METRIC_MAE = 0, IVP_METRIC_MSE = 1, IVP_METRIC_SSIM = 2 };

/* Cuts each sequence into non-overlapping windows of seq_len frames and
 * scores next-frame predictions per history length 1..seq_len-1. Honors the
 * IVP_THREADS environment variable for parallelism across windows. */
ivp_status ivp_model_evaluate(const ivp_model* model, const ivp_sequence* const* data,
                              size_t count, uint32_t seq_len, ivp_eval_report** out);

/* Same scoring for the copy-last-frame baseline. */
ivp_status ivp_baseline_evaluate(const ivp_sequence* const* data, size_t count,
                                 uint32_t seq_len, ivp_eval_report** out);

void ivp_eval_report_free(ivp_eval_report* report);
uint32_t ivp_eval_report_buckets(const ivp_eval_report* report);
int ivp_eval_report_degenerate_ci(const ivp_eval_report* report);
ivp_status ivp_eval_report_stat(const ivp_eval_report* report, uint32_t history_len, int metric,
                                double* mean, double* ci95, uint32_t* n);
ivp_status ivp_eval_report_aggregate(const ivp_eval_report* report, int metric, double* mean);

/* Appends rows "model,source_id,history_len,metric,mean,ci95,n"; writes the
 * header first when write_header is nonzero. */
ivp_status ivp_eval_report_append_csv(const ivp_eval_report* report, const char* path,
                                      const char* model_label, const char* source_label,
                                      int write_header);

#ifdef __cplusplus
}
#endif

#endif /* IVP_H */
