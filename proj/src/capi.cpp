#include "ivp.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <variant>
#include <vector>

#include "ivp/checkpoint.hpp"
#include "ivp/datasets.hpp"
#include "ivp/metrics.hpp"
#include "ivp/stack.hpp"
#include "ivp/training.hpp"

struct ivp_sequence {
  ivp::FrameSequence seq;
};

struct ivp_model {
  std::variant<ivp::ModelT<double>, ivp::ModelT<float>> impl;
};

struct ivp_eval_report {
  ivp::EvalReport rep;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

ivp_status status_from(const ivp::Error& e) {
  switch (e.code()) {
    case ivp::ErrorCode::argument: return IVP_ERR_ARGUMENT;
    case ivp::ErrorCode::shape: return IVP_ERR_SHAPE;
    case ivp::ErrorCode::format: return IVP_ERR_FORMAT;
    case ivp::ErrorCode::io: return IVP_ERR_IO;
    case ivp::ErrorCode::contract: return IVP_ERR_CONTRACT;
    case ivp::ErrorCode::numeric: return IVP_ERR_NUMERIC;
    case ivp::ErrorCode::version: return IVP_ERR_VERSION;
    case ivp::ErrorCode::config: return IVP_ERR_CONFIG;
  }
  return IVP_ERR_UNKNOWN;
}

template <class Fn>
ivp_status guarded(Fn&& fn) {
  try {
    fn();
    return IVP_OK;
  } catch (const ivp::Error& e) {
    set_error(e.what());
    return status_from(e);
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return IVP_ERR_UNKNOWN;
  } catch (const std::exception& e) {
    set_error(e.what());
    return IVP_ERR_UNKNOWN;
  } catch (...) {
    set_error("unknown error");
    return IVP_ERR_UNKNOWN;
  }
}

ivp_status arg_error(const char* msg) {
  set_error(msg);
  return IVP_ERR_ARGUMENT;
}

std::vector<ivp::FrameSequence> gather(const ivp_sequence* const* data, size_t count) {
  if (!data) ivp::fail(ivp::ErrorCode::argument, "null sequence array");
  std::vector<ivp::FrameSequence> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (!data[i]) ivp::fail(ivp::ErrorCode::argument, "null sequence in array");
    out.push_back(data[i]->seq);
  }
  return out;
}

std::vector<ivp::FrameSequence> window_all(const std::vector<ivp::FrameSequence>& seqs,
                                           uint32_t seq_len) {
  std::vector<ivp::FrameSequence> out;
  for (const auto& s : seqs) {
    auto w = ivp::windows(s, static_cast<int>(seq_len), static_cast<int>(seq_len));
    out.insert(out.end(), w.begin(), w.end());
  }
  if (out.empty())
    ivp::fail(ivp::ErrorCode::argument,
              "no evaluation windows of length " + std::to_string(seq_len));
  return out;
}

template <class R>
ivp::FrameSequence predict_impl(const ivp::ModelT<R>& model, const ivp::FrameSequence& input,
                                uint32_t extrapolate) {
  std::vector<ivp::TensorPtrT<R>> frames;
  frames.reserve(input.frames.size());
  for (const auto& f : input.frames) frames.push_back(ivp::cast_tensor<R>(f));
  auto ro = ivp::rollout<R>(model.net, frames, static_cast<int>(extrapolate));
  ivp::FrameSequence out;
  out.source_id = input.source_id;
  out.frames.reserve(ro.predictions.size());
  for (const auto& p : ro.predictions) out.frames.push_back(ivp::cast_tensor<double>(p));
  return out;
}

template <class R>
ivp::EvalReport evaluate_impl(const ivp::ModelT<R>& model,
                              const std::vector<ivp::FrameSequence>& windows, uint32_t seq_len) {
  ivp::Predictor predictor = [&model](const ivp::FrameSequence& head) {
    return predict_impl<R>(model, head, 0);
  };
  return ivp::evaluate_history_curve(predictor, windows, static_cast<int>(seq_len));
}

ivp::CellType to_cell_type(int v) {
  if (v < 0 || v > 2)
    ivp::fail(ivp::ErrorCode::config, "unknown cell type " + std::to_string(v));
  return static_cast<ivp::CellType>(v);
}

ivp::TrainConfig to_train_config(const ivp_train_config& c, ivp::Precision precision) {
  ivp::TrainConfig cfg;
  cfg.learning_rate = c.learning_rate;
  cfg.adam_beta1 = c.adam_beta1;
  cfg.adam_beta2 = c.adam_beta2;
  cfg.adam_eps = c.adam_eps;
  cfg.steps = c.steps;
  cfg.batch = c.batch;
  cfg.seq_len = c.seq_len;
  cfg.seed = c.seed;
  if (c.loss_mode < 0 || c.loss_mode > 1)
    ivp::fail(ivp::ErrorCode::config, "unknown loss mode " + std::to_string(c.loss_mode));
  cfg.loss_mode = static_cast<ivp::LossMode>(c.loss_mode);
  if (c.layer_loss_weights && c.layer_loss_weight_count > 0)
    cfg.layer_loss_weights.assign(c.layer_loss_weights,
                                  c.layer_loss_weights + c.layer_loss_weight_count);
  cfg.precision = precision;
  return cfg;
}

}  // namespace

extern "C" {

const char* ivp_status_name(ivp_status status) {
  switch (status) {
    case IVP_OK: return "ok";
    case IVP_ERR_ARGUMENT: return "argument";
    case IVP_ERR_SHAPE: return "shape";
    case IVP_ERR_FORMAT: return "format";
    case IVP_ERR_IO: return "io";
    case IVP_ERR_CONTRACT: return "contract";
    case IVP_ERR_NUMERIC: return "numeric";
    case IVP_ERR_VERSION: return "version";
    case IVP_ERR_CONFIG: return "config";
    case IVP_ERR_UNKNOWN: break;
  }
  return "unknown";
}

const char* ivp_last_error(void) { return g_last_error.c_str(); }

/* ---------------------------------------------------------------- frames */

void ivp_scene_spec_init(ivp_scene_spec* spec) {
  if (!spec) return;
  std::memset(spec, 0, sizeof(*spec));
  spec->height = 16;
  spec->width = 16;
  spec->channels = 3;
  spec->frame_count = 10;
  spec->auto_shapes = 1;
}

ivp_status ivp_sequence_generate(const ivp_scene_spec* spec, ivp_sequence** out) {
  if (!spec || !out) return arg_error("ivp_sequence_generate: null argument");
  return guarded([&]() {
    ivp::SyntheticSceneSpec s;
    s.height = static_cast<int>(spec->height);
    s.width = static_cast<int>(spec->width);
    s.channels = static_cast<int>(spec->channels);
    s.frame_count = static_cast<int>(spec->frame_count);
    s.seed = spec->seed;
    s.auto_shapes = static_cast<int>(spec->auto_shapes);
    for (size_t i = 0; i < spec->shape_count; ++i) {
      if (!spec->shapes) ivp::fail(ivp::ErrorCode::argument, "shape_count without shapes");
      const auto& in = spec->shapes[i];
      ivp::ShapeSpec sh;
      sh.kind = in.kind == IVP_SHAPE_CIRCLE ? ivp::ShapeKind::circle : ivp::ShapeKind::square;
      sh.size = in.size;
      sh.color = {in.color[0], in.color[1], in.color[2]};
      sh.row = in.row;
      sh.col = in.col;
      sh.vel_row = in.vel_row;
      sh.vel_col = in.vel_col;
      s.shapes.push_back(sh);
    }
    *out = new ivp_sequence{ivp::generate(s)};
  });
}

ivp_status ivp_sequence_load(const char* path, ivp_sequence** out) {
  if (!path || !out) return arg_error("ivp_sequence_load: null argument");
  return guarded([&]() { *out = new ivp_sequence{ivp::load_sequence(path)}; });
}

ivp_status ivp_sequence_save(const ivp_sequence* seq, const char* path, int dtype) {
  if (!seq || !path) return arg_error("ivp_sequence_save: null argument");
  if (dtype != IVP_DTYPE_F32 && dtype != IVP_DTYPE_F64)
    return arg_error("ivp_sequence_save: bad dtype");
  return guarded([&]() { ivp::save_sequence(seq->seq, path, static_cast<ivp::Dtype>(dtype)); });
}

void ivp_sequence_free(ivp_sequence* seq) { delete seq; }

uint32_t ivp_sequence_frame_count(const ivp_sequence* seq) {
  return seq ? static_cast<uint32_t>(seq->seq.length()) : 0;
}
uint32_t ivp_sequence_channels(const ivp_sequence* seq) {
  return seq ? static_cast<uint32_t>(seq->seq.channels()) : 0;
}
uint32_t ivp_sequence_height(const ivp_sequence* seq) {
  return seq ? static_cast<uint32_t>(seq->seq.height()) : 0;
}
uint32_t ivp_sequence_width(const ivp_sequence* seq) {
  return seq ? static_cast<uint32_t>(seq->seq.width()) : 0;
}

ivp_status ivp_sequence_copy_frame(const ivp_sequence* seq, uint32_t t, double* out, size_t len) {
  if (!seq || !out) return arg_error("ivp_sequence_copy_frame: null argument");
  return guarded([&]() {
    if (t >= seq->seq.frames.size())
      ivp::fail(ivp::ErrorCode::argument, "frame index " + std::to_string(t) + " out of range");
    const auto& f = seq->seq.frames[t];
    if (len != f->numel())
      ivp::fail(ivp::ErrorCode::shape, "buffer length " + std::to_string(len) +
                                           " does not match frame size " + std::to_string(f->numel()));
    std::memcpy(out, f->data.data(), len * sizeof(double));
  });
}

ivp_status ivp_sequence_write_ppm(const ivp_sequence* seq, uint32_t t, const char* path) {
  if (!seq || !path) return arg_error("ivp_sequence_write_ppm: null argument");
  return guarded([&]() {
    if (t >= seq->seq.frames.size())
      ivp::fail(ivp::ErrorCode::argument, "frame index " + std::to_string(t) + " out of range");
    ivp::write_ppm(seq->seq.frames[t], path);
  });
}

/* ---------------------------------------------------------------- models */

void ivp_model_config_init(ivp_model_config* cfg) {
  if (!cfg) return;
  std::memset(cfg, 0, sizeof(*cfg));
  cfg->layers = 2;
  cfg->cell_type = IVP_CELL_CONV;
  cfg->precision = IVP_PRECISION_F64;
  cfg->conv_kernel = 3;
  cfg->frame_channels = 3;
}

ivp_status ivp_model_create(const ivp_model_config* cfg, ivp_model** out) {
  if (!cfg || !out) return arg_error("ivp_model_create: null argument");
  return guarded([&]() {
    const auto type = to_cell_type(cfg->cell_type);
    std::vector<ivp::LayerConfig> plan = ivp::default_layer_plan(
        static_cast<int>(cfg->layers), type,
        cfg->frame_channels ? static_cast<int>(cfg->frame_channels) : 3);
    for (uint32_t l = 0; l < cfg->layers; ++l) {
      if (cfg->input_channels) plan[l].input_channels = static_cast<int>(cfg->input_channels[l]);
      if (cfg->hidden_channels) plan[l].hidden_channels = static_cast<int>(cfg->hidden_channels[l]);
    }
    ivp::StackOptions options;
    options.conv_kernel = cfg->conv_kernel ? static_cast<int>(cfg->conv_kernel) : 3;
    options.candidate_sigmoid = cfg->candidate_sigmoid != 0;

    auto handle = std::make_unique<ivp_model>();
    if (cfg->precision == IVP_PRECISION_F32) {
      ivp::ModelT<float> m;
      m.net = ivp::build_network<float>(plan, cfg->seed, options);
      handle->impl = std::move(m);
    } else if (cfg->precision == IVP_PRECISION_F64) {
      ivp::ModelT<double> m;
      m.net = ivp::build_network<double>(plan, cfg->seed, options);
      handle->impl = std::move(m);
    } else {
      ivp::fail(ivp::ErrorCode::config, "unknown precision " + std::to_string(cfg->precision));
    }
    *out = handle.release();
  });
}

ivp_status ivp_model_load(const char* path, ivp_model** out) {
  if (!path || !out) return arg_error("ivp_model_load: null argument");
  return guarded([&]() {
    auto handle = std::make_unique<ivp_model>();
    if (ivp::peek_checkpoint_precision(path) == ivp::Precision::f32)
      handle->impl = ivp::load_checkpoint<float>(path);
    else
      handle->impl = ivp::load_checkpoint<double>(path);
    *out = handle.release();
  });
}

ivp_status ivp_model_save(const ivp_model* model, const char* path) {
  if (!model || !path) return arg_error("ivp_model_save: null argument");
  return guarded([&]() {
    std::visit([&](const auto& m) { ivp::save_checkpoint(m, path); }, model->impl);
  });
}

void ivp_model_free(ivp_model* model) { delete model; }

uint32_t ivp_model_layers(const ivp_model* model) {
  if (!model) return 0;
  return std::visit([](const auto& m) { return static_cast<uint32_t>(m.net.layer_count()); },
                    model->impl);
}

const char* ivp_model_cell_name(const ivp_model* model) {
  if (!model) return "?";
  return std::visit([](const auto& m) {
    const auto& cfgs = m.net.configs;
    for (const auto& c : cfgs)
      if (c.cell_type != cfgs[0].cell_type) return "mixed";
    return ivp::cell_type_name(cfgs[0].cell_type);
  }, model->impl);
}

uint64_t ivp_model_train_steps(const ivp_model* model) {
  if (!model) return 0;
  return std::visit([](const auto& m) { return m.step; }, model->impl);
}

ivp_status ivp_model_param_report(const ivp_model* model, uint32_t layer, ivp_param_report* out) {
  if (!model || !out) return arg_error("ivp_model_param_report: null argument");
  return guarded([&]() {
    std::visit([&](const auto& m) {
      if (layer >= m.net.cells.size())
        ivp::fail(ivp::ErrorCode::argument, "layer " + std::to_string(layer) + " out of range");
      const auto breakdown = std::visit([](const auto& w) { return ivp::param_count(w); },
                                        m.net.cells[layer]);
      out->network_total = m.net.total_params();
      out->cell_total = breakdown.total;
      out->cell_kernel_elems = breakdown.kernel_elems;
      out->cell_biases = breakdown.biases;
      out->gate_kernel_coeff = breakdown.per_gate_kernel_coeff;
    }, model->impl);
  });
}

/* -------------------------------------------------------------- training */

void ivp_train_config_init(ivp_train_config* cfg) {
  if (!cfg) return;
  std::memset(cfg, 0, sizeof(*cfg));
  cfg->learning_rate = 1e-3;
  cfg->adam_beta1 = 0.9;
  cfg->adam_beta2 = 0.999;
  cfg->adam_eps = 1e-8;
  cfg->batch = 1;
  cfg->seq_len = 10;
  cfg->loss_mode = IVP_LOSS_PIXEL_MSE;
}

ivp_status ivp_model_train(ivp_model* model, const ivp_sequence* const* data, size_t count,
                           const ivp_train_config* cfg, ivp_loss_fn on_loss, void* user) {
  if (!model || !cfg) return arg_error("ivp_model_train: null argument");
  return guarded([&]() {
    auto seqs = gather(data, count);
    ivp::LossCallback callback;
    if (on_loss)
      callback = [on_loss, user](std::uint64_t step, double loss) { on_loss(step, loss, user); };
    std::visit([&](auto& m) {
      using R = typename std::decay_t<decltype(m)>::Real;
      ivp::train<R>(m, seqs, to_train_config(*cfg, ivp::detail::precision_of<R>()), callback);
    }, model->impl);
  });
}

ivp_status ivp_model_predict(const ivp_model* model, const ivp_sequence* input,
                             uint32_t extrapolate, ivp_sequence** out) {
  if (!model || !input || !out) return arg_error("ivp_model_predict: null argument");
  return guarded([&]() {
    auto result = std::visit([&](const auto& m) {
      return predict_impl(m, input->seq, extrapolate);
    }, model->impl);
    *out = new ivp_sequence{std::move(result)};
  });
}

/* ------------------------------------------------------------ evaluation */

ivp_status ivp_model_evaluate(const ivp_model* model, const ivp_sequence* const* data,
                              size_t count, uint32_t seq_len, ivp_eval_report** out) {
  if (!model || !out) return arg_error("ivp_model_evaluate: null argument");
  return guarded([&]() {
    auto wins = window_all(gather(data, count), seq_len);
    auto rep = std::visit([&](const auto& m) { return evaluate_impl(m, wins, seq_len); },
                          model->impl);
    *out = new ivp_eval_report{std::move(rep)};
  });
}

ivp_status ivp_baseline_evaluate(const ivp_sequence* const* data, size_t count,
                                 uint32_t seq_len, ivp_eval_report** out) {
  if (!out) return arg_error("ivp_baseline_evaluate: null argument");
  return guarded([&]() {
    auto wins = window_all(gather(data, count), seq_len);
    ivp::Predictor base = [](const ivp::FrameSequence& head) {
      return ivp::baseline_copy_last(head);
    };
    *out = new ivp_eval_report{
        ivp::evaluate_history_curve(base, wins, static_cast<int>(seq_len))};
  });
}

void ivp_eval_report_free(ivp_eval_report* report) { delete report; }

uint32_t ivp_eval_report_buckets(const ivp_eval_report* report) {
  return report ? static_cast<uint32_t>(report->rep.buckets.size()) : 0;
}

int ivp_eval_report_degenerate_ci(const ivp_eval_report* report) {
  return report && report->rep.degenerate_ci ? 1 : 0;
}

ivp_status ivp_eval_report_stat(const ivp_eval_report* report, uint32_t history_len, int metric,
                                double* mean, double* ci95, uint32_t* n) {
  if (!report) return arg_error("ivp_eval_report_stat: null report");
  return guarded([&]() {
    if (metric < 0 || metric >= ivp::kMetricCount)
      ivp::fail(ivp::ErrorCode::argument, "unknown metric " + std::to_string(metric));
    if (history_len < 1 || history_len > report->rep.buckets.size())
      ivp::fail(ivp::ErrorCode::argument, "history length out of range");
    const auto& st = report->rep.buckets[history_len - 1][metric];
    if (mean) *mean = st.mean;
    if (ci95) *ci95 = st.ci95;
    if (n) *n = static_cast<uint32_t>(st.n);
  });
}

ivp_status ivp_eval_report_aggregate(const ivp_eval_report* report, int metric, double* mean) {
  if (!report || !mean) return arg_error("ivp_eval_report_aggregate: null argument");
  return guarded([&]() {
    if (metric < 0 || metric >= ivp::kMetricCount)
      ivp::fail(ivp::ErrorCode::argument, "unknown metric " + std::to_string(metric));
    *mean = report->rep.aggregate[metric];
  });
}

ivp_status ivp_eval_report_append_csv(const ivp_eval_report* report, const char* path,
                                      const char* model_label, const char* source_label,
                                      int write_header) {
  if (!report || !path || !model_label || !source_label)
    return arg_error("ivp_eval_report_append_csv: null argument");
  return guarded([&]() {
    std::ofstream f(path, write_header ? std::ios::trunc : std::ios::app);
    if (!f) ivp::fail(ivp::ErrorCode::io, std::string("cannot open '") + path + "' for writing");
    ivp::write_report_csv_labeled(report->rep, f, model_label, source_label, write_header != 0);
    if (!f) ivp::fail(ivp::ErrorCode::io, std::string("write to '") + path + "' failed");
  });
}

}  // extern "C"
