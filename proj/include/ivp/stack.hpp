#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ivp/cells.hpp"
#include "ivp/tensor.hpp"

namespace ivp {

struct LayerConfig {
  int input_channels = 3;   // A channels entering the layer
  int hidden_channels = 3;  // R channels of the recurrent cell
  CellType cell_type = CellType::conv_lstm;
};

struct StackOptions {
  int conv_kernel = 3;            // kernel size of the conv-LSTM gates
  bool candidate_sigmoid = false; // literal sigmoid on the candidate gate
};

/// Channel plan 3, 48, 96, 192 truncated to the layer count.
inline std::vector<LayerConfig> default_layer_plan(int layers, CellType type,
                                                   int frame_channels = 3) {
  static constexpr int plan[4] = {0, 48, 96, 192};
  if (layers < 1 || layers > 4)
    fail(ErrorCode::config, "layer count must be between 1 and 4, got " + std::to_string(layers));
  std::vector<LayerConfig> out;
  for (int l = 0; l < layers; ++l) {
    const int ch = l == 0 ? frame_channels : plan[l];
    out.push_back(LayerConfig{ch, ch, type});
  }
  return out;
}

template <class R>
using CellWeightsT =
    std::variant<ConvLstmWeightsT<R>, InceptionV1WeightsT<R>, InceptionV2WeightsT<R>>;

/// Multi-layer predictive-coding network. Each layer carries a recurrent
/// cell, a 1x1 prediction convolution back to its input channels, and (below
/// the top) a 3x3 convolution + 2x2 max pool lifting its error map to the
/// next layer's input.
template <class R>
struct NetworkT {
  std::vector<LayerConfig> configs;
  StackOptions options;
  std::uint64_t seed = 0;

  std::vector<CellWeightsT<R>> cells;
  std::vector<TensorPtrT<R>> pred_w, pred_b;  // hidden -> input channels, 1x1
  std::vector<TensorPtrT<R>> up_w, up_b;      // 2*input -> next input, 3x3

  int layer_count() const { return static_cast<int>(configs.size()); }
  int frame_channels() const { return configs.empty() ? 0 : configs[0].input_channels; }

  // Channels of the tensor fed to layer l's cell: its own error map plus the
  // upsampled hidden state from above (absent at the top).
  int cell_input_channels(int l) const {
    int ch = 2 * configs[l].input_channels;
    if (l + 1 < layer_count()) ch += configs[l + 1].hidden_channels;
    return ch;
  }

  std::vector<NamedParamT<R>> parameters() const {
    std::vector<NamedParamT<R>> out;
    for (int l = 0; l < layer_count(); ++l) {
      const std::string lp = "layer" + std::to_string(l) + ".";
      std::visit([&](const auto& w) {
        auto ps = w.parameters(lp + "cell.");
        out.insert(out.end(), ps.begin(), ps.end());
      }, cells[l]);
      out.push_back({lp + "pred.w", pred_w[l]});
      out.push_back({lp + "pred.b", pred_b[l]});
      if (l + 1 < layer_count()) {
        out.push_back({lp + "up.w", up_w[l]});
        out.push_back({lp + "up.b", up_b[l]});
      }
    }
    return out;
  }

  std::uint64_t total_params() const {
    std::uint64_t n = 0;
    for (const auto& p : parameters()) n += p.tensor->numel();
    return n;
  }
};

using Network = NetworkT<double>;

template <class R>
NetworkT<R> build_network(const std::vector<LayerConfig>& configs, std::uint64_t seed,
                          const StackOptions& options = {}) {
  if (configs.empty() || configs.size() > 4)
    fail(ErrorCode::config,
         "network needs 1 to 4 layers, got " + std::to_string(configs.size()));
  for (std::size_t l = 0; l < configs.size(); ++l) {
    const auto& cfg = configs[l];
    if (cfg.input_channels < 1 || cfg.hidden_channels < 1)
      fail(ErrorCode::config, "layer " + std::to_string(l) + ": channel counts must be >= 1");
    if (cfg.cell_type != CellType::conv_lstm && cfg.hidden_channels % 3 != 0)
      fail(ErrorCode::config, "layer " + std::to_string(l) + ": inception cells need hidden_channels divisible by 3, got " +
                                  std::to_string(cfg.hidden_channels));
  }

  NetworkT<R> net;
  net.configs = configs;
  net.options = options;
  net.seed = seed;
  std::mt19937_64 rng(seed);

  const int L = net.layer_count();
  for (int l = 0; l < L; ++l) {
    const auto& cfg = configs[l];
    const int ci = net.cell_input_channels(l);
    switch (cfg.cell_type) {
      case CellType::conv_lstm:
        net.cells.push_back(make_conv_lstm<R>(ci, cfg.hidden_channels, options.conv_kernel, rng));
        break;
      case CellType::inception_v1:
        net.cells.push_back(
            make_inception_v1<R>(ci, cfg.hidden_channels / 3, rng, options.candidate_sigmoid));
        break;
      case CellType::inception_v2:
        net.cells.push_back(
            make_inception_v2<R>(ci, cfg.hidden_channels / 3, rng, options.candidate_sigmoid));
        break;
    }
    net.pred_w.push_back(detail::glorot_kernel<R>(cfg.input_channels, cfg.hidden_channels, 1, 1, rng));
    net.pred_b.push_back(detail::bias_vec<R>(cfg.input_channels, 0.0));
    if (l + 1 < L) {
      net.up_w.push_back(detail::glorot_kernel<R>(configs[l + 1].input_channels,
                                                  2 * cfg.input_channels, 3, 3, rng));
      net.up_b.push_back(detail::bias_vec<R>(configs[l + 1].input_channels, 0.0));
    }
  }
  return net;
}

template <class R>
struct LayerStateT {
  CellStateT<R> cell;
  TensorPtrT<R> error;       // rectified split error, 2 * input_channels
  TensorPtrT<R> prediction;  // last emitted prediction for this layer
};

template <class R>
struct NetworkStateT {
  std::vector<LayerStateT<R>> layers;
  bool initialized() const { return !layers.empty(); }
};

using NetworkState = NetworkStateT<double>;

/// Zeroed state for frames of (batch, frame_channels, height, width); spatial
/// dims halve per layer (rounding up, matching the pool).
template <class R>
NetworkStateT<R> init_state(const NetworkT<R>& net, int batch, int height, int width) {
  NetworkStateT<R> st;
  int h = height, w = width;
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto& cfg = net.configs[l];
    LayerStateT<R> ls;
    ls.cell = zero_cell_state<R>(batch, cfg.hidden_channels, h, w);
    ls.error = make_tensor<R>(batch, 2 * cfg.input_channels, h, w);
    ls.prediction = make_tensor<R>(batch, cfg.input_channels, h, w);
    st.layers.push_back(std::move(ls));
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  return st;
}

template <class R>
struct StepResultT {
  TensorPtrT<R> prediction;                      // layer-0 next-frame guess, in [0,1]
  NetworkStateT<R> state;
  std::vector<TensorPtrT<R>> layer_error_mean;   // scalar per layer, on tape
};

namespace detail {

template <class R>
std::pair<TensorPtrT<R>, CellStateT<R>> cell_step(TapeT<R>* tape, const CellWeightsT<R>& w,
                                                  const TensorPtrT<R>& x, const CellStateT<R>& s) {
  return std::visit([&](const auto& ww) {
    using W = std::decay_t<decltype(ww)>;
    if constexpr (std::is_same_v<W, ConvLstmWeightsT<R>>)
      return conv_lstm_step<R>(tape, ww, x, s);
    else if constexpr (std::is_same_v<W, InceptionV1WeightsT<R>>)
      return inception_v1_step<R>(tape, ww, x, s);
    else
      return inception_v2_step<R>(tape, ww, x, s);
  }, w);
}

}  // namespace detail

/// One time step. The recurrent pass runs top-down on the previous errors,
/// the returned prediction is therefore formed before `frame` is consumed;
/// errors and bottom-up targets then update from the new frame.
template <class R>
StepResultT<R> step(TapeT<R>* tape, const NetworkT<R>& net, const NetworkStateT<R>& state,
                    const TensorPtrT<R>& frame) {
  const int L = net.layer_count();
  if (!state.initialized() || static_cast<int>(state.layers.size()) != L)
    fail(ErrorCode::contract, "network state is not initialized for this network");
  if (!frame) fail(ErrorCode::argument, "step: null frame");
  const auto& l0 = state.layers[0];
  if (frame->c != net.frame_channels() || frame->h != l0.error->h || frame->w != l0.error->w ||
      frame->n != l0.error->n)
    fail(ErrorCode::shape, "frame " + frame->shape_str() + " does not match the network state");

  StepResultT<R> res;
  res.state.layers.resize(L);

  // top-down recurrent updates
  for (int l = L - 1; l >= 0; --l) {
    const auto& prev = state.layers[l];
    TensorPtrT<R> x = prev.error;
    if (l + 1 < L) {
      auto fb = upsample_2x(tape, res.state.layers[l + 1].cell.h);
      fb = crop_spatial(tape, fb, prev.error->h, prev.error->w);
      x = concat_channels<R>(tape, {prev.error, fb});
    }
    auto [h, cs] = detail::cell_step(tape, net.cells[l], x, prev.cell);
    res.state.layers[l].cell = cs;
  }

  // predictions, errors, bottom-up targets
  TensorPtrT<R> target = frame;
  for (int l = 0; l < L; ++l) {
    auto& ls = res.state.layers[l];
    auto pred = conv2d(tape, ls.cell.h, net.pred_w[l], net.pred_b[l]);
    if (l == 0) pred = clamp01(tape, pred);
    ls.prediction = pred;
    ls.error = concat_channels<R>(
        tape, {relu(tape, sub(tape, target, pred)), relu(tape, sub(tape, pred, target))});
    res.layer_error_mean.push_back(mean(tape, ls.error));
    if (l + 1 < L)
      target = max_pool_2x2(tape, conv2d(tape, ls.error, net.up_w[l], net.up_b[l]));
  }

  res.prediction = res.state.layers[0].prediction;
  return res;
}

template <class R>
struct RolloutResultT {
  // predictions[t] targets frames[t+1]; entries past the input length are
  // extrapolated from the model's own output
  std::vector<TensorPtrT<R>> predictions;
  std::vector<std::vector<double>> per_step_layer_error;  // one entry per step call
};

template <class R>
RolloutResultT<R> rollout(const NetworkT<R>& net, const std::vector<TensorPtrT<R>>& frames,
                          int extrapolate = 0) {
  if (frames.empty()) fail(ErrorCode::argument, "rollout: empty frame sequence");
  RolloutResultT<R> out;
  auto st = init_state(net, frames[0]->n, frames[0]->h, frames[0]->w);
  TensorPtrT<R> last_pred;
  const int total = static_cast<int>(frames.size()) + extrapolate;
  for (int t = 0; t < total; ++t) {
    const TensorPtrT<R> input = t < static_cast<int>(frames.size()) ? frames[t] : last_pred;
    auto res = step<R>(nullptr, net, st, input);
    st = std::move(res.state);
    last_pred = res.prediction;
    if (t >= 1) out.predictions.push_back(res.prediction);
    std::vector<double> errs;
    errs.reserve(res.layer_error_mean.size());
    for (const auto& e : res.layer_error_mean) errs.push_back(static_cast<double>(e->data[0]));
    out.per_step_layer_error.push_back(std::move(errs));
  }
  return out;
}

}  // namespace ivp
