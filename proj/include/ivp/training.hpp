#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ivp/datasets.hpp"
#include "ivp/stack.hpp"
#include "ivp/tensor.hpp"

namespace ivp {

enum class Precision : int { f32 = 0, f64 = 1 };
enum class LossMode : int { pixel_mse = 0, layer_weighted_error = 1 };

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint32_t steps = 0;
  std::uint32_t batch = 1;              // sequences per step
  std::uint32_t seq_len = 10;           // T
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::pixel_mse;
  std::vector<double> layer_loss_weights = {1.0, 0.1, 0.1, 0.1};
  Precision precision = Precision::f64;
};

template <class R>
struct AdamStateT {
  std::vector<std::vector<R>> m, v;
  bool initialized() const { return !m.empty(); }
};

/// A network plus everything needed to continue training it: optimizer
/// moments, the step counter, and the window-sampling RNG.
template <class R>
struct ModelT {
  using Real = R;
  NetworkT<R> net;
  AdamStateT<R> opt;
  std::uint64_t step = 0;
  std::mt19937_64 rng;
  bool rng_seeded = false;
};

using Model = ModelT<double>;

using LossCallback = std::function<void(std::uint64_t step, double loss)>;

namespace detail {

template <class R>
void validate_train_config(const TrainConfig& cfg, const NetworkT<R>& net) {
  if (cfg.learning_rate < 0.0) fail(ErrorCode::config, "learning_rate must be >= 0");
  if (cfg.seq_len < 2) fail(ErrorCode::config, "sequence length must be >= 2");
  if (cfg.batch < 1) fail(ErrorCode::config, "batch must be >= 1");
  if (cfg.adam_beta1 < 0 || cfg.adam_beta1 >= 1 || cfg.adam_beta2 < 0 || cfg.adam_beta2 >= 1)
    fail(ErrorCode::config, "adam betas must lie in [0,1)");
  if (cfg.adam_eps <= 0) fail(ErrorCode::config, "adam_eps must be > 0");
  if (cfg.loss_mode == LossMode::layer_weighted_error) {
    if (cfg.layer_loss_weights.size() < static_cast<std::size_t>(net.layer_count()))
      fail(ErrorCode::config, "layer_loss_weights must cover every layer");
    for (double w : cfg.layer_loss_weights)
      if (w < 0) fail(ErrorCode::config, "layer_loss_weights must be nonnegative");
  }
}

}  // namespace detail

/// One Adam update over `params` from their current gradients. `step` is the
/// 1-based update count used for bias correction.
template <class R>
void adam_update(const std::vector<NamedParamT<R>>& params, AdamStateT<R>& opt,
                 const TrainConfig& cfg, std::uint64_t step) {
  const double t_step = static_cast<double>(step);
  const R bc1 = static_cast<R>(1.0 - std::pow(cfg.adam_beta1, t_step));
  const R bc2 = static_cast<R>(1.0 - std::pow(cfg.adam_beta2, t_step));
  const R b1 = static_cast<R>(cfg.adam_beta1), b2 = static_cast<R>(cfg.adam_beta2);
  const R lr = static_cast<R>(cfg.learning_rate), eps = static_cast<R>(cfg.adam_eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i].tensor;
    auto& m = opt.m[i];
    auto& v = opt.v[i];
    for (std::size_t j = 0; j < p.numel(); ++j) {
      const R g = p.grad[j];
      m[j] = b1 * m[j] + (R(1) - b1) * g;
      v[j] = b2 * v[j] + (R(1) - b2) * g * g;
      const R mhat = m[j] / bc1;
      const R vhat = v[j] / bc2;
      p.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

/// Runs `cfg.steps` Adam steps over length-T windows drawn from `data`,
/// appending to any training already done by `model`. Returns the per-step
/// loss trace. Aborts with a numeric error if the loss stops being finite.
template <class R>
std::vector<double> train(ModelT<R>& model, const std::vector<FrameSequence>& data,
                          const TrainConfig& cfg, const LossCallback& callback = {}) {
  auto& net = model.net;
  detail::validate_train_config(cfg, net);

  // window pool, stride 1, converted to the model's precision once
  std::vector<std::vector<TensorPtrT<R>>> pool;
  for (const auto& seq : data) {
    if (seq.channels() != net.frame_channels() && seq.length() > 0)
      fail(ErrorCode::shape, "sequence '" + seq.source_id + "' has " +
                                 std::to_string(seq.channels()) + " channels, network expects " +
                                 std::to_string(net.frame_channels()));
    for (auto& w : windows(seq, static_cast<int>(cfg.seq_len), 1)) {
      std::vector<TensorPtrT<R>> frames;
      frames.reserve(w.frames.size());
      for (const auto& f : w.frames) frames.push_back(cast_tensor<R>(f));
      pool.push_back(std::move(frames));
    }
  }
  if (pool.empty())
    fail(ErrorCode::argument, "no training windows of length " + std::to_string(cfg.seq_len));

  if (!model.rng_seeded) {
    model.rng.seed(cfg.seed);
    model.rng_seeded = true;
  }

  auto params = net.parameters();
  if (!model.opt.initialized()) {
    model.opt.m.resize(params.size());
    model.opt.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      model.opt.m[i].assign(params[i].tensor->numel(), R(0));
      model.opt.v[i].assign(params[i].tensor->numel(), R(0));
    }
  } else if (model.opt.m.size() != params.size()) {
    fail(ErrorCode::contract, "optimizer state does not match the network parameters");
  }

  const int T = static_cast<int>(cfg.seq_len);
  std::vector<double> trace;
  trace.reserve(cfg.steps);

  for (std::uint32_t s = 0; s < cfg.steps; ++s) {
    TapeT<R> tape;
    TensorPtrT<R> total;
    for (std::uint32_t b = 0; b < cfg.batch; ++b) {
      const auto& frames = pool[uniform_index(model.rng, pool.size())];
      auto state = init_state(net, 1, frames[0]->h, frames[0]->w);
      TensorPtrT<R> seq_loss;
      for (int t = 0; t < T; ++t) {
        auto res = step<R>(&tape, net, state, frames[static_cast<std::size_t>(t)]);
        if (t >= 1) {
          TensorPtrT<R> lt;
          if (cfg.loss_mode == LossMode::pixel_mse) {
            auto d = sub(&tape, res.prediction, frames[static_cast<std::size_t>(t)]);
            lt = mean(&tape, hadamard(&tape, d, d));
          } else {
            for (int l = 0; l < net.layer_count(); ++l) {
              auto wl = scale(&tape, res.layer_error_mean[static_cast<std::size_t>(l)],
                              static_cast<R>(cfg.layer_loss_weights[static_cast<std::size_t>(l)]));
              lt = lt ? add(&tape, lt, wl) : wl;
            }
          }
          seq_loss = seq_loss ? add(&tape, seq_loss, lt) : lt;
        }
        state = std::move(res.state);
      }
      seq_loss = scale(&tape, seq_loss, R(1) / static_cast<R>(T - 1));
      total = total ? add(&tape, total, seq_loss) : seq_loss;
    }
    if (cfg.batch > 1) total = scale(&tape, total, R(1) / static_cast<R>(cfg.batch));

    const double loss = static_cast<double>(total->data[0]);
    if (!std::isfinite(loss))
      fail(ErrorCode::numeric,
           "training diverged at step " + std::to_string(model.step + 1) + " (loss = " +
               std::to_string(loss) + ")");

    for (auto& p : params) p.tensor->zero_grad();
    tape.backward(total);

    model.step += 1;
    adam_update<R>(params, model.opt, cfg, model.step);

    trace.push_back(loss);
    if (callback) callback(model.step, loss);
  }
  return trace;
}

}  // namespace ivp
