#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ivp/tensor.hpp"

namespace ivp {

enum class CellType : int { conv_lstm = 0, inception_v1 = 1, inception_v2 = 2 };

inline const char* cell_type_name(CellType t) {
  switch (t) {
    case CellType::conv_lstm: return "conv";
    case CellType::inception_v1: return "iv1";
    case CellType::inception_v2: return "iv2";
  }
  return "?";
}

// Gate order used everywhere: input, forget, candidate, output.
inline constexpr int kGates = 4;
inline constexpr const char* kGateNames[kGates] = {"i", "f", "g", "o"};
inline constexpr int kForgetGate = 1;
inline constexpr int kCandidateGate = 2;

template <class R>
struct CellStateT {
  TensorPtrT<R> h;
  TensorPtrT<R> c;
};

template <class R>
struct NamedParamT {
  std::string name;
  TensorPtrT<R> tensor;
};

namespace detail {

template <class R>
TensorPtrT<R> glorot_kernel(int co, int ci, int kh, int kw, std::mt19937_64& rng) {
  auto k = make_tensor<R>(co, ci, kh, kw, true);
  const double bound = std::sqrt(6.0 / (static_cast<double>(ci) * kh * kw + static_cast<double>(co) * kh * kw));
  fill_uniform(k, rng, -bound, bound);
  return k;
}

template <class R>
TensorPtrT<R> bias_vec(int c, double value) {
  auto b = full<R>(1, c, 1, 1, static_cast<R>(value));
  b->requires_grad = true;
  b->grad.assign(b->numel(), R(0));
  return b;
}

}  // namespace detail

/// Per-gate input and hidden kernels plus bias, single kernel size.
template <class R>
struct ConvLstmWeightsT {
  int input_channels = 0;
  int hidden_channels = 0;
  int kernel = 3;
  std::array<TensorPtrT<R>, kGates> wx;  // (nh, ci, k, k)
  std::array<TensorPtrT<R>, kGates> wh;  // (nh, nh, k, k)
  std::array<TensorPtrT<R>, kGates> b;   // (1, nh, 1, 1)

  std::vector<NamedParamT<R>> parameters(const std::string& prefix = "") const {
    std::vector<NamedParamT<R>> out;
    for (int g = 0; g < kGates; ++g) {
      out.push_back({prefix + std::string(kGateNames[g]) + ".wx", wx[g]});
      out.push_back({prefix + std::string(kGateNames[g]) + ".wh", wh[g]});
      out.push_back({prefix + std::string(kGateNames[g]) + ".b", b[g]});
    }
    return out;
  }
};

/// Three parallel kernels (1x1, 3x3, 5x5) per gate over the concatenated
/// (input, hidden) channels; each branch yields nb channels and carries its
/// own bias, so gates and state are 3*nb channels wide.
template <class R>
struct InceptionV1WeightsT {
  int input_channels = 0;
  int branch_channels = 0;  // nb
  bool candidate_sigmoid = false;
  std::array<TensorPtrT<R>, kGates> k1, k3, k5;
  std::array<TensorPtrT<R>, kGates> b1, b3, b5;

  int hidden_channels() const { return 3 * branch_channels; }

  std::vector<NamedParamT<R>> parameters(const std::string& prefix = "") const {
    std::vector<NamedParamT<R>> out;
    for (int g = 0; g < kGates; ++g) {
      const std::string gp = prefix + kGateNames[g];
      out.push_back({gp + ".k1", k1[g]});
      out.push_back({gp + ".k3", k3[g]});
      out.push_back({gp + ".k5", k5[g]});
      out.push_back({gp + ".b1", b1[g]});
      out.push_back({gp + ".b3", b3[g]});
      out.push_back({gp + ".b5", b5[g]});
    }
    return out;
  }
};

/// As v1 but the 5x5 branch is two chained 3x3 kernels (no nonlinearity in
/// between); the chain's bias sits on the outer kernel.
template <class R>
struct InceptionV2WeightsT {
  int input_channels = 0;
  int branch_channels = 0;
  bool candidate_sigmoid = false;
  std::array<TensorPtrT<R>, kGates> k1, k3;
  std::array<TensorPtrT<R>, kGates> k3_inner, k3_outer;
  std::array<TensorPtrT<R>, kGates> b1, b3, b_chain;

  int hidden_channels() const { return 3 * branch_channels; }

  std::vector<NamedParamT<R>> parameters(const std::string& prefix = "") const {
    std::vector<NamedParamT<R>> out;
    for (int g = 0; g < kGates; ++g) {
      const std::string gp = prefix + kGateNames[g];
      out.push_back({gp + ".k1", k1[g]});
      out.push_back({gp + ".k3", k3[g]});
      out.push_back({gp + ".k3_inner", k3_inner[g]});
      out.push_back({gp + ".k3_outer", k3_outer[g]});
      out.push_back({gp + ".b1", b1[g]});
      out.push_back({gp + ".b3", b3[g]});
      out.push_back({gp + ".b_chain", b_chain[g]});
    }
    return out;
  }
};

// Forget-gate biases start at +1, everything else at 0.
inline double default_gate_bias(int gate) { return gate == kForgetGate ? 1.0 : 0.0; }

template <class R>
ConvLstmWeightsT<R> make_conv_lstm(int input_channels, int hidden_channels, int kernel,
                                   std::mt19937_64& rng) {
  if (hidden_channels < 1) fail(ErrorCode::config, "conv_lstm: hidden_channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0)
    fail(ErrorCode::argument, "conv_lstm: kernel size must be odd, got " + std::to_string(kernel));
  ConvLstmWeightsT<R> w;
  w.input_channels = input_channels;
  w.hidden_channels = hidden_channels;
  w.kernel = kernel;
  for (int g = 0; g < kGates; ++g) {
    w.wx[g] = detail::glorot_kernel<R>(hidden_channels, input_channels, kernel, kernel, rng);
    w.wh[g] = detail::glorot_kernel<R>(hidden_channels, hidden_channels, kernel, kernel, rng);
    w.b[g] = detail::bias_vec<R>(hidden_channels, default_gate_bias(g));
  }
  return w;
}

template <class R>
InceptionV1WeightsT<R> make_inception_v1(int input_channels, int branch_channels,
                                         std::mt19937_64& rng, bool candidate_sigmoid = false) {
  if (branch_channels < 1) fail(ErrorCode::config, "inception_v1: branch width must be >= 1");
  InceptionV1WeightsT<R> w;
  w.input_channels = input_channels;
  w.branch_channels = branch_channels;
  w.candidate_sigmoid = candidate_sigmoid;
  const int cz = input_channels + 3 * branch_channels;
  for (int g = 0; g < kGates; ++g) {
    w.k1[g] = detail::glorot_kernel<R>(branch_channels, cz, 1, 1, rng);
    w.k3[g] = detail::glorot_kernel<R>(branch_channels, cz, 3, 3, rng);
    w.k5[g] = detail::glorot_kernel<R>(branch_channels, cz, 5, 5, rng);
    w.b1[g] = detail::bias_vec<R>(branch_channels, default_gate_bias(g));
    w.b3[g] = detail::bias_vec<R>(branch_channels, default_gate_bias(g));
    w.b5[g] = detail::bias_vec<R>(branch_channels, default_gate_bias(g));
  }
  return w;
}

template <class R>
InceptionV2WeightsT<R> make_inception_v2(int input_channels, int branch_channels,
                                         std::mt19937_64& rng, bool candidate_sigmoid = false) {
  if (branch_channels < 1) fail(ErrorCode::config, "inception_v2: branch width must be >= 1");
  InceptionV2WeightsT<R> w;
  w.input_channels = input_channels;
  w.branch_channels = branch_channels;
  w.candidate_sigmoid = candidate_sigmoid;
  const int cz = input_channels + 3 * branch_channels;
  for (int g = 0; g < kGates; ++g) {
    w.k1[g] = detail::glorot_kernel<R>(branch_channels, cz, 1, 1, rng);
    w.k3[g] = detail::glorot_kernel<R>(branch_channels, cz, 3, 3, rng);
    w.k3_inner[g] = detail::glorot_kernel<R>(branch_channels, cz, 3, 3, rng);
    w.k3_outer[g] = detail::glorot_kernel<R>(branch_channels, branch_channels, 3, 3, rng);
    w.b1[g] = detail::bias_vec<R>(branch_channels, default_gate_bias(g));
    w.b3[g] = detail::bias_vec<R>(branch_channels, default_gate_bias(g));
    w.b_chain[g] = detail::bias_vec<R>(branch_channels, default_gate_bias(g));
  }
  return w;
}

template <class R>
CellStateT<R> zero_cell_state(int batch, int hidden_channels, int height, int width) {
  return CellStateT<R>{make_tensor<R>(batch, hidden_channels, height, width),
                       make_tensor<R>(batch, hidden_channels, height, width)};
}

/// Detached copies of the gate activations of one step, for inspection.
template <class R>
struct CellDiagT {
  TensorPtrT<R> i, f, g, o;
};

namespace detail {

template <class R>
void check_cell_input(const char* cell, int expect_ci, int hidden, const TensorPtrT<R>& x,
                      const CellStateT<R>& s) {
  if (!x || !s.h || !s.c) fail(ErrorCode::argument, std::string(cell) + ": null input or state");
  if (x->c != expect_ci)
    fail(ErrorCode::shape, std::string(cell) + ": input has " + std::to_string(x->c) +
                               " channels, weights expect " + std::to_string(expect_ci));
  if (!s.h->same_shape(*s.c))
    fail(ErrorCode::shape, std::string(cell) + ": state h/c shape mismatch");
  if (s.h->c != hidden)
    fail(ErrorCode::shape, std::string(cell) + ": state has " + std::to_string(s.h->c) +
                               " channels, weights expect " + std::to_string(hidden));
  if (s.h->h != x->h || s.h->w != x->w || s.h->n != x->n)
    fail(ErrorCode::shape, std::string(cell) + ": input " + x->shape_str() +
                               " does not align with state " + s.h->shape_str());
}

template <class R>
std::pair<TensorPtrT<R>, CellStateT<R>> finish_lstm(TapeT<R>* tape, const TensorPtrT<R>& i,
                                                    const TensorPtrT<R>& f, const TensorPtrT<R>& g,
                                                    const TensorPtrT<R>& o,
                                                    const TensorPtrT<R>& c_prev,
                                                    CellDiagT<R>* diag) {
  auto c_t = add(tape, hadamard(tape, f, c_prev), hadamard(tape, i, g));
  auto h_t = hadamard(tape, o, tanh(tape, c_t));
  if (diag) {
    diag->i = clone_values(i);
    diag->f = clone_values(f);
    diag->g = clone_values(g);
    diag->o = clone_values(o);
  }
  return {h_t, CellStateT<R>{h_t, c_t}};
}

}  // namespace detail

template <class R>
std::pair<TensorPtrT<R>, CellStateT<R>> conv_lstm_step(TapeT<R>* tape,
                                                       const ConvLstmWeightsT<R>& w,
                                                       const TensorPtrT<R>& x,
                                                       const CellStateT<R>& s,
                                                       CellDiagT<R>* diag = nullptr) {
  detail::check_cell_input("conv_lstm_step", w.input_channels, w.hidden_channels, x, s);
  std::array<TensorPtrT<R>, kGates> pre;
  for (int g = 0; g < kGates; ++g)
    pre[g] = add(tape, conv2d(tape, x, w.wx[g], w.b[g]), conv2d(tape, s.h, w.wh[g]));
  auto i = hard_sigmoid(tape, pre[0]);
  auto f = hard_sigmoid(tape, pre[1]);
  auto g = tanh(tape, pre[2]);
  auto o = hard_sigmoid(tape, pre[3]);
  return detail::finish_lstm(tape, i, f, g, o, s.c, diag);
}

template <class R>
std::pair<TensorPtrT<R>, CellStateT<R>> inception_v1_step(TapeT<R>* tape,
                                                          const InceptionV1WeightsT<R>& w,
                                                          const TensorPtrT<R>& x,
                                                          const CellStateT<R>& s,
                                                          CellDiagT<R>* diag = nullptr) {
  detail::check_cell_input("inception_v1_step", w.input_channels, w.hidden_channels(), x, s);
  auto z = concat_channels(tape, {x, s.h});
  std::array<TensorPtrT<R>, kGates> pre;
  for (int g = 0; g < kGates; ++g) {
    pre[g] = concat_channels(tape, {conv2d(tape, z, w.k1[g], w.b1[g]),
                                    conv2d(tape, z, w.k3[g], w.b3[g]),
                                    conv2d(tape, z, w.k5[g], w.b5[g])});
  }
  auto i = hard_sigmoid(tape, pre[0]);
  auto f = hard_sigmoid(tape, pre[1]);
  auto g = w.candidate_sigmoid ? hard_sigmoid(tape, pre[2]) : tanh(tape, pre[2]);
  auto o = hard_sigmoid(tape, pre[3]);
  return detail::finish_lstm(tape, i, f, g, o, s.c, diag);
}

template <class R>
std::pair<TensorPtrT<R>, CellStateT<R>> inception_v2_step(TapeT<R>* tape,
                                                          const InceptionV2WeightsT<R>& w,
                                                          const TensorPtrT<R>& x,
                                                          const CellStateT<R>& s,
                                                          CellDiagT<R>* diag = nullptr) {
  detail::check_cell_input("inception_v2_step", w.input_channels, w.hidden_channels(), x, s);
  auto z = concat_channels(tape, {x, s.h});
  std::array<TensorPtrT<R>, kGates> pre;
  for (int g = 0; g < kGates; ++g) {
    auto chain = conv2d(tape, conv2d(tape, z, w.k3_inner[g]), w.k3_outer[g], w.b_chain[g]);
    pre[g] = concat_channels(tape, {conv2d(tape, z, w.k1[g], w.b1[g]),
                                    conv2d(tape, z, w.k3[g], w.b3[g]), chain});
  }
  auto i = hard_sigmoid(tape, pre[0]);
  auto f = hard_sigmoid(tape, pre[1]);
  auto g = w.candidate_sigmoid ? hard_sigmoid(tape, pre[2]) : tanh(tape, pre[2]);
  auto o = hard_sigmoid(tape, pre[3]);
  return detail::finish_lstm(tape, i, f, g, o, s.c, diag);
}

/// Learnable-scalar census for one cell plus the per-gate kernel-element
/// coefficient (spatial taps summed across branches: 2k^2 / 35 / 28).
struct ParamBreakdown {
  std::uint64_t kernel_elems = 0;
  std::uint64_t biases = 0;
  std::uint64_t total = 0;
  std::uint32_t per_gate_kernel_coeff = 0;
};

template <class R>
ParamBreakdown param_count(const ConvLstmWeightsT<R>& w) {
  ParamBreakdown p;
  const std::uint64_t k2 = static_cast<std::uint64_t>(w.kernel) * w.kernel;
  const std::uint64_t ci = w.input_channels, nh = w.hidden_channels;
  p.kernel_elems = kGates * (nh * ci * k2 + nh * nh * k2);
  p.biases = kGates * nh;
  p.total = p.kernel_elems + p.biases;
  p.per_gate_kernel_coeff = static_cast<std::uint32_t>(2 * k2);
  return p;
}

template <class R>
ParamBreakdown param_count(const InceptionV1WeightsT<R>& w) {
  ParamBreakdown p;
  const std::uint64_t nb = w.branch_channels;
  const std::uint64_t cz = w.input_channels + 3 * nb;
  p.kernel_elems = kGates * (nb * cz * 1 + nb * cz * 9 + nb * cz * 25);
  p.biases = kGates * 3 * nb;
  p.total = p.kernel_elems + p.biases;
  p.per_gate_kernel_coeff = 1 + 9 + 25;
  return p;
}

template <class R>
ParamBreakdown param_count(const InceptionV2WeightsT<R>& w) {
  ParamBreakdown p;
  const std::uint64_t nb = w.branch_channels;
  const std::uint64_t cz = w.input_channels + 3 * nb;
  p.kernel_elems = kGates * (nb * cz * 1 + nb * cz * 9 + nb * cz * 9 + nb * nb * 9);
  p.biases = kGates * 3 * nb;
  p.total = p.kernel_elems + p.biases;
  p.per_gate_kernel_coeff = 1 + 9 * 3;
  return p;
}

}  // namespace ivp
