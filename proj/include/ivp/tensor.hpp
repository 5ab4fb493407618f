#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ivp/common.hpp"

namespace ivp {

/// Dense 4-d array in (batch, channel, row, col) order, row-major.
/// `grad` is allocated and shape-matched whenever `requires_grad` is set.
template <class R>
struct TensorT {
  int n = 1, c = 1, h = 1, w = 1;
  std::vector<R> data;
  bool requires_grad = false;
  std::vector<R> grad;

  TensorT() = default;
  TensorT(int n_, int c_, int h_, int w_, bool rg = false) { resize(n_, c_, h_, w_, rg); }

  void resize(int n_, int c_, int h_, int w_, bool rg) {
    if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
      fail(ErrorCode::shape, "tensor dimensions must all be >= 1, got " + shape_str(n_, c_, h_, w_));
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    data.assign(numel(), R(0));
    requires_grad = rg;
    grad.assign(rg ? numel() : 0, R(0));
  }

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * static_cast<std::size_t>(h) * w;
  }
  bool is_scalar() const { return numel() == 1; }

  std::size_t index(int in, int ic, int iy, int ix) const {
    return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
  }
  R& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
  const R& at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

  void zero_grad() { std::fill(grad.begin(), grad.end(), R(0)); }

  bool same_shape(const TensorT& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  static std::string shape_str(int n, int c, int h, int w) {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
  std::string shape_str() const { return shape_str(n, c, h, w); }
};

template <class R>
using TensorPtrT = std::shared_ptr<TensorT<R>>;

using Tensor = TensorT<double>;
using TensorPtr = TensorPtrT<double>;

template <class R>
TensorPtrT<R> make_tensor(int n, int c, int h, int w, bool requires_grad = false) {
  return std::make_shared<TensorT<R>>(n, c, h, w, requires_grad);
}

template <class R>
TensorPtrT<R> full(int n, int c, int h, int w, R value, bool requires_grad = false) {
  auto t = make_tensor<R>(n, c, h, w, requires_grad);
  std::fill(t->data.begin(), t->data.end(), value);
  return t;
}

template <class R>
TensorPtrT<R> zeros_like(const TensorPtrT<R>& t, bool requires_grad = false) {
  return make_tensor<R>(t->n, t->c, t->h, t->w, requires_grad);
}

template <class R>
TensorPtrT<R> scalar_tensor(R v, bool requires_grad = false) {
  auto t = make_tensor<R>(1, 1, 1, 1, requires_grad);
  t->data[0] = v;
  return t;
}

template <class R>
TensorPtrT<R> clone_values(const TensorPtrT<R>& t, bool requires_grad = false) {
  auto out = make_tensor<R>(t->n, t->c, t->h, t->w, requires_grad);
  out->data = t->data;
  return out;
}

template <class RDst, class RSrc>
TensorPtrT<RDst> cast_tensor(const TensorPtrT<RSrc>& t, bool requires_grad = false) {
  auto out = make_tensor<RDst>(t->n, t->c, t->h, t->w, requires_grad);
  for (std::size_t i = 0; i < t->data.size(); ++i) out->data[i] = static_cast<RDst>(t->data[i]);
  return out;
}

template <class R>
void fill_uniform(const TensorPtrT<R>& t, std::mt19937_64& rng, double lo, double hi) {
  for (auto& v : t->data) v = static_cast<R>(uniform(rng, lo, hi));
}

/// Wengert list. Ops append a backward closure as they execute; `backward`
/// replays them newest-first, so every node is visited after all of its
/// consumers. Leaf gradients accumulate across calls; intermediate (op
/// output) gradients are cleared after each sweep.
template <class R>
class TapeT {
 public:
  void record(TensorPtrT<R> output, std::function<void()> backward) {
    ops_.push_back(Op{std::move(output), std::move(backward)});
  }

  void backward(const TensorPtrT<R>& loss) {
    if (!loss || !loss->is_scalar())
      fail(ErrorCode::contract, "backward requires a scalar loss tensor");
    if (!loss->requires_grad)
      fail(ErrorCode::contract, "loss is not connected to any tracked tensor");
    loss->grad[0] += R(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward();
    for (auto& op : ops_) op.output->zero_grad();
  }

  void clear() { ops_.clear(); }
  std::size_t size() const { return ops_.size(); }

 private:
  struct Op {
    TensorPtrT<R> output;
    std::function<void()> backward;
  };
  std::vector<Op> ops_;
};

using Tape = TapeT<double>;

namespace detail {

template <class R>
bool tracked(const TapeT<R>* tape, std::initializer_list<const TensorPtrT<R>*> inputs) {
  if (!tape) return false;
  for (const auto* in : inputs)
    if (*in && (*in)->requires_grad) return true;
  return false;
}

// Expands one batch image into a (ci*kh*kw) x (h*w) matrix for same-padded
// convolution. Out-of-range taps are zero.
template <class R>
void im2col(const TensorT<R>& in, int batch, int kh, int kw, R* col) {
  const int ph = kh / 2, pw = kw / 2;
  const int hw = in.h * in.w;
  const R* base = in.data.data() + static_cast<std::size_t>(batch) * in.c * hw;
  std::size_t r = 0;
  for (int i = 0; i < in.c; ++i) {
    for (int dy = 0; dy < kh; ++dy) {
      for (int dx = 0; dx < kw; ++dx, ++r) {
        const int oy = dy - ph, ox = dx - pw;
        R* dst = col + r * hw;
        for (int y = 0; y < in.h; ++y) {
          R* drow = dst + static_cast<std::size_t>(y) * in.w;
          const int sy = y + oy;
          if (sy < 0 || sy >= in.h) {
            std::fill(drow, drow + in.w, R(0));
            continue;
          }
          const R* srow = base + (static_cast<std::size_t>(i) * in.h + sy) * in.w;
          const int x0 = std::max(0, -ox);
          const int x1 = std::min(in.w, in.w - ox);
          if (x1 <= x0) {
            std::fill(drow, drow + in.w, R(0));
            continue;
          }
          if (x0 > 0) std::fill(drow, drow + x0, R(0));
          std::copy(srow + x0 + ox, srow + x1 + ox, drow + x0);
          if (x1 < in.w) std::fill(drow + x1, drow + in.w, R(0));
        }
      }
    }
  }
}

// Scatter-add inverse of im2col, used for input gradients.
template <class R>
void col2im_add(const R* col, int channels, int height, int width, int kh, int kw, R* out) {
  const int ph = kh / 2, pw = kw / 2;
  const int hw = height * width;
  std::size_t r = 0;
  for (int i = 0; i < channels; ++i) {
    for (int dy = 0; dy < kh; ++dy) {
      for (int dx = 0; dx < kw; ++dx, ++r) {
        const int oy = dy - ph, ox = dx - pw;
        const R* src = col + r * hw;
        for (int y = 0; y < height; ++y) {
          const int sy = y + oy;
          if (sy < 0 || sy >= height) continue;
          R* drow = out + (static_cast<std::size_t>(i) * height + sy) * width;
          const R* srow = src + static_cast<std::size_t>(y) * width;
          const int x0 = std::max(0, -ox);
          const int x1 = std::min(width, width - ox);
          for (int x = x0; x < x1; ++x) drow[x + ox] += srow[x];
        }
      }
    }
  }
}

// C[M x N] += A[M x K] * B[K x N]
template <class R>
void gemm_acc(int M, int K, int N, const R* A, const R* B, R* C) {
  for (int m = 0; m < M; ++m) {
    R* crow = C + static_cast<std::size_t>(m) * N;
    const R* arow = A + static_cast<std::size_t>(m) * K;
    for (int k = 0; k < K; ++k) {
      const R a = arow[k];
      const R* brow = B + static_cast<std::size_t>(k) * N;
      for (int p = 0; p < N; ++p) crow[p] += a * brow[p];
    }
  }
}

// C[M x K] += A[M x N] * B[K x N]^T
template <class R>
void gemm_abt_acc(int M, int K, int N, const R* A, const R* B, R* C) {
  for (int m = 0; m < M; ++m) {
    const R* arow = A + static_cast<std::size_t>(m) * N;
    R* crow = C + static_cast<std::size_t>(m) * K;
    for (int k = 0; k < K; ++k) {
      const R* brow = B + static_cast<std::size_t>(k) * N;
      R acc = R(0);
      for (int p = 0; p < N; ++p) acc += arow[p] * brow[p];
      crow[k] += acc;
    }
  }
}

// C[K x N] += A[M x K]^T * B[M x N]
template <class R>
void gemm_atb_acc(int M, int K, int N, const R* A, const R* B, R* C) {
  for (int m = 0; m < M; ++m) {
    const R* arow = A + static_cast<std::size_t>(m) * K;
    const R* brow = B + static_cast<std::size_t>(m) * N;
    for (int k = 0; k < K; ++k) {
      const R a = arow[k];
      R* crow = C + static_cast<std::size_t>(k) * N;
      for (int p = 0; p < N; ++p) crow[p] += a * brow[p];
    }
  }
}

template <class R>
std::vector<R>& conv_scratch() {
  thread_local std::vector<R> buf;
  return buf;
}

template <class R>
std::vector<R>& conv_scratch2() {
  thread_local std::vector<R> buf;
  return buf;
}

}  // namespace detail

/// Same-padded 2-d convolution. kernel is (co, ci, kh, kw) with odd kh, kw;
/// bias is (1, co, 1, 1) and may be null. Spatial dims are preserved.
template <class R>
TensorPtrT<R> conv2d(TapeT<R>* tape, const TensorPtrT<R>& in, const TensorPtrT<R>& kernel,
                     const TensorPtrT<R>& bias = nullptr) {
  if (!in || !kernel) fail(ErrorCode::argument, "conv2d: null operand");
  if (kernel->h % 2 == 0 || kernel->w % 2 == 0)
    fail(ErrorCode::argument, "conv2d: unsupported even kernel size " + kernel->shape_str());
  if (kernel->c != in->c)
    fail(ErrorCode::shape, "conv2d: kernel expects " + std::to_string(kernel->c) +
                               " input channels, input has " + std::to_string(in->c));
  const int co = kernel->n, kh = kernel->h, kw = kernel->w;
  if (bias && static_cast<int>(bias->numel()) != co)
    fail(ErrorCode::shape, "conv2d: bias size " + std::to_string(bias->numel()) +
                               " does not match " + std::to_string(co) + " output channels");

  const bool rg = detail::tracked<R>(tape, {&in, &kernel, &bias});
  auto out = make_tensor<R>(in->n, co, in->h, in->w, rg);

  const int hw = in->h * in->w;
  const int kdim = in->c * kh * kw;
  const bool k1 = (kh == 1 && kw == 1);
  auto& col = detail::conv_scratch<R>();
  if (!k1) col.resize(static_cast<std::size_t>(kdim) * hw);

  for (int b = 0; b < in->n; ++b) {
    const R* colp = in->data.data() + static_cast<std::size_t>(b) * in->c * hw;
    if (!k1) {
      detail::im2col(*in, b, kh, kw, col.data());
      colp = col.data();
    }
    R* outp = out->data.data() + static_cast<std::size_t>(b) * co * hw;
    if (bias) {
      for (int o = 0; o < co; ++o)
        std::fill(outp + static_cast<std::size_t>(o) * hw, outp + static_cast<std::size_t>(o + 1) * hw,
                  bias->data[o]);
    }
    detail::gemm_acc<R>(co, kdim, hw, kernel->data.data(), colp, outp);
  }

  if (rg) {
    tape->record(out, [in, kernel, bias, out]() {
      const int co = kernel->n, kh = kernel->h, kw = kernel->w;
      const int hw = in->h * in->w;
      const int kdim = in->c * kh * kw;
      const bool k1 = (kh == 1 && kw == 1);
      auto& col = detail::conv_scratch<R>();
      auto& dcol = detail::conv_scratch2<R>();
      if (!k1) col.resize(static_cast<std::size_t>(kdim) * hw);
      for (int b = 0; b < in->n; ++b) {
        const R* gout = out->grad.data() + static_cast<std::size_t>(b) * co * hw;
        const R* colp = in->data.data() + static_cast<std::size_t>(b) * in->c * hw;
        if (!k1) {
          detail::im2col(*in, b, kh, kw, col.data());
          colp = col.data();
        }
        if (kernel->requires_grad)
          detail::gemm_abt_acc<R>(co, kdim, hw, gout, colp, kernel->grad.data());
        if (bias && bias->requires_grad) {
          for (int o = 0; o < co; ++o) {
            R acc = R(0);
            const R* row = gout + static_cast<std::size_t>(o) * hw;
            for (int p = 0; p < hw; ++p) acc += row[p];
            bias->grad[o] += acc;
          }
        }
        if (in->requires_grad) {
          R* gin = in->grad.data() + static_cast<std::size_t>(b) * in->c * hw;
          if (k1) {
            detail::gemm_atb_acc<R>(co, kdim, hw, kernel->data.data(), gout, gin);
          } else {
            dcol.assign(static_cast<std::size_t>(kdim) * hw, R(0));
            detail::gemm_atb_acc<R>(co, kdim, hw, kernel->data.data(), gout, dcol.data());
            detail::col2im_add(dcol.data(), in->c, in->h, in->w, kh, kw, gin);
          }
        }
      }
    });
  }
  return out;
}

/// 2x2 max pooling, stride 2. Odd trailing rows/cols use a shrunk window.
template <class R>
TensorPtrT<R> max_pool_2x2(TapeT<R>* tape, const TensorPtrT<R>& in) {
  const int oh = (in->h + 1) / 2, ow = (in->w + 1) / 2;
  const bool rg = detail::tracked<R>(tape, {&in});
  auto out = make_tensor<R>(in->n, in->c, oh, ow, rg);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out->numel());

  std::size_t oi = 0;
  for (int b = 0; b < in->n; ++b)
    for (int ch = 0; ch < in->c; ++ch)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x, ++oi) {
          R best = R(0);
          std::size_t best_idx = 0;
          bool first = true;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int sy = 2 * y + dy, sx = 2 * x + dx;
              if (sy >= in->h || sx >= in->w) continue;
              const std::size_t idx = in->index(b, ch, sy, sx);
              if (first || in->data[idx] > best) {
                best = in->data[idx];
                best_idx = idx;
                first = false;
              }
            }
          out->data[oi] = best;
          (*argmax)[oi] = best_idx;
        }

  if (rg) {
    tape->record(out, [in, out, argmax]() {
      for (std::size_t i = 0; i < out->numel(); ++i) in->grad[(*argmax)[i]] += out->grad[i];
    });
  }
  return out;
}

/// Nearest-neighbor 2x upsampling; each input pixel fills a 2x2 block.
template <class R>
TensorPtrT<R> upsample_2x(TapeT<R>* tape, const TensorPtrT<R>& in) {
  const bool rg = detail::tracked<R>(tape, {&in});
  auto out = make_tensor<R>(in->n, in->c, 2 * in->h, 2 * in->w, rg);
  for (int b = 0; b < in->n; ++b)
    for (int ch = 0; ch < in->c; ++ch)
      for (int y = 0; y < in->h; ++y)
        for (int x = 0; x < in->w; ++x) {
          const R v = in->at(b, ch, y, x);
          out->at(b, ch, 2 * y, 2 * x) = v;
          out->at(b, ch, 2 * y, 2 * x + 1) = v;
          out->at(b, ch, 2 * y + 1, 2 * x) = v;
          out->at(b, ch, 2 * y + 1, 2 * x + 1) = v;
        }
  if (rg) {
    tape->record(out, [in, out]() {
      for (int b = 0; b < in->n; ++b)
        for (int ch = 0; ch < in->c; ++ch)
          for (int y = 0; y < in->h; ++y)
            for (int x = 0; x < in->w; ++x)
              in->grad[in->index(b, ch, y, x)] +=
                  out->grad[out->index(b, ch, 2 * y, 2 * x)] +
                  out->grad[out->index(b, ch, 2 * y, 2 * x + 1)] +
                  out->grad[out->index(b, ch, 2 * y + 1, 2 * x)] +
                  out->grad[out->index(b, ch, 2 * y + 1, 2 * x + 1)];
    });
  }
  return out;
}

/// Keeps the top-left (oh, ow) spatial region.
template <class R>
TensorPtrT<R> crop_spatial(TapeT<R>* tape, const TensorPtrT<R>& in, int oh, int ow) {
  if (oh < 1 || ow < 1 || oh > in->h || ow > in->w)
    fail(ErrorCode::shape, "crop_spatial: cannot crop " + in->shape_str() + " to " +
                               std::to_string(oh) + "x" + std::to_string(ow));
  if (oh == in->h && ow == in->w) return in;
  const bool rg = detail::tracked<R>(tape, {&in});
  auto out = make_tensor<R>(in->n, in->c, oh, ow, rg);
  for (int b = 0; b < in->n; ++b)
    for (int ch = 0; ch < in->c; ++ch)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) out->at(b, ch, y, x) = in->at(b, ch, y, x);
  if (rg) {
    tape->record(out, [in, out]() {
      for (int b = 0; b < in->n; ++b)
        for (int ch = 0; ch < in->c; ++ch)
          for (int y = 0; y < out->h; ++y)
            for (int x = 0; x < out->w; ++x)
              in->grad[in->index(b, ch, y, x)] += out->grad[out->index(b, ch, y, x)];
    });
  }
  return out;
}

/// Concatenates along the channel dimension, order preserved.
template <class R>
TensorPtrT<R> concat_channels(TapeT<R>* tape, const std::vector<TensorPtrT<R>>& parts) {
  if (parts.empty()) fail(ErrorCode::argument, "concat_channels: need at least one part");
  int ctotal = 0;
  for (const auto& p : parts) {
    if (!p) fail(ErrorCode::argument, "concat_channels: null part");
    if (p->n != parts[0]->n || p->h != parts[0]->h || p->w != parts[0]->w)
      fail(ErrorCode::shape, "concat_channels: part " + p->shape_str() +
                                 " does not match " + parts[0]->shape_str());
    ctotal += p->c;
  }
  bool rg = false;
  if (tape)
    for (const auto& p : parts) rg = rg || p->requires_grad;

  auto out = make_tensor<R>(parts[0]->n, ctotal, parts[0]->h, parts[0]->w, rg);
  const int hw = parts[0]->h * parts[0]->w;
  for (int b = 0; b < out->n; ++b) {
    R* dst = out->data.data() + static_cast<std::size_t>(b) * ctotal * hw;
    for (const auto& p : parts) {
      const R* src = p->data.data() + static_cast<std::size_t>(b) * p->c * hw;
      std::copy(src, src + static_cast<std::size_t>(p->c) * hw, dst);
      dst += static_cast<std::size_t>(p->c) * hw;
    }
  }
  if (rg) {
    auto parts_copy = parts;
    tape->record(out, [parts_copy, out, hw, ctotal]() {
      for (int b = 0; b < out->n; ++b) {
        const R* src = out->grad.data() + static_cast<std::size_t>(b) * ctotal * hw;
        for (const auto& p : parts_copy) {
          if (p->requires_grad) {
            R* dst = p->grad.data() + static_cast<std::size_t>(b) * p->c * hw;
            for (std::size_t i = 0; i < static_cast<std::size_t>(p->c) * hw; ++i) dst[i] += src[i];
          }
          src += static_cast<std::size_t>(p->c) * hw;
        }
      }
    });
  }
  return out;
}

/// Channel slice [begin, begin+count).
template <class R>
TensorPtrT<R> slice_channels(TapeT<R>* tape, const TensorPtrT<R>& in, int begin, int count) {
  if (begin < 0 || count < 1 || begin + count > in->c)
    fail(ErrorCode::shape, "slice_channels: range [" + std::to_string(begin) + "," +
                               std::to_string(begin + count) + ") out of " + std::to_string(in->c));
  const bool rg = detail::tracked<R>(tape, {&in});
  auto out = make_tensor<R>(in->n, count, in->h, in->w, rg);
  const int hw = in->h * in->w;
  for (int b = 0; b < in->n; ++b) {
    const R* src = in->data.data() + (static_cast<std::size_t>(b) * in->c + begin) * hw;
    R* dst = out->data.data() + static_cast<std::size_t>(b) * count * hw;
    std::copy(src, src + static_cast<std::size_t>(count) * hw, dst);
  }
  if (rg) {
    tape->record(out, [in, out, begin, hw]() {
      for (int b = 0; b < in->n; ++b) {
        R* dst = in->grad.data() + (static_cast<std::size_t>(b) * in->c + begin) * hw;
        const R* src = out->grad.data() + static_cast<std::size_t>(b) * out->c * hw;
        for (std::size_t i = 0; i < static_cast<std::size_t>(out->c) * hw; ++i) dst[i] += src[i];
      }
    });
  }
  return out;
}

namespace detail {

template <class R>
void require_same_shape(const TensorPtrT<R>& a, const TensorPtrT<R>& b, const char* op) {
  if (!a || !b) fail(ErrorCode::argument, std::string(op) + ": null operand");
  if (!a->same_shape(*b))
    fail(ErrorCode::shape,
         std::string(op) + ": shape mismatch " + a->shape_str() + " vs " + b->shape_str());
}

}  // namespace detail

template <class R>
TensorPtrT<R> add(TapeT<R>* tape, const TensorPtrT<R>& a, const TensorPtrT<R>& b) {
  detail::require_same_shape(a, b, "add");
  const bool rg = detail::tracked<R>(tape, {&a, &b});
  auto out = make_tensor<R>(a->n, a->c, a->h, a->w, rg);
  for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] + b->data[i];
  if (rg) {
    tape->record(out, [a, b, out]() {
      if (a->requires_grad)
        for (std::size_t i = 0; i < out->numel(); ++i) a->grad[i] += out->grad[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < out->numel(); ++i) b->grad[i] += out->grad[i];
    });
  }
  return out;
}

template <class R>
TensorPtrT<R> sub(TapeT<R>* tape, const TensorPtrT<R>& a, const TensorPtrT<R>& b) {
  detail::require_same_shape(a, b, "sub");
  const bool rg = detail::tracked<R>(tape, {&a, &b});
  auto out = make_tensor<R>(a->n, a->c, a->h, a->w, rg);
  for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] - b->data[i];
  if (rg) {
    tape->record(out, [a, b, out]() {
      if (a->requires_grad)
        for (std::size_t i = 0; i < out->numel(); ++i) a->grad[i] += out->grad[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < out->numel(); ++i) b->grad[i] -= out->grad[i];
    });
  }
  return out;
}

template <class R>
TensorPtrT<R> hadamard(TapeT<R>* tape, const TensorPtrT<R>& a, const TensorPtrT<R>& b) {
  detail::require_same_shape(a, b, "hadamard");
  const bool rg = detail::tracked<R>(tape, {&a, &b});
  auto out = make_tensor<R>(a->n, a->c, a->h, a->w, rg);
  for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * b->data[i];
  if (rg) {
    tape->record(out, [a, b, out]() {
      if (a->requires_grad)
        for (std::size_t i = 0; i < out->numel(); ++i) a->grad[i] += out->grad[i] * b->data[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < out->numel(); ++i) b->grad[i] += out->grad[i] * a->data[i];
    });
  }
  return out;
}

namespace detail {

template <class R, class Fwd, class Bwd>
TensorPtrT<R> pointwise(TapeT<R>* tape, const TensorPtrT<R>& x, Fwd fwd, Bwd bwd_factor) {
  if (!x) fail(ErrorCode::argument, "pointwise op: null operand");
  const bool rg = tracked<R>(tape, {&x});
  auto out = make_tensor<R>(x->n, x->c, x->h, x->w, rg);
  for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = fwd(x->data[i]);
  if (rg) {
    tape->record(out, [x, out, bwd_factor]() {
      for (std::size_t i = 0; i < out->numel(); ++i)
        x->grad[i] += out->grad[i] * bwd_factor(x->data[i], out->data[i]);
    });
  }
  return out;
}

}  // namespace detail

template <class R>
TensorPtrT<R> tanh(TapeT<R>* tape, const TensorPtrT<R>& x) {
  return detail::pointwise<R>(
      tape, x, [](R v) { return std::tanh(v); }, [](R, R y) { return R(1) - y * y; });
}

template <class R>
TensorPtrT<R> relu(TapeT<R>* tape, const TensorPtrT<R>& x) {
  return detail::pointwise<R>(
      tape, x, [](R v) { return v > R(0) ? v : R(0); },
      [](R v, R) { return v > R(0) ? R(1) : R(0); });
}

/// clamp(0.2 x + 0.5, 0, 1)
template <class R>
TensorPtrT<R> hard_sigmoid(TapeT<R>* tape, const TensorPtrT<R>& x) {
  return detail::pointwise<R>(
      tape, x,
      [](R v) { return std::clamp(R(0.2) * v + R(0.5), R(0), R(1)); },
      [](R v, R) { return (v >= R(-2.5) && v <= R(2.5)) ? R(0.2) : R(0); });
}

template <class R>
TensorPtrT<R> clamp01(TapeT<R>* tape, const TensorPtrT<R>& x) {
  return detail::pointwise<R>(
      tape, x, [](R v) { return std::clamp(v, R(0), R(1)); },
      [](R v, R) { return (v >= R(0) && v <= R(1)) ? R(1) : R(0); });
}

template <class R>
TensorPtrT<R> scale(TapeT<R>* tape, const TensorPtrT<R>& x, R s) {
  return detail::pointwise<R>(
      tape, x, [s](R v) { return s * v; }, [s](R, R) { return s; });
}

template <class R>
TensorPtrT<R> sum(TapeT<R>* tape, const TensorPtrT<R>& x) {
  const bool rg = detail::tracked<R>(tape, {&x});
  auto out = make_tensor<R>(1, 1, 1, 1, rg);
  R acc = R(0);
  for (std::size_t i = 0; i < x->numel(); ++i) acc += x->data[i];
  out->data[0] = acc;
  if (rg) {
    tape->record(out, [x, out]() {
      const R g = out->grad[0];
      for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += g;
    });
  }
  return out;
}

template <class R>
TensorPtrT<R> mean(TapeT<R>* tape, const TensorPtrT<R>& x) {
  const bool rg = detail::tracked<R>(tape, {&x});
  auto out = make_tensor<R>(1, 1, 1, 1, rg);
  R acc = R(0);
  for (std::size_t i = 0; i < x->numel(); ++i) acc += x->data[i];
  out->data[0] = acc / static_cast<R>(x->numel());
  if (rg) {
    tape->record(out, [x, out]() {
      const R g = out->grad[0] / static_cast<R>(x->numel());
      for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += g;
    });
  }
  return out;
}

}  // namespace ivp
