#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ivp/cells.hpp"
#include "support/oracles.hpp"

using namespace ivp;

namespace {

template <class W>
void zero_params(W& w) {
  for (auto& p : w.parameters())
    std::fill(p.tensor->data.begin(), p.tensor->data.end(), 0.0);
}

template <class W>
std::uint64_t enumerate_scalars(const W& w) {
  std::uint64_t total = 0;
  for (const auto& p : w.parameters()) total += p.tensor->numel();
  return total;
}

TensorPtr shift_down_right(const TensorPtr& t) {
  auto out = zeros_like(t);
  for (int b = 0; b < t->n; ++b)
    for (int c = 0; c < t->c; ++c)
      for (int y = 0; y + 1 < t->h; ++y)
        for (int x = 0; x + 1 < t->w; ++x) out->at(b, c, y + 1, x + 1) = t->at(b, c, y, x);
  return out;
}

}  // namespace

TEST_CASE("conv_lstm_step: zero weights give the half-gate closed form") {
  std::mt19937_64 rng(21);
  auto w = make_conv_lstm<double>(3, 2, 3, rng);
  zero_params(w);
  auto x = oracle::random_tensor(1, 3, 6, 6, rng);
  CellStateT<double> s = zero_cell_state<double>(1, 2, 6, 6);
  fill_uniform(s.c, rng, -2.0, 2.0);
  CellDiagT<double> diag;
  auto [h, s2] = conv_lstm_step<double>(nullptr, w, x, s, &diag);
  for (std::size_t i = 0; i < h->numel(); ++i) {
    CHECK(diag.i->data[i] == 0.5);
    CHECK(diag.f->data[i] == 0.5);
    CHECK(diag.o->data[i] == 0.5);
    CHECK(s2.c->data[i] == 0.5 * s.c->data[i]);
    CHECK(h->data[i] == doctest::Approx(0.5 * std::tanh(0.5 * s.c->data[i])).epsilon(1e-15));
  }
}

TEST_CASE("inception steps: zero weights give the same closed form") {
  std::mt19937_64 rng(22);
  auto w1 = make_inception_v1<double>(3, 2, rng);
  auto w2 = make_inception_v2<double>(3, 2, rng);
  zero_params(w1);
  zero_params(w2);
  auto x = oracle::random_tensor(1, 3, 6, 6, rng);
  auto run = [&](auto&& stepfn, auto& w) {
    CellStateT<double> s = zero_cell_state<double>(1, 6, 6, 6);
    std::mt19937_64 r2(5);
    fill_uniform(s.c, r2, -2.0, 2.0);
    auto [h, s2] = stepfn(nullptr, w, x, s, nullptr);
    for (std::size_t i = 0; i < h->numel(); ++i) {
      CHECK(s2.c->data[i] == 0.5 * s.c->data[i]);
      CHECK(h->data[i] == doctest::Approx(0.5 * std::tanh(0.5 * s.c->data[i])).epsilon(1e-15));
    }
  };
  run([](auto... a) { return inception_v1_step<double>(a...); }, w1);
  run([](auto... a) { return inception_v2_step<double>(a...); }, w2);
}

TEST_CASE("perfect memory: saturated forget gate copies the cell state bit-exactly") {
  std::mt19937_64 rng(23);
  auto x = oracle::random_tensor(1, 3, 5, 5, rng);

  auto wc = make_conv_lstm<double>(3, 2, 3, rng);
  zero_params(wc);
  std::fill(wc.b[kForgetGate]->data.begin(), wc.b[kForgetGate]->data.end(), 10.0);
  std::fill(wc.b[0]->data.begin(), wc.b[0]->data.end(), -10.0);
  CellStateT<double> s = zero_cell_state<double>(1, 2, 5, 5);
  fill_uniform(s.c, rng, -3.0, 3.0);
  auto [hc, sc] = conv_lstm_step<double>(nullptr, wc, x, s);
  for (std::size_t i = 0; i < sc.c->numel(); ++i) CHECK(sc.c->data[i] == s.c->data[i]);

  auto w1 = make_inception_v1<double>(3, 2, rng);
  zero_params(w1);
  for (auto* b : {&w1.b1, &w1.b3, &w1.b5}) {
    std::fill((*b)[kForgetGate]->data.begin(), (*b)[kForgetGate]->data.end(), 10.0);
    std::fill((*b)[0]->data.begin(), (*b)[0]->data.end(), -10.0);
  }
  CellStateT<double> s1 = zero_cell_state<double>(1, 6, 5, 5);
  fill_uniform(s1.c, rng, -3.0, 3.0);
  auto [h1, r1] = inception_v1_step<double>(nullptr, w1, x, s1);
  for (std::size_t i = 0; i < r1.c->numel(); ++i) CHECK(r1.c->data[i] == s1.c->data[i]);

  auto w2 = make_inception_v2<double>(3, 2, rng);
  zero_params(w2);
  for (auto* b : {&w2.b1, &w2.b3, &w2.b_chain}) {
    std::fill((*b)[kForgetGate]->data.begin(), (*b)[kForgetGate]->data.end(), 10.0);
    std::fill((*b)[0]->data.begin(), (*b)[0]->data.end(), -10.0);
  }
  CellStateT<double> s2 = zero_cell_state<double>(1, 6, 5, 5);
  fill_uniform(s2.c, rng, -3.0, 3.0);
  auto [h2, r2] = inception_v2_step<double>(nullptr, w2, x, s2);
  for (std::size_t i = 0; i < r2.c->numel(); ++i) CHECK(r2.c->data[i] == s2.c->data[i]);
}

TEST_CASE("cell steps: output shape contracts") {
  std::mt19937_64 rng(24);
  auto x = oracle::random_tensor(1, 3, 8, 8, rng);

  auto wc = make_conv_lstm<double>(3, 4, 3, rng);
  auto [h, s] = conv_lstm_step<double>(nullptr, wc, x, zero_cell_state<double>(1, 4, 8, 8));
  CHECK(h->c == 4);
  CHECK(s.c->c == 4);
  CHECK(h->h == 8);
  CHECK(h->w == 8);

  auto w1 = make_inception_v1<double>(3, 4, rng);
  auto [h1, s1] = inception_v1_step<double>(nullptr, w1, x, zero_cell_state<double>(1, 12, 8, 8));
  CHECK(h1->c == 12);

  // shape error when the state width disagrees with the weights
  CHECK_THROWS_AS(
      (void)conv_lstm_step<double>(nullptr, wc, x, zero_cell_state<double>(1, 5, 8, 8)), Error);
}

TEST_CASE("inception_v1: branch slices are ordered 1x1, 3x3, 5x5") {
  std::mt19937_64 rng(25);
  auto w = make_inception_v1<double>(3, 4, rng);
  zero_params(w);
  // distinct candidate-branch biases make each slice identifiable
  std::fill(w.b1[kCandidateGate]->data.begin(), w.b1[kCandidateGate]->data.end(), 0.3);
  std::fill(w.b3[kCandidateGate]->data.begin(), w.b3[kCandidateGate]->data.end(), 0.6);
  std::fill(w.b5[kCandidateGate]->data.begin(), w.b5[kCandidateGate]->data.end(), 0.9);
  auto x = oracle::random_tensor(1, 3, 8, 8, rng);
  CellDiagT<double> diag;
  auto [h, s] = inception_v1_step<double>(nullptr, w, x, zero_cell_state<double>(1, 12, 8, 8), &diag);
  CHECK(h->c == 12);
  for (int ch = 0; ch < 12; ++ch) {
    const double want = std::tanh(ch < 4 ? 0.3 : ch < 8 ? 0.6 : 0.9);
    CHECK(diag.g->at(0, ch, 3, 3) == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("inception_v1: with only 1x1 input columns active it is a pointwise LSTM") {
  std::mt19937_64 rng(26);
  const int ci = 3, nb = 2;
  auto w = make_inception_v1<double>(ci, nb, rng);
  // zero the 3x3/5x5 branches and the hidden columns of the 1x1 kernels
  for (int g = 0; g < kGates; ++g) {
    std::fill(w.k3[g]->data.begin(), w.k3[g]->data.end(), 0.0);
    std::fill(w.k5[g]->data.begin(), w.k5[g]->data.end(), 0.0);
    std::fill(w.b3[g]->data.begin(), w.b3[g]->data.end(), 0.0);
    std::fill(w.b5[g]->data.begin(), w.b5[g]->data.end(), 0.0);
    for (int j = 0; j < nb; ++j)
      for (int q = ci; q < ci + 3 * nb; ++q) w.k1[g]->at(j, q, 0, 0) = 0.0;
  }

  const int H = 6, W = 7;
  CellStateT<double> s = zero_cell_state<double>(1, 3 * nb, H, W);
  std::vector<TensorPtr> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(oracle::random_tensor(1, ci, H, W, rng));

  // scalar LSTM oracle over the first-branch channels at sampled pixels
  std::mt19937_64 pick(27);
  for (int trial = 0; trial < 10; ++trial) {
    const int y = static_cast<int>(uniform_index(pick, H));
    const int x = static_cast<int>(uniform_index(pick, W));
    const int j = static_cast<int>(uniform_index(pick, nb));
    double c = 0.0, h = 0.0;
    CellStateT<double> st = s;
    TensorPtr hlib;
    for (const auto& xt : xs) {
      auto gate_pre = [&](int g) {
        double acc = 0.0;
        for (int q = 0; q < ci; ++q) acc += w.k1[g]->at(j, q, 0, 0) * xt->at(0, q, y, x);
        return acc + w.b1[g]->data[j];
      };
      auto hs = [](double v) { return std::clamp(0.2 * v + 0.5, 0.0, 1.0); };
      const double i_g = hs(gate_pre(0));
      const double f_g = hs(gate_pre(1));
      const double g_g = std::tanh(gate_pre(2));
      const double o_g = hs(gate_pre(3));
      c = f_g * c + i_g * g_g;
      h = o_g * std::tanh(c);
      auto [hh, st2] = inception_v1_step<double>(nullptr, w, xt, st);
      st = st2;
      hlib = hh;
    }
    CHECK(hlib->at(0, j, y, x) == doctest::Approx(h).epsilon(1e-12));
  }
}

TEST_CASE("inception_v2 equals v1 when the wide branches are zeroed and the rest is shared") {
  std::mt19937_64 rng(28);
  const int ci = 3, nb = 2;
  auto w1 = make_inception_v1<double>(ci, nb, rng);
  std::mt19937_64 rng2(29);
  auto w2 = make_inception_v2<double>(ci, nb, rng2);
  for (int g = 0; g < kGates; ++g) {
    w2.k1[g]->data = w1.k1[g]->data;
    w2.k3[g]->data = w1.k3[g]->data;
    w2.b1[g]->data = w1.b1[g]->data;
    w2.b3[g]->data = w1.b3[g]->data;
    w2.b_chain[g]->data = w1.b5[g]->data;
    std::fill(w1.k5[g]->data.begin(), w1.k5[g]->data.end(), 0.0);
    std::fill(w2.k3_inner[g]->data.begin(), w2.k3_inner[g]->data.end(), 0.0);
    std::fill(w2.k3_outer[g]->data.begin(), w2.k3_outer[g]->data.end(), 0.0);
  }
  auto x = oracle::random_tensor(1, ci, 6, 6, rng);
  CellStateT<double> s = zero_cell_state<double>(1, 3 * nb, 6, 6);
  fill_uniform(s.h, rng, -0.5, 0.5);
  fill_uniform(s.c, rng, -1.0, 1.0);
  auto [ha, sa] = inception_v1_step<double>(nullptr, w1, x, s);
  auto [hb, sb] = inception_v2_step<double>(nullptr, w2, x, s);
  CHECK(oracle::max_abs_diff(ha, hb) == 0.0);
  CHECK(oracle::max_abs_diff(sa.c, sb.c) == 0.0);
}

TEST_CASE("inception_v2: chained branch has a 5x5 receptive field") {
  std::mt19937_64 rng(30);
  const int ci = 2, nb = 2;
  auto w = make_inception_v2<double>(ci, nb, rng);
  for (int g = 0; g < kGates; ++g) {
    std::fill(w.k1[g]->data.begin(), w.k1[g]->data.end(), 0.0);
    std::fill(w.k3[g]->data.begin(), w.k3[g]->data.end(), 0.0);
    std::fill(w.b1[g]->data.begin(), w.b1[g]->data.end(), 0.0);
    std::fill(w.b3[g]->data.begin(), w.b3[g]->data.end(), 0.0);
    std::fill(w.b_chain[g]->data.begin(), w.b_chain[g]->data.end(), 0.0);
  }
  auto x = oracle::random_tensor(1, ci, 11, 11, rng);
  CellStateT<double> s = zero_cell_state<double>(1, 3 * nb, 11, 11);
  auto [h0, s0] = inception_v2_step<double>(nullptr, w, x, s);

  const int cy = 5, cx = 5;
  auto probe = [&](int dist) {
    auto xp = clone_values(x);
    xp->at(0, 0, cy + dist, cx + dist) += 1.0;
    auto [hp, sp] = inception_v2_step<double>(nullptr, w, xp, s);
    double delta = 0.0;
    for (int ch = 0; ch < 3 * nb; ++ch)
      delta = std::max(delta, std::abs(hp->at(0, ch, cy, cx) - h0->at(0, ch, cy, cx)));
    return delta;
  };
  CHECK(probe(3) == 0.0);
  CHECK(probe(2) > 0.0);
}

TEST_CASE("param_count: coefficients, totals, enumeration") {
  std::mt19937_64 rng(31);

  auto wc = make_conv_lstm<double>(1, 1, 3, rng);
  auto pc = param_count(wc);
  CHECK(pc.total == 76);  // 4 gates x (9+9) kernel + 4 biases
  CHECK(pc.per_gate_kernel_coeff == 18);
  CHECK(pc.total == enumerate_scalars(wc));

  auto w1 = make_inception_v1<double>(3, 16, rng);
  auto p1 = param_count(w1);
  CHECK(p1.per_gate_kernel_coeff == 35);
  CHECK(p1.total == enumerate_scalars(w1));

  auto w2 = make_inception_v2<double>(3, 16, rng);
  auto p2 = param_count(w2);
  CHECK(p2.per_gate_kernel_coeff == 28);
  CHECK(p2.total == enumerate_scalars(w2));

  CHECK(p1.per_gate_kernel_coeff - p2.per_gate_kernel_coeff == 7);

  auto wbig = make_conv_lstm<double>(5, 7, 5, rng);
  CHECK(param_count(wbig).total == enumerate_scalars(wbig));
}

TEST_CASE("cell steps are differentiable end to end") {
  std::mt19937_64 rng(32);
  auto x = oracle::random_tensor(1, 2, 5, 5, rng, -1, 1);
  auto proj_h = oracle::random_tensor(1, 2, 5, 5, rng);
  auto proj_c = oracle::random_tensor(1, 2, 5, 5, rng);
  auto proj_h6 = oracle::random_tensor(1, 6, 5, 5, rng);
  auto proj_c6 = oracle::random_tensor(1, 6, 5, 5, rng);

  SUBCASE("conv_lstm") {
    auto w = make_conv_lstm<double>(2, 2, 3, rng);
    CellStateT<double> s = zero_cell_state<double>(1, 2, 5, 5);
    fill_uniform(s.h, rng, -0.5, 0.5);
    fill_uniform(s.c, rng, -1.0, 1.0);
    std::vector<TensorPtr> params;
    for (auto& p : w.parameters()) params.push_back(p.tensor);
    auto rep = oracle::grad_check(params, [&](Tape* t) {
      auto [h, s2] = conv_lstm_step<double>(t, w, x, s);
      return add<double>(t, mean<double>(t, hadamard<double>(t, h, proj_h)),
                         mean<double>(t, hadamard<double>(t, s2.c, proj_c)));
    }, 6, 41);
    CHECK(rep.checked >= 20);
    CHECK(rep.ok());
  }
  SUBCASE("inception_v1") {
    auto w = make_inception_v1<double>(2, 2, rng);
    CellStateT<double> s = zero_cell_state<double>(1, 6, 5, 5);
    fill_uniform(s.h, rng, -0.5, 0.5);
    fill_uniform(s.c, rng, -1.0, 1.0);
    std::vector<TensorPtr> params;
    for (auto& p : w.parameters()) params.push_back(p.tensor);
    auto rep = oracle::grad_check(params, [&](Tape* t) {
      auto [h, s2] = inception_v1_step<double>(t, w, x, s);
      return add<double>(t, mean<double>(t, hadamard<double>(t, h, proj_h6)),
                         mean<double>(t, hadamard<double>(t, s2.c, proj_c6)));
    }, 4, 42);
    CHECK(rep.checked >= 20);
    CHECK(rep.ok());
  }
  SUBCASE("inception_v2") {
    auto w = make_inception_v2<double>(2, 2, rng);
    CellStateT<double> s = zero_cell_state<double>(1, 6, 5, 5);
    fill_uniform(s.h, rng, -0.5, 0.5);
    fill_uniform(s.c, rng, -1.0, 1.0);
    std::vector<TensorPtr> params;
    for (auto& p : w.parameters()) params.push_back(p.tensor);
    auto rep = oracle::grad_check(params, [&](Tape* t) {
      auto [h, s2] = inception_v2_step<double>(t, w, x, s);
      return add<double>(t, mean<double>(t, hadamard<double>(t, h, proj_h6)),
                         mean<double>(t, hadamard<double>(t, s2.c, proj_c6)));
    }, 4, 43);
    CHECK(rep.checked >= 20);
    CHECK(rep.ok());
  }
}

TEST_CASE("gate ranges and hidden-state bounds on random inputs") {
  std::mt19937_64 rng(33);
  auto x = oracle::random_tensor(1, 3, 6, 6, rng, -2.0, 2.0);
  auto run_checks = [](const CellDiagT<double>& d, const TensorPtr& h) {
    for (auto* g : {&d.i, &d.f, &d.o})
      for (double v : (*g)->data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    for (double v : h->data) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  };

  auto wc = make_conv_lstm<double>(3, 2, 3, rng);
  CellStateT<double> sc = zero_cell_state<double>(1, 2, 6, 6);
  fill_uniform(sc.h, rng, -0.9, 0.9);
  fill_uniform(sc.c, rng, -3.0, 3.0);
  CellDiagT<double> dc;
  auto [hc, s2c] = conv_lstm_step<double>(nullptr, wc, x, sc, &dc);
  run_checks(dc, hc);

  auto w1 = make_inception_v1<double>(3, 2, rng);
  CellStateT<double> s1 = zero_cell_state<double>(1, 6, 6, 6);
  fill_uniform(s1.h, rng, -0.9, 0.9);
  fill_uniform(s1.c, rng, -3.0, 3.0);
  CellDiagT<double> d1;
  auto [h1, r1] = inception_v1_step<double>(nullptr, w1, x, s1, &d1);
  run_checks(d1, h1);

  auto w2 = make_inception_v2<double>(3, 2, rng);
  CellDiagT<double> d2;
  auto [h2, r2] = inception_v2_step<double>(nullptr, w2, x, s1, &d2);
  run_checks(d2, h2);
}

TEST_CASE("candidate gate nonlinearity flag restores the printed sigmoid form") {
  std::mt19937_64 rng(34);
  auto w = make_inception_v1<double>(3, 2, rng, true);
  zero_params(w);
  auto x = oracle::random_tensor(1, 3, 4, 4, rng);
  CellDiagT<double> d;
  auto [h, s] = inception_v1_step<double>(nullptr, w, x, zero_cell_state<double>(1, 6, 4, 4), &d);
  for (double v : d.g->data) CHECK(v == 0.5);  // sigma(0) instead of tanh(0)
}

TEST_CASE("spatial equivariance away from borders") {
  std::mt19937_64 rng(35);
  const int H = 12, W = 12;
  auto x = oracle::random_tensor(1, 2, H, W, rng);
  auto check_equivariance = [&](auto stepfn, auto& w, int hidden) {
    CellStateT<double> s = zero_cell_state<double>(1, hidden, H, W);
    fill_uniform(s.h, rng, -0.5, 0.5);
    fill_uniform(s.c, rng, -1.0, 1.0);
    CellStateT<double> ss{shift_down_right(s.h), shift_down_right(s.c)};
    auto [h0, r0] = stepfn(w, x, s);
    auto [h1, r1] = stepfn(w, shift_down_right(x), ss);
    for (int c = 0; c < hidden; ++c)
      for (int y = 3; y < H - 4; ++y)
        for (int xx = 3; xx < W - 4; ++xx)
          CHECK(h1->at(0, c, y + 1, xx + 1) == h0->at(0, c, y, xx));
  };

  auto wc = make_conv_lstm<double>(2, 2, 3, rng);
  check_equivariance(
      [](const auto& w, const auto& x, const auto& s) { return conv_lstm_step<double>(nullptr, w, x, s); },
      wc, 2);
  auto w1 = make_inception_v1<double>(2, 1, rng);
  check_equivariance(
      [](const auto& w, const auto& x, const auto& s) { return inception_v1_step<double>(nullptr, w, x, s); },
      w1, 3);
  auto w2 = make_inception_v2<double>(2, 1, rng);
  check_equivariance(
      [](const auto& w, const auto& x, const auto& s) { return inception_v2_step<double>(nullptr, w, x, s); },
      w2, 3);
}
