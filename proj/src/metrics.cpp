#include "ivp/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace ivp {

namespace {

void check_pair(const TensorPtr& a, const TensorPtr& b, const char* op) {
  if (!a || !b) fail(ErrorCode::argument, std::string(op) + ": null operand");
  if (!a->same_shape(*b))
    fail(ErrorCode::shape,
         std::string(op) + ": shape mismatch " + a->shape_str() + " vs " + b->shape_str());
}

}  // namespace

double mse(const TensorPtr& a, const TensorPtr& b) {
  check_pair(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a->numel(); ++i) {
    const double d = a->data[i] - b->data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a->numel());
}

double mae(const TensorPtr& a, const TensorPtr& b) {
  check_pair(a, b, "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < a->numel(); ++i) acc += std::abs(a->data[i] - b->data[i]);
  return acc / static_cast<double>(a->numel());
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  //(K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_weights(int size) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double center = (size - 1) * 0.5;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    w[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Separable valid-mode Gaussian blur of one channel plane.
void blur_valid(const double* img, int h, int w, const std::vector<double>& wy,
                const std::vector<double>& wx, std::vector<double>& tmp, std::vector<double>& out) {
  const int wh = static_cast<int>(wy.size()), ww = static_cast<int>(wx.size());
  const int oh = h - wh + 1, ow = w - ww + 1;
  tmp.assign(static_cast<std::size_t>(oh) * w, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < wh; ++k) acc += wy[static_cast<std::size_t>(k)] * img[(y + k) * w + x];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  out.assign(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < ww; ++k) acc += wx[static_cast<std::size_t>(k)] * tmp[static_cast<std::size_t>(y) * w + x + k];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
}

}  // namespace

double ssim(const TensorPtr& a, const TensorPtr& b) {
  check_pair(a, b, "ssim");
  const int h = a->h, w = a->w;
  const auto wy = gaussian_weights(std::min(h, kWindow));
  const auto wx = gaussian_weights(std::min(w, kWindow));

  const int oh = h - static_cast<int>(wy.size()) + 1;
  const int ow = w - static_cast<int>(wx.size()) + 1;
  std::vector<double> tmp, mu1, mu2, s11, s22, s12, plane;
  double total = 0.0;
  std::size_t count = 0;

  for (int n = 0; n < a->n; ++n)
    for (int c = 0; c < a->c; ++c) {
      const double* pa = a->data.data() + a->index(n, c, 0, 0);
      const double* pb = b->data.data() + b->index(n, c, 0, 0);
      blur_valid(pa, h, w, wy, wx, tmp, mu1);
      blur_valid(pb, h, w, wy, wx, tmp, mu2);

      plane.assign(static_cast<std::size_t>(h) * w, 0.0);
      for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = pa[i] * pa[i];
      blur_valid(plane.data(), h, w, wy, wx, tmp, s11);
      for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = pb[i] * pb[i];
      blur_valid(plane.data(), h, w, wy, wx, tmp, s22);
      for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = pa[i] * pb[i];
      blur_valid(plane.data(), h, w, wy, wx, tmp, s12);

      for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) {
        const double m1 = mu1[i], m2 = mu2[i];
        const double v1 = s11[i] - m1 * m1;
        const double v2 = s22[i] - m2 * m2;
        const double cov = s12[i] - m1 * m2;
        const double num = (2.0 * m1 * m2 + kC1) * (2.0 * cov + kC2);
        const double den = (m1 * m1 + m2 * m2 + kC1) * (v1 + v2 + kC2);
        total += num / den;
        ++count;
      }
    }
  return total / static_cast<double>(count);
}

FrameSequence baseline_copy_last(const FrameSequence& frames) {
  if (frames.length() < 2)
    fail(ErrorCode::argument, "baseline_copy_last: need at least 2 frames");
  FrameSequence out;
  out.source_id = frames.source_id;
  out.frames.assign(frames.frames.begin(), frames.frames.end() - 1);
  return out;
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::mae: return "mae";
    case Metric::mse: return "mse";
    case Metric::ssim: return "ssim";
  }
  return "?";
}

int worker_thread_cap() {
  const char* env = std::getenv("IVP_THREADS");
  if (!env || !*env) return 1;
  const int v = std::atoi(env);
  return v < 1 ? 1 : v;
}

EvalReport evaluate_history_curve(const Predictor& predictor,
                                  const std::vector<FrameSequence>& test, int T) {
  if (test.empty()) fail(ErrorCode::argument, "evaluate_history_curve: empty test set");
  if (T < 2) fail(ErrorCode::argument, "evaluate_history_curve: T must be >= 2");
  for (const auto& seq : test)
    if (seq.length() < T)
      fail(ErrorCode::argument, "evaluate_history_curve: sequence '" + seq.source_id +
                                    "' has " + std::to_string(seq.length()) +
                                    " frames, need " + std::to_string(T));

  const int buckets = T - 1;
  const std::size_t nseq = test.size();
  // scores[seq][bucket][metric]
  std::vector<std::vector<std::array<double, kMetricCount>>> scores(
      nseq, std::vector<std::array<double, kMetricCount>>(static_cast<std::size_t>(buckets)));

  auto score_one = [&](std::size_t si) {
    FrameSequence head;
    head.source_id = test[si].source_id;
    head.frames.assign(test[si].frames.begin(), test[si].frames.begin() + T);
    const FrameSequence preds = predictor(head);
    if (preds.length() != buckets)
      fail(ErrorCode::contract, "predictor returned " + std::to_string(preds.length()) +
                                    " frames, expected " + std::to_string(buckets));
    for (int k = 1; k <= buckets; ++k) {
      const auto& pred = preds.frames[static_cast<std::size_t>(k - 1)];
      const auto& truth = head.frames[static_cast<std::size_t>(k)];
      auto& row = scores[si][static_cast<std::size_t>(k - 1)];
      row[static_cast<int>(Metric::mae)] = mae(pred, truth);
      row[static_cast<int>(Metric::mse)] = mse(pred, truth);
      row[static_cast<int>(Metric::ssim)] = ssim(pred, truth);
    }
  };

  const int threads = std::min<int>(worker_thread_cap(), static_cast<int>(nseq));
  if (threads <= 1) {
    for (std::size_t si = 0; si < nseq; ++si) score_one(si);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t]() {
        try {
          for (std::size_t si = static_cast<std::size_t>(t); si < nseq; si += static_cast<std::size_t>(threads))
            score_one(si);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  EvalReport rep;
  rep.sequence_length = T;
  rep.sample_count = static_cast<int>(nseq);
  rep.buckets.resize(static_cast<std::size_t>(buckets));
  std::array<double, kMetricCount> grand{};
  for (int kb = 0; kb < buckets; ++kb) {
    for (int m = 0; m < kMetricCount; ++m) {
      double sum = 0.0;
      for (std::size_t si = 0; si < nseq; ++si) sum += scores[si][static_cast<std::size_t>(kb)][m];
      const double mean_v = sum / static_cast<double>(nseq);
      double var = 0.0;
      if (nseq > 1) {
        for (std::size_t si = 0; si < nseq; ++si) {
          const double d = scores[si][static_cast<std::size_t>(kb)][m] - mean_v;
          var += d * d;
        }
        var /= static_cast<double>(nseq - 1);
      } else {
        rep.degenerate_ci = true;
      }
      auto& st = rep.buckets[static_cast<std::size_t>(kb)][m];
      st.mean = mean_v;
      st.ci95 = nseq > 1 ? 1.96 * std::sqrt(var / static_cast<double>(nseq)) : 0.0;
      st.n = static_cast<int>(nseq);
      grand[static_cast<std::size_t>(m)] += mean_v;
    }
  }
  for (int m = 0; m < kMetricCount; ++m)
    rep.aggregate[static_cast<std::size_t>(m)] = grand[static_cast<std::size_t>(m)] / buckets;
  return rep;
}

namespace {

void csv_number(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += "\"\"";
    else q += c;
  }
  q += "\"";
  return q;
}

}  // namespace

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "history_len,metric,mean,ci95,n\n";
  for (std::size_t kb = 0; kb < report.buckets.size(); ++kb)
    for (int m = 0; m < kMetricCount; ++m) {
      const auto& st = report.buckets[kb][m];
      out << (kb + 1) << "," << metric_name(static_cast<Metric>(m)) << ",";
      csv_number(out, st.mean);
      out << ",";
      csv_number(out, st.ci95);
      out << "," << st.n << "\n";
    }
}

void write_report_csv_labeled(const EvalReport& report, std::ostream& out,
                              const std::string& model, const std::string& source,
                              bool header) {
  if (header) out << "model,source_id,history_len,metric,mean,ci95,n\n";
  for (std::size_t kb = 0; kb < report.buckets.size(); ++kb)
    for (int m = 0; m < kMetricCount; ++m) {
      const auto& st = report.buckets[kb][m];
      out << csv_escape(model) << "," << csv_escape(source) << "," << (kb + 1) << ","
          << metric_name(static_cast<Metric>(m)) << ",";
      csv_number(out, st.mean);
      out << ",";
      csv_number(out, st.ci95);
      out << "," << st.n << "\n";
    }
}

}  // namespace ivp
