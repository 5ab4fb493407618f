#pragma once

#include <array>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "ivp/datasets.hpp"
#include "ivp/tensor.hpp"

namespace ivp {

double mse(const TensorPtr& a, const TensorPtr& b);
double mae(const TensorPtr& a, const TensorPtr& b);

/// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1. Computed per channel over all
/// fully-contained window positions, then averaged; frames smaller than the
/// window get a shrunk, renormalized window.
double ssim(const TensorPtr& a, const TensorPtr& b);

/// Prediction at t is frame t-1; requires at least 2 frames.
FrameSequence baseline_copy_last(const FrameSequence& frames);

inline constexpr int kMetricCount = 3;
enum class Metric : int { mae = 0, mse = 1, ssim = 2 };
const char* metric_name(Metric m);

struct MetricStats {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * sd / sqrt(n)
  int n = 0;
};

/// Per-history-length scores: bucket k holds the metrics of the prediction
/// of frame k given frames 0..k-1, aggregated across sequences.
struct EvalReport {
  int sequence_length = 0;                          // T
  std::vector<std::array<MetricStats, kMetricCount>> buckets;  // size T-1
  std::array<double, kMetricCount> aggregate{};     // mean over all samples
  int sample_count = 0;                             // sequences scored
  bool degenerate_ci = false;                       // n == 1 somewhere

  const MetricStats& at(int history_len, Metric m) const {
    return buckets.at(static_cast<std::size_t>(history_len - 1))[static_cast<int>(m)];
  }
};

/// Maps the first T frames of a sequence to T-1 predictions (prediction i
/// targets frame i+1). Must be safe to call from multiple threads.
using Predictor = std::function<FrameSequence(const FrameSequence&)>;

/// Scores `predictor` on the first T frames of every sequence. Sequences are
/// processed in parallel when the IVP_THREADS environment variable allows;
/// results do not depend on the thread count.
EvalReport evaluate_history_curve(const Predictor& predictor,
                                  const std::vector<FrameSequence>& test, int T);

/// Core CSV shape: history_len,metric,mean,ci95,n.
void write_report_csv(const EvalReport& report, std::ostream& out);

/// Same rows prefixed with model and source labels; optionally skips the
/// header so several reports can share one file.
void write_report_csv_labeled(const EvalReport& report, std::ostream& out,
                              const std::string& model, const std::string& source,
                              bool header);

int worker_thread_cap();  // from IVP_THREADS, default 1

}  // namespace ivp
