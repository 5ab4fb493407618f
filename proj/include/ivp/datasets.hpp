#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ivp/tensor.hpp"

namespace ivp {

/// Ordered video frames, each (1, c, h, w) with values in [0,1].
struct FrameSequence {
  std::vector<TensorPtr> frames;
  std::string source_id;
  double frame_rate_hint = 0.0;  // 0 = unknown

  int channels() const { return frames.empty() ? 0 : frames[0]->c; }
  int height() const { return frames.empty() ? 0 : frames[0]->h; }
  int width() const { return frames.empty() ? 0 : frames[0]->w; }
  int length() const { return static_cast<int>(frames.size()); }
};

enum class ShapeKind : int { square = 0, circle = 1 };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::square;
  int size = 4;                          // bounding box side, pixels
  std::array<double, 3> color = {1, 1, 1};
  int row = 0, col = 0;                  // top-left at t = 0
  int vel_row = 1, vel_col = 1;          // pixels per frame
};

/// Bouncing hard-edged shapes on a black canvas. `auto_shapes` extra
/// entities are drawn deterministically from `seed`; motion is constant
/// velocity with elastic wall reflection.
struct SyntheticSceneSpec {
  int height = 16, width = 16;
  int channels = 3;  // 1 or 3
  int frame_count = 10;
  std::uint64_t seed = 0;
  int auto_shapes = 0;
  std::vector<ShapeSpec> shapes;
};

FrameSequence generate(const SyntheticSceneSpec& spec);

enum class Dtype : int { f32 = 0, f64 = 1 };

void save_sequence(const FrameSequence& seq, const std::string& path, Dtype dtype = Dtype::f32);
FrameSequence load_sequence(const std::string& path);

/// Overlapping windows of `length` frames; the trailing partial window is
/// dropped. Returns an empty list when the sequence is shorter than `length`.
std::vector<FrameSequence> windows(const FrameSequence& seq, int length, int stride);

/// Binary PPM (P6, maxval 255); 1-channel frames are replicated to gray RGB.
void write_ppm(const TensorPtr& frame, const std::string& path);

}  // namespace ivp
