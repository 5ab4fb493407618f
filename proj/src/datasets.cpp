#include "ivp/datasets.hpp"

#include <algorithm>
#include <cmath>

#include "ivp/io.hpp"

namespace ivp {

namespace {

constexpr char kMagic[4] = {'I', 'V', 'S', 'Q'};
constexpr std::uint32_t kVersion = 1;

// Reflected 1-d position: p0 bounces between 0 and limit with |v| preserved.
int bounce(int p0, int v, int t, int limit) {
  if (limit <= 0) return 0;
  const long long period = 2LL * limit;
  long long q = (p0 + static_cast<long long>(v) * t) % period;
  if (q < 0) q += period;
  return static_cast<int>(q <= limit ? q : period - q);
}

void draw_shape(Tensor& frame, const ShapeSpec& s, int row, int col, int channels) {
  const double cc = (s.size - 1) * 0.5;
  const double r2 = 0.25 * s.size * s.size;
  for (int dy = 0; dy < s.size; ++dy)
    for (int dx = 0; dx < s.size; ++dx) {
      if (s.kind == ShapeKind::circle) {
        const double ddy = dy - cc, ddx = dx - cc;
        if (ddy * ddy + ddx * ddx > r2) continue;
      }
      for (int c = 0; c < channels; ++c)
        frame.at(0, c, row + dy, col + dx) = std::clamp(s.color[static_cast<std::size_t>(c % 3)], 0.0, 1.0);
    }
}

// Palette values are multiples of 1/16 so float32 files round-trip exactly.
double palette_color(std::mt19937_64& rng) {
  return static_cast<double>(4 + uniform_index(rng, 13)) / 16.0;
}

std::vector<ShapeSpec> materialize_shapes(const SyntheticSceneSpec& spec) {
  std::vector<ShapeSpec> shapes = spec.shapes;
  std::mt19937_64 rng(spec.seed);
  for (int i = 0; i < spec.auto_shapes; ++i) {
    ShapeSpec s;
    s.kind = uniform_index(rng, 2) == 0 ? ShapeKind::square : ShapeKind::circle;
    const int max_size = std::max(3, std::min(spec.height, spec.width) / 3);
    s.size = 3 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_size - 3 + 1)));
    for (auto& c : s.color) c = palette_color(rng);
    s.row = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.height - s.size + 1)));
    s.col = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.width - s.size + 1)));
    const int speeds[4] = {-2, -1, 1, 2};
    s.vel_row = speeds[uniform_index(rng, 4)];
    s.vel_col = speeds[uniform_index(rng, 4)];
    shapes.push_back(s);
  }
  return shapes;
}

}  // namespace

FrameSequence generate(const SyntheticSceneSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.frame_count < 1)
    fail(ErrorCode::argument, "generate: canvas and frame count must be positive");
  if (spec.channels != 1 && spec.channels != 3)
    fail(ErrorCode::argument, "generate: channels must be 1 or 3");

  const auto shapes = materialize_shapes(spec);
  for (const auto& s : shapes) {
    if (s.size < 1 || s.size > spec.height || s.size > spec.width)
      fail(ErrorCode::argument, "generate: shape of size " + std::to_string(s.size) +
                                    " does not fit a " + std::to_string(spec.height) + "x" +
                                    std::to_string(spec.width) + " canvas");
    if (s.vel_row == 0 && s.vel_col == 0)
      fail(ErrorCode::argument, "generate: shape velocity must be nonzero");
    if (s.row < 0 || s.col < 0 || s.row + s.size > spec.height || s.col + s.size > spec.width)
      fail(ErrorCode::argument, "generate: shape starts out of canvas");
  }

  FrameSequence seq;
  seq.source_id = "synthetic-" + std::to_string(spec.seed);
  for (int t = 0; t < spec.frame_count; ++t) {
    auto frame = make_tensor<double>(1, spec.channels, spec.height, spec.width);
    for (const auto& s : shapes) {
      const int row = bounce(s.row, s.vel_row, t, spec.height - s.size);
      const int col = bounce(s.col, s.vel_col, t, spec.width - s.size);
      draw_shape(*frame, s, row, col, spec.channels);
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

void save_sequence(const FrameSequence& seq, const std::string& path, Dtype dtype) {
  if (seq.frames.empty()) fail(ErrorCode::argument, "save_sequence: empty sequence");
  ByteWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(seq.frames.size()));
  w.u32(static_cast<std::uint32_t>(seq.channels()));
  w.u32(static_cast<std::uint32_t>(seq.height()));
  w.u32(static_cast<std::uint32_t>(seq.width()));
  w.u32(static_cast<std::uint32_t>(dtype));
  w.u32(0);  // reserved
  for (const auto& f : seq.frames) {
    if (f->c != seq.channels() || f->h != seq.height() || f->w != seq.width())
      fail(ErrorCode::shape, "save_sequence: inconsistent frame shapes");
    for (double v : f->data) {
      if (dtype == Dtype::f32)
        w.f32(static_cast<float>(v));
      else
        w.f64(v);
    }
  }
  w.close();
}

FrameSequence load_sequence(const std::string& path) {
  ByteReader r(path);
  r.expect_magic(kMagic);
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("unsupported sequence version " + std::to_string(version), version_at);
  const std::uint64_t dims_at = r.offset();
  const std::uint64_t frames = r.u32();
  const std::uint64_t channels = r.u32();
  const std::uint64_t height = r.u32();
  const std::uint64_t width = r.u32();
  const std::uint64_t dtype_at = r.offset();
  const std::uint32_t dtype = r.u32();
  if (dtype > 1) throw FormatError("unknown dtype " + std::to_string(dtype), dtype_at);
  r.u32();  // reserved

  if (frames == 0 || channels == 0 || height == 0 || width == 0)
    throw FormatError("zero dimension in header", dims_at);
  const std::uint64_t per_frame = channels * height * width;
  if (per_frame == 0 || per_frame > (1ULL << 40) || frames > (1ULL << 30) ||
      per_frame > (1ULL << 62) / frames)
    throw FormatError("dimension overflow in header", dims_at);

  const std::size_t elem = dtype == 0 ? 4 : 8;
  FrameSequence seq;
  seq.source_id = path;
  for (std::uint64_t t = 0; t < frames; ++t) {
    if (r.remaining() < per_frame * elem)
      throw FormatError("truncated file in '" + path + "'", r.offset() + r.remaining());
    auto f = make_tensor<double>(1, static_cast<int>(channels), static_cast<int>(height),
                                 static_cast<int>(width));
    for (auto& v : f->data) v = dtype == 0 ? static_cast<double>(r.f32()) : r.f64();
    seq.frames.push_back(std::move(f));
  }
  r.expect_eof();
  return seq;
}

std::vector<FrameSequence> windows(const FrameSequence& seq, int length, int stride) {
  if (length < 2) fail(ErrorCode::argument, "windows: length must be >= 2");
  if (stride < 1) fail(ErrorCode::argument, "windows: stride must be >= 1");
  std::vector<FrameSequence> out;
  for (int start = 0; start + length <= seq.length(); start += stride) {
    FrameSequence w;
    w.source_id = seq.source_id;
    w.frame_rate_hint = seq.frame_rate_hint;
    w.frames.assign(seq.frames.begin() + start, seq.frames.begin() + start + length);
    out.push_back(std::move(w));
  }
  return out;
}

void write_ppm(const TensorPtr& frame, const std::string& path) {
  if (!frame || (frame->c != 1 && frame->c != 3))
    fail(ErrorCode::argument, "write_ppm: frame must have 1 or 3 channels");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
  f << "P6\n" << frame->w << " " << frame->h << "\n255\n";
  for (int y = 0; y < frame->h; ++y)
    for (int x = 0; x < frame->w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = frame->at(0, frame->c == 1 ? 0 : c, y, x);
        const int q = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        f.put(static_cast<char>(q));
      }
  if (!f) fail(ErrorCode::io, "write to '" + path + "' failed");
}

}  // namespace ivp
