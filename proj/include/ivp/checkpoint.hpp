#pragma once

#include <sstream>
#include <string>

#include "ivp/io.hpp"
#include "ivp/training.hpp"

namespace ivp {

// IVCK v1: header (architecture + counters + RNG state) followed by a
// named-tensor table holding every parameter and its Adam moments. Loading a
// checkpoint restores training bit-exactly on the same platform.

namespace detail {

inline constexpr char kCheckpointMagic[4] = {'I', 'V', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class R>
constexpr Precision precision_of() {
  return sizeof(R) == 4 ? Precision::f32 : Precision::f64;
}

template <class R>
void write_named_tensor(ByteWriter& w, const std::string& name, const TensorT<R>& shape_like,
                        const std::vector<R>& values) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(shape_like.n));
  w.u32(static_cast<std::uint32_t>(shape_like.c));
  w.u32(static_cast<std::uint32_t>(shape_like.h));
  w.u32(static_cast<std::uint32_t>(shape_like.w));
  for (R v : values) {
    if constexpr (sizeof(R) == 4)
      w.f32(static_cast<float>(v));
    else
      w.f64(static_cast<double>(v));
  }
}

template <class R>
void read_named_tensor(ByteReader& r, const std::string& want_name, TensorT<R>& shape_like,
                       std::vector<R>& out) {
  const std::uint64_t at = r.offset();
  const std::string name = r.str();
  if (name != want_name)
    throw FormatError("tensor name mismatch: found '" + name + "', expected '" + want_name + "'", at);
  const std::uint32_t n = r.u32(), c = r.u32(), h = r.u32(), w = r.u32();
  if (static_cast<int>(n) != shape_like.n || static_cast<int>(c) != shape_like.c ||
      static_cast<int>(h) != shape_like.h || static_cast<int>(w) != shape_like.w)
    throw FormatError("tensor shape mismatch for '" + name + "'", at);
  out.resize(shape_like.numel());
  for (auto& v : out) {
    if constexpr (sizeof(R) == 4)
      v = r.f32();
    else
      v = r.f64();
  }
}

}  // namespace detail

template <class R>
void save_checkpoint(const ModelT<R>& model, const std::string& path) {
  const auto& net = model.net;
  auto params = net.parameters();

  ByteWriter w(path);
  w.bytes(detail::kCheckpointMagic, 4);
  w.u32(detail::kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(detail::precision_of<R>()));
  std::uint32_t flags = 0;
  if (net.options.candidate_sigmoid) flags |= 1u;
  if (model.rng_seeded) flags |= 2u;
  w.u32(flags);
  w.u32(static_cast<std::uint32_t>(net.options.conv_kernel));
  w.u32(static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& cfg : net.configs) {
    w.u32(static_cast<std::uint32_t>(cfg.input_channels));
    w.u32(static_cast<std::uint32_t>(cfg.hidden_channels));
    w.u32(static_cast<std::uint32_t>(cfg.cell_type));
  }
  w.u64(net.seed);
  w.u64(model.step);
  std::ostringstream rng_text;
  rng_text << model.rng;
  w.str(rng_text.str());

  w.u32(static_cast<std::uint32_t>(3 * params.size()));
  for (const auto& p : params) detail::write_named_tensor<R>(w, p.name, *p.tensor, p.tensor->data);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::vector<R> zero(params[i].tensor->numel(), R(0));
    detail::write_named_tensor<R>(w, "adam.m." + params[i].name, *params[i].tensor,
                                  model.opt.initialized() ? model.opt.m[i] : zero);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::vector<R> zero(params[i].tensor->numel(), R(0));
    detail::write_named_tensor<R>(w, "adam.v." + params[i].name, *params[i].tensor,
                                  model.opt.initialized() ? model.opt.v[i] : zero);
  }
  w.close();
}

/// Reads just enough of the header to pick the right precision to load with.
inline Precision peek_checkpoint_precision(const std::string& path) {
  ByteReader r(path);
  r.expect_magic(detail::kCheckpointMagic);
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32();
  if (version != detail::kCheckpointVersion)
    fail(ErrorCode::version, "unsupported checkpoint version " + std::to_string(version) +
                                 " (byte offset " + std::to_string(version_at) + ")");
  const std::uint64_t prec_at = r.offset();
  const std::uint32_t prec = r.u32();
  if (prec > 1) throw FormatError("unknown precision " + std::to_string(prec), prec_at);
  return static_cast<Precision>(prec);
}

template <class R>
ModelT<R> load_checkpoint(const std::string& path) {
  ByteReader r(path);
  r.expect_magic(detail::kCheckpointMagic);
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32();
  if (version != detail::kCheckpointVersion)
    fail(ErrorCode::version, "unsupported checkpoint version " + std::to_string(version) +
                                 " (byte offset " + std::to_string(version_at) + ")");
  const std::uint64_t prec_at = r.offset();
  const std::uint32_t prec = r.u32();
  if (prec != static_cast<std::uint32_t>(detail::precision_of<R>()))
    throw FormatError("checkpoint precision does not match the requested load", prec_at);
  const std::uint32_t flags = r.u32();
  StackOptions options;
  options.candidate_sigmoid = (flags & 1u) != 0;
  options.conv_kernel = static_cast<int>(r.u32());
  const std::uint64_t layers_at = r.offset();
  const std::uint32_t layer_count = r.u32();
  if (layer_count < 1 || layer_count > 4)
    throw FormatError("bad layer count " + std::to_string(layer_count), layers_at);
  std::vector<LayerConfig> configs;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    LayerConfig cfg;
    cfg.input_channels = static_cast<int>(r.u32());
    cfg.hidden_channels = static_cast<int>(r.u32());
    const std::uint64_t ct_at = r.offset();
    const std::uint32_t ct = r.u32();
    if (ct > 2) throw FormatError("bad cell type " + std::to_string(ct), ct_at);
    cfg.cell_type = static_cast<CellType>(ct);
    configs.push_back(cfg);
  }
  const std::uint64_t seed = r.u64();

  ModelT<R> model;
  model.net = build_network<R>(configs, seed, options);
  model.step = r.u64();
  {
    std::istringstream rng_text(r.str());
    rng_text >> model.rng;
    if (!rng_text) throw FormatError("corrupt RNG state", r.offset());
  }
  model.rng_seeded = (flags & 2u) != 0;

  auto params = model.net.parameters();
  const std::uint64_t count_at = r.offset();
  const std::uint32_t tensor_count = r.u32();
  if (tensor_count != 3 * params.size())
    throw FormatError("tensor count mismatch: file has " + std::to_string(tensor_count) +
                          ", architecture needs " + std::to_string(3 * params.size()),
                      count_at);
  for (auto& p : params) detail::read_named_tensor<R>(r, p.name, *p.tensor, p.tensor->data);
  model.opt.m.resize(params.size());
  model.opt.v.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    detail::read_named_tensor<R>(r, "adam.m." + params[i].name, *params[i].tensor, model.opt.m[i]);
  for (std::size_t i = 0; i < params.size(); ++i)
    detail::read_named_tensor<R>(r, "adam.v." + params[i].name, *params[i].tensor, model.opt.v[i]);
  r.expect_eof();
  return model;
}

}  // namespace ivp
