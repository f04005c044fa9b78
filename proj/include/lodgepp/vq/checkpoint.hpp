#pragma once

#include <string>

#include "lodgepp/core/binio.hpp"
#include "lodgepp/vq/codebook.hpp"
#include "lodgepp/vq/conv_coder.hpp"

namespace lodgepp::vq {

// ".vqck": magic "VQCK", u32 version(=1), u32 K, u32 C_z, u32 r, then float32
// payloads in order: codebook entries (K x C_z), ema_counts (K), ema_sums
// (K x C_z), then for each of enc1, enc2, dec1, dec2: weight then bias. The
// hidden width is fixed at 64 in version 1.
inline void save_checkpoint(const Codebook& cb, const ConvCoder& coder,
                            const std::string& path) {
  auto os = binio::open_out(path);
  binio::write_magic(os, "VQCK");
  binio::write_u32(os, 1);
  binio::write_u32(os, static_cast<std::uint32_t>(cb.size()));
  binio::write_u32(os, static_cast<std::uint32_t>(cb.dim()));
  binio::write_u32(os, kDownsampleRate);
  binio::write_f32_matrix(os, cb.entries);
  binio::write_f32_vector(os, cb.ema_counts);
  binio::write_f32_matrix(os, cb.ema_sums);
  ConvCoder& mutable_coder = const_cast<ConvCoder&>(coder);
  for (const Mat* w : mutable_coder.weight_refs()) binio::write_f32_matrix(os, *w);
  for (const Vec* b : mutable_coder.bias_refs()) binio::write_f32_vector(os, *b);
  if (!os) throw IoError("write failed: " + path);
}

struct VqCheckpoint {
  Codebook codebook;
  ConvCoder coder;
};

inline VqCheckpoint load_checkpoint(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, "VQCK", path);
  if (binio::read_u32(is) != 1)
    throw IoError("unsupported .vqck version in " + path);
  std::uint32_t k = binio::read_u32(is);
  std::uint32_t c_z = binio::read_u32(is);
  std::uint32_t r = binio::read_u32(is);
  if (r != kDownsampleRate)
    throw IoError("unexpected downsample rate in " + path);
  VqCheckpoint ck;
  ck.codebook.entries = binio::read_f32_matrix(is, k, c_z);
  ck.codebook.ema_counts = binio::read_f32_vector(is, k);
  ck.codebook.ema_sums = binio::read_f32_matrix(is, k, c_z);
  Rng rng(0);
  ck.coder = ConvCoder::random(static_cast<int>(c_z), rng);
  for (Mat* w : ck.coder.weight_refs())
    *w = binio::read_f32_matrix(is, w->rows(), w->cols());
  for (Vec* b : ck.coder.bias_refs()) *b = binio::read_f32_vector(is, b->size());
  return ck;
}

}  // namespace lodgepp::vq
