#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "lodgepp/core/binio.hpp"
#include "lodgepp/music/features.hpp"

namespace lodgepp::music {

// ".mfeat": magic "MFEA", u32 version(=1), u32 L, u32 dims(=35), float32
// row-major little-endian.
inline void save_mfeat(const MusicFeatures& mf, const std::string& path) {
  auto os = binio::open_out(path);
  binio::write_magic(os, "MFEA");
  binio::write_u32(os, 1);
  binio::write_u32(os, static_cast<std::uint32_t>(mf.frames()));
  binio::write_u32(os, MusicFeatures::kDim);
  binio::write_f32_matrix(os, mf.data);
  if (!os) throw IoError("write failed: " + path);
}

inline MusicFeatures load_mfeat(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, "MFEA", path);
  if (binio::read_u32(is) != 1)
    throw IoError("unsupported .mfeat version in " + path);
  std::uint32_t frames = binio::read_u32(is);
  std::uint32_t dims = binio::read_u32(is);
  if (dims != MusicFeatures::kDim)
    throw IoError("unexpected .mfeat width in " + path);
  MusicFeatures mf;
  mf.data = binio::read_f32_matrix(is, frames, dims);
  return mf;
}

inline void save_mfeat_json(const MusicFeatures& mf, const std::string& path) {
  nlohmann::json j;
  j["fps"] = mf.fps;
  j["dims"] = MusicFeatures::kDim;
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mf.frames(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < mf.data.cols(); ++c) row.push_back(mf.data(i, c));
    rows.push_back(std::move(row));
  }
  j["frames"] = std::move(rows);
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump();
}

}  // namespace lodgepp::music
