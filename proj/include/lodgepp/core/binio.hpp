#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"

namespace lodgepp::binio {

// All binary file formats in this project are little-endian. The helpers
// below assume a little-endian host (asserted once at startup in the CLI;
// every supported target is).

inline void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw IoError("unexpected end of file while reading u32");
  return v;
}

inline void write_magic(std::ostream& os, const char magic[4]) {
  os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char magic[4],
                         const std::string& what) {
  char buf[4] = {};
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw IoError("bad magic bytes in " + what);
}

inline void write_f32_matrix(std::ostream& os, const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      float f = static_cast<float>(m(i, j));
      os.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
}

inline Mat read_f32_matrix(std::istream& is, Eigen::Index rows,
                           Eigen::Index cols) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      float f = 0;
      is.read(reinterpret_cast<char*>(&f), sizeof(f));
      if (!is) throw IoError("unexpected end of file while reading f32 data");
      m(i, j) = static_cast<double>(f);
    }
  return m;
}

inline void write_f32_vector(std::ostream& os, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    float f = static_cast<float>(v(i));
    os.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
}

inline Vec read_f32_vector(std::istream& is, Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    float f = 0;
    is.read(reinterpret_cast<char*>(&f), sizeof(f));
    if (!is) throw IoError("unexpected end of file while reading f32 data");
    v(i) = static_cast<double>(f);
  }
  return v;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return is;
}

}  // namespace lodgepp::binio
