#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "lodgepp/core/binio.hpp"
#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"

namespace lodgepp::music {

struct AudioClip {
  Vec samples;  // mono, [-1, 1]
  double sample_rate = 0.0;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  void validate() const {
    if (sample_rate < 8000.0)
      throw DataError("audio sample rate must be at least 8000 Hz");
    if (!samples.allFinite()) throw DataError("audio contains non-finite samples");
  }
};

namespace detail {

inline std::uint16_t read_u16(std::istream& is) {
  std::uint16_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw IoError("unexpected end of wav file");
  return v;
}

}  // namespace detail

// PCM 16/24-bit and float32 WAV; stereo is averaged to mono on load.
inline AudioClip load_wav(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, "RIFF", path);
  binio::read_u32(is);  // riff size
  binio::expect_magic(is, "WAVE", path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;
  while (is && !(have_fmt && have_data)) {
    char id[4];
    is.read(id, 4);
    if (!is) break;
    std::uint32_t size = binio::read_u32(is);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = detail::read_u16(is);
      channels = detail::read_u16(is);
      rate = binio::read_u32(is);
      binio::read_u32(is);  // byte rate
      detail::read_u16(is);  // block align
      bits = detail::read_u16(is);
      if (size > 16) is.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data.resize(size);
      is.read(data.data(), size);
      if (!is) throw IoError("truncated wav data chunk in " + path);
      have_data = true;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data) throw IoError("missing fmt/data chunk in " + path);
  if (channels == 0 || rate == 0) throw IoError("invalid wav header in " + path);

  const bool pcm = format == 1;
  const bool ieee = format == 3;
  if (!(pcm && (bits == 16 || bits == 24)) && !(ieee && bits == 32))
    throw IoError("unsupported wav encoding (PCM16/24 or float32 only)");

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_count = data.size() / (bytes_per_sample * channels);
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(static_cast<Eigen::Index>(frame_count));
  const char* p = data.data();
  for (size_t i = 0; i < frame_count; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      double v = 0.0;
      if (pcm && bits == 16) {
        std::int16_t s;
        std::memcpy(&s, p, 2);
        v = s / 32768.0;
      } else if (pcm && bits == 24) {
        std::int32_t s = (static_cast<unsigned char>(p[2]) << 24 |
                          static_cast<unsigned char>(p[1]) << 16 |
                          static_cast<unsigned char>(p[0]) << 8) >>
                         8;
        v = s / 8388608.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        v = f;
      }
      acc += v;
      p += bytes_per_sample;
    }
    clip.samples(static_cast<Eigen::Index>(i)) = acc / channels;
  }
  clip.validate();
  return clip;
}

inline void save_wav(const AudioClip& clip, const std::string& path) {
  auto os = binio::open_out(path);
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t rate = static_cast<std::uint32_t>(clip.sample_rate);
  const std::uint32_t data_bytes = n * 2;
  auto write_u16 = [&os](std::uint16_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  binio::write_magic(os, "RIFF");
  binio::write_u32(os, 36 + data_bytes);
  binio::write_magic(os, "WAVE");
  binio::write_magic(os, "fmt ");
  binio::write_u32(os, 16);
  write_u16(1);  // PCM
  write_u16(1);  // mono
  binio::write_u32(os, rate);
  binio::write_u32(os, rate * 2);
  write_u16(2);
  write_u16(16);
  binio::write_magic(os, "data");
  binio::write_u32(os, data_bytes);
  for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
    double v = std::clamp(clip.samples(i), -1.0, 1.0);
    auto s = static_cast<std::int16_t>(std::lround(v * 32767.0));
    os.write(reinterpret_cast<const char*>(&s), sizeof(s));
  }
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace lodgepp::music
