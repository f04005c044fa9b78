#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lodgepp/core/binio.hpp"
#include "lodgepp/core/error.hpp"
#include "lodgepp/motion/kinematics.hpp"
#include "lodgepp/motion/sequence.hpp"

namespace lodgepp::motion {

// --- JSON motion format ----------------------------------------------------
// {"fps":30,"layout":"lodgepp-139","frames":[[139 floats]...]}

inline void save_json(const MotionSequence& seq, const std::string& path) {
  nlohmann::json j;
  j["fps"] = seq.fps;
  j["layout"] = "lodgepp-139";
  auto frames = nlohmann::json::array();
  for (Eigen::Index i = 0; i < seq.frames(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < seq.data.cols(); ++c) row.push_back(seq.data(i, c));
    frames.push_back(std::move(row));
  }
  j["frames"] = std::move(frames);
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump();
}

inline MotionSequence load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid motion json in " + path + ": " + e.what());
  }
  if (j.value("layout", "") != std::string("lodgepp-139"))
    throw IoError("unexpected motion layout in " + path);
  MotionSequence seq;
  seq.fps = j.value("fps", 30.0);
  const auto& frames = j.at("frames");
  seq.data.resize(static_cast<Eigen::Index>(frames.size()), layout::kFrameDim);
  for (Eigen::Index i = 0; i < seq.frames(); ++i) {
    const auto& row = frames[static_cast<size_t>(i)];
    if (row.size() != layout::kFrameDim)
      throw IoError("motion json frame has wrong width");
    for (Eigen::Index c = 0; c < layout::kFrameDim; ++c)
      seq.data(i, c) = row[static_cast<size_t>(c)].get<double>();
  }
  return seq;
}

// --- .mseq binary format ---------------------------------------------------
// "MSEQ", u32 version(=1), u32 frame_count, u32 dims(=139), then
// frame_count x dims float32 row-major, little-endian. Frame rate is fixed
// at 30 fps by the format.

inline void save_mseq(const MotionSequence& seq, const std::string& path) {
  auto os = binio::open_out(path);
  binio::write_magic(os, "MSEQ");
  binio::write_u32(os, 1);
  binio::write_u32(os, static_cast<std::uint32_t>(seq.frames()));
  binio::write_u32(os, layout::kFrameDim);
  binio::write_f32_matrix(os, seq.data);
  if (!os) throw IoError("write failed: " + path);
}

inline MotionSequence load_mseq(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, "MSEQ", path);
  std::uint32_t version = binio::read_u32(is);
  if (version != 1) throw IoError("unsupported .mseq version in " + path);
  std::uint32_t frames = binio::read_u32(is);
  std::uint32_t dims = binio::read_u32(is);
  if (dims != layout::kFrameDim)
    throw IoError("unexpected .mseq frame width in " + path);
  MotionSequence seq;
  seq.fps = 30.0;
  seq.data = binio::read_f32_matrix(is, frames, dims);
  return seq;
}

// --- BVH export (write-only) -----------------------------------------------
// FK results for external viewers. Offsets in centimeters; channel order is
// the common Zrotation Xrotation Yrotation, i.e. R = Rz * Rx * Ry.

namespace detail {

inline Vec3 euler_zxy_degrees(const Mat3& r) {
  // R = Rz(z) Rx(x) Ry(y):
  //   R(2,1) = sin x, R(0,1) = -sin z cos x, R(1,1) = cos z cos x,
  //   R(2,0) = -cos x sin y, R(2,2) = cos x cos y
  double sx = std::clamp(r(2, 1), -1.0, 1.0);
  double x = std::asin(sx);
  double z, y;
  if (std::abs(std::cos(x)) > 1e-7) {
    z = std::atan2(-r(0, 1), r(1, 1));
    y = std::atan2(-r(2, 0), r(2, 2));
  } else {
    // Gimbal: fold the remaining freedom into z.
    z = std::atan2(r(1, 0), r(0, 0));
    y = 0.0;
  }
  constexpr double kDeg = 180.0 / M_PI;
  return Vec3(z * kDeg, x * kDeg, y * kDeg);
}

inline void write_bvh_joint(std::ostream& os, const Skeleton& skel, int joint,
                            const std::vector<std::vector<int>>& children,
                            int depth) {
  std::string indent(static_cast<size_t>(2 * depth), ' ');
  const Vec3 off = skel.rest_offsets[joint] * 100.0;  // meters -> cm
  if (joint == 0) {
    os << indent << "ROOT " << skel.names[joint] << "\n";
  } else {
    os << indent << "JOINT " << skel.names[joint] << "\n";
  }
  os << indent << "{\n";
  os << indent << "  OFFSET " << off.x() << " " << off.y() << " " << off.z()
     << "\n";
  if (joint == 0) {
    os << indent
       << "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation "
          "Yrotation\n";
  } else {
    os << indent << "  CHANNELS 3 Zrotation Xrotation Yrotation\n";
  }
  if (children[static_cast<size_t>(joint)].empty()) {
    os << indent << "  End Site\n";
    os << indent << "  {\n";
    os << indent << "    OFFSET 0.0 " << (joint == Skeleton::kHead ? 9.0 : 0.0)
       << " " << (joint == Skeleton::kHead ? 0.0 : 5.0) << "\n";
    os << indent << "  }\n";
  } else {
    for (int child : children[static_cast<size_t>(joint)])
      write_bvh_joint(os, skel, child, children, depth + 1);
  }
  os << indent << "}\n";
}

}  // namespace detail

inline void save_bvh(const MotionSequence& seq, const Skeleton& skel,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  std::vector<std::vector<int>> children(Skeleton::kJointCount);
  for (int j = 1; j < Skeleton::kJointCount; ++j)
    children[static_cast<size_t>(skel.parents[j])].push_back(j);

  os << "HIERARCHY\n";
  detail::write_bvh_joint(os, skel, 0, children, 0);
  os << "MOTION\n";
  os << "Frames: " << seq.frames() << "\n";
  os << "Frame Time: " << 1.0 / seq.fps << "\n";
  for (Eigen::Index i = 0; i < seq.frames(); ++i) {
    const Vec3 root_pos =
        seq.data.row(i).segment<3>(layout::kRootPosBegin).transpose() * 100.0;
    os << root_pos.x() << " " << root_pos.y() << " " << root_pos.z();
    for (int j = 0; j < Skeleton::kJointCount; ++j) {
      Mat3 r = matrix_from_rot6d(frame_rot6d(seq.data.row(i), j));
      Vec3 zxy = detail::euler_zxy_degrees(r);
      os << " " << zxy.x() << " " << zxy.y() << " " << zxy.z();
    }
    os << "\n";
  }
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace lodgepp::motion
