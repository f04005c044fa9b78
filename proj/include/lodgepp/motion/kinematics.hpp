#pragma once

#include <array>
#include <vector>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"
#include "lodgepp/motion/rotation.hpp"
#include "lodgepp/motion/sequence.hpp"
#include "lodgepp/motion/skeleton.hpp"

namespace lodgepp::motion {

inline constexpr double kContactHeightThreshold = 0.05;   // meters
inline constexpr double kContactSpeedThreshold = 0.15;    // meters/second

struct FrameTransforms {
  std::array<Mat3, Skeleton::kJointCount> world_rot;
  std::array<Vec3, Skeleton::kJointCount> world_pos;
};

// Propagates rotations down the parent tree:
//   p_j = p_parent + R_parent_world * rest_offset_j
//   R_j_world = R_parent_world * R_j_local
inline FrameTransforms frame_transforms(
    const Eigen::Ref<const Eigen::RowVectorXd>& frame, const Skeleton& skel) {
  FrameTransforms out;
  out.world_rot[0] = matrix_from_rot6d(frame_rot6d(frame, 0));
  out.world_pos[0] = frame.segment<3>(layout::kRootPosBegin).transpose();
  for (int j = 1; j < Skeleton::kJointCount; ++j) {
    int p = skel.parents[j];
    Mat3 local = matrix_from_rot6d(frame_rot6d(frame, j));
    out.world_pos[j] = out.world_pos[p] + out.world_rot[p] * skel.rest_offsets[j];
    out.world_rot[j] = out.world_rot[p] * local;
  }
  return out;
}

inline Mat forward_kinematics(const Eigen::Ref<const Eigen::RowVectorXd>& frame,
                              const Skeleton& skel) {
  FrameTransforms tf = frame_transforms(frame, skel);
  Mat positions(Skeleton::kJointCount, 3);
  for (int j = 0; j < Skeleton::kJointCount; ++j)
    positions.row(j) = tf.world_pos[j].transpose();
  return positions;
}

inline JointPositions forward_kinematics(const MotionSequence& seq,
                                         const Skeleton& skel) {
  JointPositions jp = JointPositions::zeros(seq.frames());
  for (Eigen::Index i = 0; i < seq.frames(); ++i) {
    FrameTransforms tf = frame_transforms(seq.data.row(i), skel);
    for (int j = 0; j < Skeleton::kJointCount; ++j) jp.set(i, j, tf.world_pos[j]);
  }
  return jp;
}

inline CoarseMotion extract_coarse(const MotionSequence& seq) {
  if (seq.data.cols() != layout::kFrameDim)
    throw ShapeMismatch("motion sequence must have 139 columns");
  CoarseMotion coarse;
  coarse.data.resize(seq.frames(), CoarseMotion::kDim);
  for (size_t k = 0; k < CoarseMotion::kJoints.size(); ++k) {
    int col = layout::rot_col(CoarseMotion::kJoints[k]);
    coarse.data.middleCols(6 * static_cast<int>(k), 6) =
        seq.data.middleCols(col, 6);
  }
  return coarse;
}

inline Mat detect_foot_contacts(const JointPositions& positions, double fps);

// Writes the 7 coarse blocks into their slots, every other rotation identity,
// root translation zero; contact labels come from the lifted pose itself.
inline MotionSequence lift_coarse_to_full(const CoarseMotion& coarse,
                                          const Skeleton& skel) {
  MotionSequence seq;
  seq.data.resize(coarse.frames(), layout::kFrameDim);
  for (Eigen::Index i = 0; i < coarse.frames(); ++i)
    write_identity_frame(seq.data.row(i));
  for (size_t k = 0; k < CoarseMotion::kJoints.size(); ++k) {
    int col = layout::rot_col(CoarseMotion::kJoints[k]);
    seq.data.middleCols(col, 6) = coarse.data.middleCols(6 * static_cast<int>(k), 6);
  }
  JointPositions jp = forward_kinematics(seq, skel);
  seq.data.middleCols(layout::kContactBegin, layout::kContactDim) =
      detect_foot_contacts(jp, seq.fps);
  return seq;
}

// Per-frame mean joint speed. Frame 0 copies frame 1 so a beat detector does
// not see a spurious minimum at t=0.
inline Vec joint_speed(const MotionSequence& seq, const Skeleton& skel) {
  if (seq.frames() < 2) throw SequenceTooShort("joint_speed needs at least 2 frames");
  JointPositions jp = forward_kinematics(seq, skel);
  Vec speed(seq.frames());
  for (Eigen::Index i = 1; i < seq.frames(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < Skeleton::kJointCount; ++j)
      acc += (jp.at(i, j) - jp.at(i - 1, j)).norm();
    speed(i) = acc / Skeleton::kJointCount * seq.fps;
  }
  speed(0) = speed(1);
  return speed;
}

// Contact iff a foot point is below 5 cm and moving slower than 0.15 m/s.
// The speed term keeps planted-but-sliding feet out, matching the foot
// skating metric semantics.
inline Mat detect_foot_contacts(const JointPositions& positions, double fps) {
  Eigen::Index frames = positions.frames();
  Mat labels = Mat::Zero(frames, 4);
  for (int c = 0; c < 4; ++c) {
    int joint = Skeleton::kContactJoints[static_cast<size_t>(c)];
    for (Eigen::Index i = 0; i < frames; ++i) {
      double height = positions.at(i, joint).y();
      double speed = 0.0;
      if (frames >= 2) {
        Eigen::Index a = i == 0 ? 0 : i - 1;
        Eigen::Index b = i == 0 ? 1 : i;
        speed = (positions.at(b, joint) - positions.at(a, joint)).norm() * fps;
      }
      labels(i, c) = (height < kContactHeightThreshold &&
                      speed < kContactSpeedThreshold)
                         ? 1.0
                         : 0.0;
    }
  }
  return labels;
}

}  // namespace lodgepp::motion
