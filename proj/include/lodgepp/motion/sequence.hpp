#pragma once

#include <array>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"
#include "lodgepp/motion/rotation.hpp"
#include "lodgepp/motion/skeleton.hpp"

namespace lodgepp::motion {

// Fixed 139-column frame layout:
//   [0,4)    foot contact labels (left toe, left heel, right toe, right heel)
//   [4,7)    root translation, meters
//   [7,13)   global root rotation, 6d
//   [13,139) 21 joints x 6d relative rotations in kinematic-chain order
namespace layout {
inline constexpr int kFrameDim = 139;
inline constexpr int kContactBegin = 0;
inline constexpr int kContactDim = 4;
inline constexpr int kRootPosBegin = 4;
inline constexpr int kRootRotBegin = 7;
inline constexpr int kJointRotBegin = 13;

// Column of the first 6d component for joint j; joint 0 is the global root
// rotation.
inline constexpr int rot_col(int joint) {
  return joint == 0 ? kRootRotBegin : kJointRotBegin + 6 * (joint - 1);
}
}  // namespace layout

struct MotionSequence {
  double fps = 30.0;
  Mat data;  // L x 139

  Eigen::Index frames() const { return data.rows(); }

  static MotionSequence zeros(Eigen::Index frames) {
    MotionSequence seq;
    seq.data = Mat::Zero(frames, layout::kFrameDim);
    return seq;
  }
};

// N x 42: 7 main joints x 6d, in order root global, left shoulder, right
// shoulder, left elbow, right elbow, left hip, right hip.
struct CoarseMotion {
  Mat data;

  Eigen::Index frames() const { return data.rows(); }

  static constexpr int kDim = 42;
  static constexpr std::array<int, 7> kJoints = {
      0,
      Skeleton::kLeftShoulder,
      Skeleton::kRightShoulder,
      Skeleton::kLeftElbow,
      Skeleton::kRightElbow,
      Skeleton::kLeftHip,
      Skeleton::kRightHip,
  };
};

// L x 22 x 3 world-space joint positions, stored as L x 66 row-major
// (joint-major within a row).
struct JointPositions {
  Mat data;

  Eigen::Index frames() const { return data.rows(); }
  Vec3 at(Eigen::Index frame, int joint) const {
    return Vec3(data(frame, 3 * joint), data(frame, 3 * joint + 1),
                data(frame, 3 * joint + 2));
  }
  void set(Eigen::Index frame, int joint, const Vec3& p) {
    data(frame, 3 * joint) = p.x();
    data(frame, 3 * joint + 1) = p.y();
    data(frame, 3 * joint + 2) = p.z();
  }

  static JointPositions zeros(Eigen::Index frames) {
    JointPositions jp;
    jp.data = Mat::Zero(frames, 3 * Skeleton::kJointCount);
    return jp;
  }
};

inline Rot6d frame_rot6d(const Eigen::Ref<const Eigen::RowVectorXd>& frame,
                         int joint) {
  return frame.segment<6>(layout::rot_col(joint)).transpose();
}

inline void set_frame_rot6d(Eigen::Ref<Eigen::RowVectorXd> frame, int joint,
                            const Rot6d& r6) {
  frame.segment<6>(layout::rot_col(joint)) = r6.transpose();
}

// Writes the identity pose (all rotations identity, zero translation, zero
// contacts) into a frame row.
inline void write_identity_frame(Eigen::Ref<Eigen::RowVectorXd> frame) {
  frame.setZero();
  for (int j = 0; j < Skeleton::kJointCount; ++j)
    set_frame_rot6d(frame, j, rot6d_identity());
}

// Invariant checks for MotionSequence. Ground-truth sequences carry binary
// contact labels; predicted ones only need [0,1].
inline void validate(const MotionSequence& seq, bool ground_truth_contacts) {
  if (seq.data.cols() != layout::kFrameDim)
    throw ShapeMismatch("motion sequence must have 139 columns");
  if (!seq.data.allFinite())
    throw DataError("motion sequence contains non-finite values");
  for (Eigen::Index i = 0; i < seq.frames(); ++i) {
    for (int c = 0; c < layout::kContactDim; ++c) {
      double v = seq.data(i, layout::kContactBegin + c);
      if (ground_truth_contacts) {
        if (v != 0.0 && v != 1.0)
          throw DataError("ground-truth contact labels must be 0 or 1");
      } else if (v < 0.0 || v > 1.0) {
        throw DataError("contact labels must lie in [0,1]");
      }
    }
    for (int j = 0; j < Skeleton::kJointCount; ++j) {
      Rot6d r6 = frame_rot6d(seq.data.row(i), j);
      Vec3 a1 = r6.head<3>(), a2 = r6.tail<3>();
      if (a1.cross(a2).norm() < kRot6dDegenerateTol)
        throw DegenerateRotation("frame contains a degenerate 6d rotation");
    }
  }
}

}  // namespace lodgepp::motion
