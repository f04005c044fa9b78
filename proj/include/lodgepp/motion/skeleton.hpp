#pragma once

#include <array>
#include <string>
#include <vector>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"

namespace lodgepp::motion {

// 22-joint SMPL-style skeleton: pelvis root plus 21 sub-joints along the
// kinematic chain. Rest pose is a T-pose, +y up, +z forward, +x to the
// character's left, about 1.7 m tall. bone_radii[j] is the capsule radius of
// the bone parent(j)->j; bone_radii[0] is the pelvis capsule radius.
struct Skeleton {
  static constexpr int kJointCount = 22;

  std::array<int, kJointCount> parents;
  std::array<Vec3, kJointCount> rest_offsets;
  std::array<std::string, kJointCount> names;
  std::array<double, kJointCount> bone_radii;

  // Canonical joint indices used throughout the library.
  enum Joint : int {
    kPelvis = 0,
    kLeftHip = 1,
    kRightHip = 2,
    kSpine1 = 3,
    kLeftKnee = 4,
    kRightKnee = 5,
    kSpine2 = 6,
    kLeftAnkle = 7,
    kRightAnkle = 8,
    kSpine3 = 9,
    kLeftFoot = 10,
    kRightFoot = 11,
    kNeck = 12,
    kLeftCollar = 13,
    kRightCollar = 14,
    kHead = 15,
    kLeftShoulder = 16,
    kRightShoulder = 17,
    kLeftElbow = 18,
    kRightElbow = 19,
    kLeftWrist = 20,
    kRightWrist = 21,
  };

  // Foot contact points in label order: left toe, left heel, right toe,
  // right heel. Heels are the ankle joints, which sit 4 cm above ground in
  // the rest stance.
  static constexpr std::array<int, 4> kContactJoints = {kLeftFoot, kLeftAnkle,
                                                        kRightFoot, kRightAnkle};

  // Pelvis height of the rest stance with both feet on the ground.
  static constexpr double kRestRootHeight = 0.94;

  int joint_count() const { return kJointCount; }

  void validate() const {
    if (parents[0] != -1) throw DataError("skeleton root must have no parent");
    for (int j = 1; j < kJointCount; ++j) {
      if (parents[j] < 0 || parents[j] >= j)
        throw DataError("skeleton parents must form a tree rooted at joint 0");
      if (!rest_offsets[j].allFinite())
        throw DataError("skeleton rest offsets must be finite");
    }
  }
};

inline Skeleton default_skeleton() {
  Skeleton s;
  auto set = [&s](int j, int parent, const char* name, double x, double y,
                  double z, double radius) {
    s.parents[j] = parent;
    s.names[j] = name;
    s.rest_offsets[j] = Vec3(x, y, z);
    s.bone_radii[j] = radius;
  };
  set(0, -1, "pelvis", 0, 0, 0, 0.10);
  set(1, 0, "left_hip", 0.09, -0.06, 0, 0.07);
  set(2, 0, "right_hip", -0.09, -0.06, 0, 0.07);
  set(3, 0, "spine1", 0, 0.11, 0, 0.11);
  set(4, 1, "left_knee", 0, -0.40, 0, 0.05);
  set(5, 2, "right_knee", 0, -0.40, 0, 0.05);
  set(6, 3, "spine2", 0, 0.13, 0, 0.11);
  set(7, 4, "left_ankle", 0, -0.44, 0, 0.04);
  set(8, 5, "right_ankle", 0, -0.44, 0, 0.04);
  set(9, 6, "spine3", 0, 0.13, 0, 0.11);
  set(10, 7, "left_foot", 0, -0.04, 0.15, 0.04);
  set(11, 8, "right_foot", 0, -0.04, 0.15, 0.04);
  set(12, 9, "neck", 0, 0.16, 0, 0.05);
  set(13, 9, "left_collar", 0.05, 0.11, 0, 0.06);
  set(14, 9, "right_collar", -0.05, 0.11, 0, 0.06);
  set(15, 12, "head", 0, 0.12, 0, 0.09);
  set(16, 13, "left_shoulder", 0.12, 0.03, 0, 0.045);
  set(17, 14, "right_shoulder", -0.12, 0.03, 0, 0.045);
  set(18, 16, "left_elbow", 0.26, 0, 0, 0.045);
  set(19, 17, "right_elbow", -0.26, 0, 0, 0.045);
  set(20, 18, "left_wrist", 0.25, 0, 0, 0.04);
  set(21, 19, "right_wrist", -0.25, 0, 0, 0.04);
  s.validate();
  return s;
}

}  // namespace lodgepp::motion
