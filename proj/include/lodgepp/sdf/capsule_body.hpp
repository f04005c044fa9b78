#pragma once

#include <cmath>
#include <vector>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"
#include "lodgepp/motion/kinematics.hpp"
#include "lodgepp/motion/sequence.hpp"
#include "lodgepp/motion/skeleton.hpp"

namespace lodgepp::sdf {

inline constexpr int kHandPointsPerSide = 16;
inline constexpr double kSigmoidSharpness = 50.0;  // per meter
// Hand points run along the forearm and 25% past the wrist.
inline constexpr double kHandReach = 1.25;

struct Capsule {
  Vec3 p0, p1;
  double radius = 0.0;
};

enum class ArmSide { kLeft, kRight };

// 14-capsule analytic body built from FK joint positions. The queried side's
// upper-arm and forearm capsules are excluded, otherwise its own hand points
// would always register as inside.
struct CapsuleBody {
  std::vector<Capsule> capsules;
};

namespace detail {

inline double point_segment_distance(const Vec3& q, const Vec3& a,
                                     const Vec3& b) {
  Vec3 ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return (q - a).norm();
  double t = std::clamp((q - a).dot(ab) / len2, 0.0, 1.0);
  return (q - (a + t * ab)).norm();
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

inline CapsuleBody build_capsule_body(const Mat& positions,
                                      const motion::Skeleton& skel,
                                      ArmSide exclude) {
  using J = motion::Skeleton;
  auto at = [&positions](int j) { return Vec3(positions.row(j).transpose()); };
  CapsuleBody body;
  auto add = [&](int a, int b, double radius) {
    body.capsules.push_back({at(a), at(b), radius});
  };
  add(J::kLeftHip, J::kRightHip, skel.bone_radii[J::kPelvis]);
  add(J::kPelvis, J::kSpine2, skel.bone_radii[J::kSpine1]);
  add(J::kSpine2, J::kNeck, skel.bone_radii[J::kSpine3]);
  add(J::kNeck, J::kHead, skel.bone_radii[J::kHead]);
  if (exclude != ArmSide::kLeft) {
    add(J::kLeftShoulder, J::kLeftElbow, skel.bone_radii[J::kLeftElbow]);
    add(J::kLeftElbow, J::kLeftWrist, skel.bone_radii[J::kLeftWrist]);
  }
  if (exclude != ArmSide::kRight) {
    add(J::kRightShoulder, J::kRightElbow, skel.bone_radii[J::kRightElbow]);
    add(J::kRightElbow, J::kRightWrist, skel.bone_radii[J::kRightWrist]);
  }
  add(J::kLeftHip, J::kLeftKnee, skel.bone_radii[J::kLeftKnee]);
  add(J::kRightHip, J::kRightKnee, skel.bone_radii[J::kRightKnee]);
  add(J::kLeftKnee, J::kLeftAnkle, skel.bone_radii[J::kLeftAnkle]);
  add(J::kRightKnee, J::kRightAnkle, skel.bone_radii[J::kRightAnkle]);
  add(J::kLeftAnkle, J::kLeftFoot, skel.bone_radii[J::kLeftFoot]);
  add(J::kRightAnkle, J::kRightFoot, skel.bone_radii[J::kRightFoot]);
  return body;
}

// Sign convention: positive inside the body (penetrating), negative outside.
inline double signed_distance(const Vec3& q, const CapsuleBody& body) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Capsule& c : body.capsules)
    best = std::max(best,
                    c.radius - detail::point_segment_distance(q, c.p0, c.p1));
  return best;
}

inline std::vector<Vec3> hand_points(const Mat& positions, ArmSide side,
                                     int count = kHandPointsPerSide) {
  using J = motion::Skeleton;
  int elbow = side == ArmSide::kLeft ? J::kLeftElbow : J::kRightElbow;
  int wrist = side == ArmSide::kLeft ? J::kLeftWrist : J::kRightWrist;
  Vec3 e = positions.row(elbow).transpose();
  Vec3 w = positions.row(wrist).transpose();
  std::vector<Vec3> points;
  points.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    double s = kHandReach * i / (count - 1);
    points.push_back(e + s * (w - e));
  }
  return points;
}

// Mean sigmoid-weighted penetration over the hand point sets of both arms.
// Non-penetrating points contribute exactly zero, so the score of a clean
// pose is 0.
inline double penetration_score(
    const Eigen::Ref<const Eigen::RowVectorXd>& frame,
    const motion::Skeleton& skel, double sharpness = kSigmoidSharpness,
    int points_per_side = kHandPointsPerSide) {
  Mat positions = motion::forward_kinematics(frame, skel);
  double acc = 0.0;
  int total = 0;
  for (ArmSide side : {ArmSide::kLeft, ArmSide::kRight}) {
    CapsuleBody body = build_capsule_body(positions, skel, side);
    for (const Vec3& q : hand_points(positions, side, points_per_side)) {
      double sd = signed_distance(q, body);
      if (sd > 0.0) acc += detail::sigmoid(sharpness * sd);
      ++total;
    }
  }
  return acc / total;
}

// 6d rotation channels of the arm chains (shoulders, elbows, wrists).
inline std::vector<int> arm_rotation_channels() {
  using J = motion::Skeleton;
  std::vector<int> cols;
  for (int j : {J::kLeftShoulder, J::kRightShoulder, J::kLeftElbow,
                J::kRightElbow, J::kLeftWrist, J::kRightWrist})
    for (int c = 0; c < 6; ++c)
      cols.push_back(motion::layout::rot_col(j) + c);
  return cols;
}

// Central finite-difference gradient of penetration_score over the masked
// channels. Returns exact zeros when no point penetrates (empty indicator
// set), which also covers the common clean-pose case cheaply.
inline Vec penetration_grad(const Eigen::Ref<const Eigen::RowVectorXd>& frame,
                            const motion::Skeleton& skel,
                            const std::vector<int>& dof_mask =
                                arm_rotation_channels(),
                            double step = 1e-3) {
  Vec grad = Vec::Zero(frame.size());
  if (penetration_score(frame, skel) == 0.0) return grad;
  Eigen::RowVectorXd work = frame;
  for (int c : dof_mask) {
    double saved = work(c);
    work(c) = saved + step;
    double up = penetration_score(work, skel);
    work(c) = saved - step;
    double down = penetration_score(work, skel);
    work(c) = saved;
    grad(c) = (up - down) / (2.0 * step);
  }
  return grad;
}

// Percentage of hand sample points inside the body across all frames.
inline double penetration_ratio(const motion::MotionSequence& seq,
                                const motion::Skeleton& skel,
                                int points_per_side = kHandPointsPerSide) {
  long penetrating = 0, total = 0;
  for (Eigen::Index f = 0; f < seq.frames(); ++f) {
    Mat positions = motion::forward_kinematics(seq.data.row(f), skel);
    for (ArmSide side : {ArmSide::kLeft, ArmSide::kRight}) {
      CapsuleBody body = build_capsule_body(positions, skel, side);
      for (const Vec3& q : hand_points(positions, side, points_per_side)) {
        if (signed_distance(q, body) > 0.0) ++penetrating;
        ++total;
      }
    }
  }
  return total == 0 ? 0.0 : 100.0 * penetrating / total;
}

}  // namespace lodgepp::sdf
