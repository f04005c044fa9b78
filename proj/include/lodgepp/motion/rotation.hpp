#pragma once

#include <cmath>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"

namespace lodgepp::motion {

using Rot6d = Eigen::Matrix<double, 6, 1>;

inline constexpr double kRot6dDegenerateTol = 1e-8;

// 6D rotation representation: the first two columns of a rotation matrix,
// recovered with Gram-Schmidt. Continuous in the inputs away from the
// degenerate (parallel columns) set.
inline Mat3 matrix_from_rot6d(const Rot6d& r6) {
  Vec3 a1 = r6.head<3>();
  Vec3 a2 = r6.tail<3>();
  double n1 = a1.norm();
  if (n1 < kRot6dDegenerateTol)
    throw DegenerateRotation("first 6d column has near-zero norm");
  Vec3 b1 = a1 / n1;
  Vec3 u2 = a2 - b1.dot(a2) * b1;
  // The cross-product norm of the unit-normalized inputs equals the
  // orthogonal residual of a2 relative to its own length.
  if (u2.norm() < kRot6dDegenerateTol)
    throw DegenerateRotation("6d columns are parallel within tolerance");
  Vec3 b2 = u2.normalized();
  Vec3 b3 = b1.cross(b2);
  Mat3 out;
  out.col(0) = b1;
  out.col(1) = b2;
  out.col(2) = b3;
  return out;
}

inline Rot6d rot6d_from_matrix(const Mat3& rot) {
  if ((rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      rot.determinant() < 0.0)
    throw NotARotation("matrix is not orthonormal with determinant +1");
  Rot6d r6;
  r6.head<3>() = rot.col(0);
  r6.tail<3>() = rot.col(1);
  return r6;
}

inline Rot6d rot6d_identity() {
  Rot6d r6;
  r6 << 1, 0, 0, 0, 1, 0;
  return r6;
}

inline Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace lodgepp::motion
