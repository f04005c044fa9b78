#include <catch2/catch_amalgamated.hpp>

#include "lodgepp/core/rng.hpp"
#include "lodgepp/motion/rotation.hpp"

using namespace lodgepp;
using namespace lodgepp::motion;

namespace {

Mat3 random_rotation(Rng& rng) {
  Vec3 axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
  while (axis.norm() < 1e-6)
    axis = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
  return axis_angle(axis, rng.uniform(-M_PI, M_PI));
}

}  // namespace

TEST_CASE("identity 6d maps to identity matrix") {
  Rot6d r6;
  r6 << 1, 0, 0, 0, 1, 0;
  CHECK((matrix_from_rot6d(r6) - Mat3::Identity()).cwiseAbs().maxCoeff() ==
        Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("orthogonal 6d columns give a 90 degree rotation about z") {
  Rot6d r6;
  r6 << 0, 1, 0, -1, 0, 0;
  Mat3 expected;
  // Hand Gram-Schmidt: b1 = (0,1,0), b2 = (-1,0,0), b3 = b1 x b2 = (0,0,1).
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((matrix_from_rot6d(r6) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("round trip through rot6d is identity on random rotations") {
  Rng rng(42);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Mat3 r = random_rotation(rng);
    Mat3 back = matrix_from_rot6d(rot6d_from_matrix(r));
    worst = std::max(worst, (back - r).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("6d output is orthonormal with unit determinant") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Rot6d r6;
    for (int k = 0; k < 6; ++k) r6(k) = rng.uniform(-2.0, 2.0);
    Vec3 a1 = r6.head<3>(), a2 = r6.tail<3>();
    if (a1.cross(a2).norm() < 1e-3) continue;
    Mat3 r = matrix_from_rot6d(r6);
    CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.determinant() == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("gram-schmidt projection is idempotent") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Rot6d r6;
    for (int k = 0; k < 6; ++k) r6(k) = rng.uniform(-2.0, 2.0);
    Vec3 a1 = r6.head<3>(), a2 = r6.tail<3>();
    if (a1.cross(a2).norm() < 1e-3) continue;
    Rot6d once = rot6d_from_matrix(matrix_from_rot6d(r6));
    Rot6d twice = rot6d_from_matrix(matrix_from_rot6d(once));
    CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("parallel 6d columns are rejected") {
  Rot6d r6;
  r6 << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(matrix_from_rot6d(r6), DegenerateRotation);
  r6 << 0, 0, 0, 0, 1, 0;
  CHECK_THROWS_AS(matrix_from_rot6d(r6), DegenerateRotation);
}

TEST_CASE("non-rotations are rejected by rot6d_from_matrix") {
  Mat3 m = Mat3::Identity() * 2.0;
  CHECK_THROWS_AS(rot6d_from_matrix(m), NotARotation);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;  // determinant -1
  CHECK_THROWS_AS(rot6d_from_matrix(reflect), NotARotation);
}

TEST_CASE("180 degrees about y encodes as expected") {
  Mat3 r = axis_angle(Vec3(0, 1, 0), M_PI);
  Rot6d r6 = rot6d_from_matrix(r);
  Rot6d expected;
  expected << -1, 0, 0, 0, 1, 0;
  CHECK((r6 - expected).cwiseAbs().maxCoeff() < 1e-12);
}
