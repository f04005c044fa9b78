#pragma once

#include <Eigen/Dense>

namespace lodgepp {

// Row-major so a frame (one row) is contiguous in memory and file layouts
// match the in-memory order.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

}  // namespace lodgepp
