// Shared linear-algebra aliases used across the library.
#pragma once

#include <Eigen/Dense>

namespace proxops {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline bool all_finite(const Eigen::Ref<const VecX>& v) {
    return v.allFinite();
}

}  // namespace proxops
