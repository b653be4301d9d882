// CR20A arm kinematics: D-H link transforms, forward kinematics, geometric
// Jacobian, damped rate inversion near singularities, and the kappa/nu
// orbit <-> laboratory scaling layer.
//
// Units follow the D-H table: link lengths and positions in millimeters,
// angles in radians. Twist vectors are [linear mm/s; angular rad/s].
#pragma once

#include <cmath>
#include <vector>

#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"

namespace proxops {

struct DhRow {
    double theta_offset = 0.0;  // rad
    double d = 0.0;             // mm
    double a = 0.0;             // mm
    double alpha = 0.0;         // rad
};

struct DhTable {
    std::vector<DhRow> rows;
    Mat4 tool = Mat4::Identity();  // tool-frame offset, default none

    void validate() const {
        if (rows.size() != 6) throw InvalidArgument("DhTable: expected 6 rows");
    }
};

inline DhTable cr20a_dh_table() {
    const double deg = M_PI / 180.0;
    DhTable t;
    t.rows = {
        {0.0, 230.0, 0.0, 90.0 * deg},
        {0.0, 0.0, 825.2, 0.0},
        {0.0, 0.0, 746.0, 0.0},
        {0.0, 175.6, 0.0, -90.0 * deg},
        {0.0, 128.8, 0.0, 90.0 * deg},
        {0.0, 136.5, 0.0, 0.0},
    };
    return t;
}

struct JointState {
    Vec6 q = Vec6::Zero();      // rad
    Vec6 q_dot = Vec6::Zero();  // rad/s
};

struct EndEffectorPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 position = Vec3::Zero();  // mm
};

inline Mat4 link_transform(const DhRow& row, double theta) {
    if (!std::isfinite(theta)) throw InvalidArgument("link_transform: non-finite theta");
    const double th = row.theta_offset + theta;
    const double ct = std::cos(th), st = std::sin(th);
    const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
    Mat4 T;
    T << ct, -st * ca, st * sa, row.a * ct,
         st, ct * ca, -ct * sa, row.a * st,
         0.0, sa, ca, row.d,
         0.0, 0.0, 0.0, 1.0;
    return T;
}

inline EndEffectorPose forward_kinematics(const DhTable& table, const Vec6& q) {
    table.validate();
    Mat4 T = Mat4::Identity();
    for (std::size_t i = 0; i < 6; ++i)
        T = T * link_transform(table.rows[i], q(static_cast<long>(i)));
    T = T * table.tool;
    EndEffectorPose pose;
    pose.rotation = T.topLeftCorner<3, 3>();
    pose.position = T.topRightCorner<3, 1>();
    return pose;
}

// Geometric Jacobian in the base frame: xdot = J qdot with xdot = [v; omega].
inline Mat6 jacobian(const DhTable& table, const Vec6& q) {
    table.validate();
    std::vector<Vec3> z(7), o(7);
    Mat4 T = Mat4::Identity();
    z[0] = Vec3::UnitZ();
    o[0] = Vec3::Zero();
    for (std::size_t i = 0; i < 6; ++i) {
        T = T * link_transform(table.rows[i], q(static_cast<long>(i)));
        z[i + 1] = T.topLeftCorner<3, 3>().col(2);
        o[i + 1] = T.topRightCorner<3, 1>();
    }
    const Vec3 tip = (T * table.tool).topRightCorner<3, 1>();
    Mat6 J;
    for (int i = 0; i < 6; ++i) {
        J.block<3, 1>(0, i) = z[static_cast<std::size_t>(i)].cross(tip - o[static_cast<std::size_t>(i)]);
        J.block<3, 1>(3, i) = z[static_cast<std::size_t>(i)];
    }
    return J;
}

// Moore-Penrose pseudo-inverse via SVD (equals (J^T J)^-1 J^T for full
// column rank, without forming the normal equations).
inline MatX pseudo_inverse(const MatX& J) {
    Eigen::JacobiSVD<MatX> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VecX& s = svd.singularValues();
    const double tol = 1e-10 * std::max(J.rows(), J.cols()) * s(0);
    if (s(s.size() - 1) <= tol)
        throw SingularGeometry("pseudo_inverse: rank-deficient Jacobian");
    VecX inv = s;
    for (long i = 0; i < s.size(); ++i) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline Vec6 joint_rates_from_twist(const Mat6& J, const Vec6& x_dot) {
    return pseudo_inverse(J) * x_dot;
}

struct DampingLimits {
    double lambda_l = 50.0;
    double lambda_u = 500.0;

    void validate() const {
        if (!(0.0 < lambda_l && lambda_l < lambda_u))
            throw InvalidArgument("DampingLimits: need 0 < lambda_l < lambda_u");
    }
};

// 2-norm condition number of the Jacobian with linear rows converted to
// meters, so translation/rotation unit mixing does not dominate.
inline double jacobian_condition_number(const Mat6& J) {
    Mat6 Jn = J;
    Jn.topRows<3>() /= 1000.0;
    Eigen::JacobiSVD<Mat6> svd(Jn);
    const double smin = svd.singularValues()(5);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return svd.singularValues()(0) / smin;
}

// Joint-rate scaling near singularities: passthrough below lambda_l, linear
// ramp to zero at lambda_u.
inline Vec6 damp_joint_rates(const Vec6& q_dot, const Mat6& J, const DampingLimits& lim) {
    lim.validate();
    const double lambda = jacobian_condition_number(J);
    if (lambda <= lim.lambda_l) return q_dot;
    if (lambda >= lim.lambda_u) return Vec6::Zero();
    return q_dot * (1.0 - (lambda - lim.lambda_l) / (lim.lambda_u - lim.lambda_l));
}

// kappa scales time, nu scales distance; accelerations pick up nu/kappa^2.
struct LabScaling {
    double kappa = 1.0;
    double nu = 1.0;

    void validate() const {
        if (!(kappa > 0.0 && nu > 0.0))
            throw InvalidArgument("LabScaling: factors must be positive");
    }

    double accel_factor() const { return nu / (kappa * kappa); }

    Vec3 accel_orbit_to_lab(const Vec3& a) const { return accel_factor() * a; }
    Vec3 accel_lab_to_orbit(const Vec3& a) const { return a / accel_factor(); }
    Vec3 position_orbit_to_lab(const Vec3& p) const { return nu * p; }
    Vec3 position_lab_to_orbit(const Vec3& p) const { return p / nu; }
    Vec3 velocity_orbit_to_lab(const Vec3& v) const { return (nu / kappa) * v; }
    Vec3 velocity_lab_to_orbit(const Vec3& v) const { return (kappa / nu) * v; }
    double time_orbit_to_lab(double t) const { return kappa * t; }
    double time_lab_to_orbit(double t) const { return t / kappa; }

    LabScaling composed_with(const LabScaling& other) const {
        return {kappa * other.kappa, nu * other.nu};
    }
};

}  // namespace proxops
