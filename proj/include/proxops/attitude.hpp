// Quaternion / rotation-matrix / skew algebra for the attitude chain.
//
// Conventions, pinned by the tests in test_attitude.cpp:
//  - scalar-last layout q = [q1 q2 q3 q4]^T with vector part q_v = [q1 q2 q3]
//  - product (q*p)_v = q4*p_v + p4*q_v - q_v x p_v, scalar q4*p4 - q_v.p_v,
//    which composes direction cosine matrices as dcm(q*p) = dcm(q)*dcm(p)
//  - dcm(q) maps components FROM the reference frame TO the rotated frame
// Every operation that returns a Quaternion renormalizes it.
#pragma once

#include <cmath>

#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"

namespace proxops {

struct Quaternion {
    Vec3 v = Vec3::Zero();  // vector part [q1 q2 q3]
    double s = 1.0;         // scalar part q4

    static Quaternion identity() { return {}; }

    static Quaternion from_axis_angle(const Vec3& axis, double angle) {
        const double n = axis.norm();
        if (n == 0.0) return identity();
        Quaternion q;
        q.v = axis / n * std::sin(0.5 * angle);
        q.s = std::cos(0.5 * angle);
        return q;
    }

    Vec4 coeffs() const { return Vec4(v.x(), v.y(), v.z(), s); }

    static Quaternion from_coeffs(const Vec4& c) {
        Quaternion q;
        q.v = c.head<3>();
        q.s = c(3);
        return q.normalized();
    }

    double norm() const { return std::sqrt(v.squaredNorm() + s * s); }

    Quaternion normalized() const {
        const double n = norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw InvalidArgument("quaternion normalization: zero or non-finite norm");
        Quaternion q;
        q.v = v / n;
        q.s = s / n;
        return q;
    }

    bool finite() const { return v.allFinite() && std::isfinite(s); }
};

inline Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

inline Quaternion quat_multiply(const Quaternion& q, const Quaternion& p) {
    if (!q.finite() || !p.finite())
        throw InvalidArgument("quat_multiply: non-finite input");
    Quaternion r;
    r.v = q.s * p.v + p.s * q.v - q.v.cross(p.v);
    r.s = q.s * p.s - q.v.dot(p.v);
    return r.normalized();
}

inline Quaternion quat_inverse(const Quaternion& q) {
    if (!q.finite()) throw InvalidArgument("quat_inverse: non-finite input");
    Quaternion r;
    r.v = -q.v;
    r.s = q.s;
    return r.normalized();
}

// dcm(q) = (q4^2 - q_v.q_v) I + 2 q_v q_v^T - 2 q4 [q_v]_x
inline Mat3 quat_to_dcm(const Quaternion& q) {
    const double s = q.s;
    const Vec3& v = q.v;
    return (s * s - v.squaredNorm()) * Mat3::Identity() + 2.0 * (v * v.transpose()) -
           2.0 * s * skew(v);
}

// 4x4 rate matrix: qdot = 0.5 * omega_matrix(w) * q, with w expressed in the
// rotated ("to") frame of q.
inline Mat4 omega_matrix(const Vec3& w) {
    Mat4 m;
    m << 0.0, w.z(), -w.y(), w.x(),
        -w.z(), 0.0, w.x(), w.y(),
         w.y(), -w.x(), 0.0, w.z(),
        -w.x(), -w.y(), -w.z(), 0.0;
    return m;
}

inline Vec4 quat_rate(const Quaternion& q, const Vec3& w) {
    return 0.5 * omega_matrix(w) * q.coeffs();
}

// Rotation angle between two unit quaternions, double-cover safe:
// 2 * acos(|<a,b>|), in [0, pi].
inline double quat_angle_between(const Quaternion& a, const Quaternion& b) {
    double d = std::abs(a.coeffs().dot(b.coeffs()));
    if (d > 1.0) d = 1.0;
    return 2.0 * std::acos(d);
}

}  // namespace proxops
