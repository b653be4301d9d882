#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "proxops/attitude.hpp"
#include "proxops/rng.hpp"

using namespace proxops;

namespace {
Quaternion random_unit_quat(Rng& rng) {
    Vec4 c(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    return Quaternion::from_coeffs(c);
}
}  // namespace

TEST_CASE("quat_multiply identity and inverse cancellation") {
    Rng rng(11);
    const Quaternion q = random_unit_quat(rng);
    const Quaternion iq = quat_multiply(Quaternion::identity(), q);
    CHECK((iq.coeffs() - q.coeffs()).norm() < 1e-12);

    for (int i = 0; i < 100; ++i) {
        const Quaternion r = random_unit_quat(rng);
        const Quaternion e = quat_multiply(r, quat_inverse(r));
        CHECK(e.v.norm() < 1e-12);
        CHECK(std::abs(std::abs(e.s) - 1.0) < 1e-12);
    }
}

TEST_CASE("quat_multiply composes two 90 degree z rotations into 180") {
    const Quaternion q = Quaternion::from_axis_angle(Vec3::UnitZ(), M_PI / 2);
    const Quaternion qq = quat_multiply(q, q);
    CHECK(std::abs(qq.v.z() - 1.0) < 1e-12);
    CHECK(std::abs(qq.s) < 1e-12);

    // dcm(q*p) equals the p-then-q frame-transform composition dcm(q)*dcm(p).
    const Mat3 composed = quat_to_dcm(q) * quat_to_dcm(q);
    CHECK((quat_to_dcm(qq) - composed).norm() < 1e-12);
}

TEST_CASE("quat_multiply rejects non-finite input") {
    Quaternion bad;
    bad.v = Vec3(std::nan(""), 0, 0);
    CHECK_THROWS_AS(quat_multiply(bad, Quaternion::identity()), InvalidArgument);
}

TEST_CASE("quat_inverse flips the vector part") {
    const Quaternion id = quat_inverse(Quaternion::identity());
    CHECK((id.coeffs() - Vec4(0, 0, 0, 1)).norm() < 1e-15);

    Quaternion q;
    q.v = Vec3(0.5, 0.5, 0.5);
    q.s = 0.5;
    const Quaternion inv = quat_inverse(q);
    CHECK((inv.coeffs() - Vec4(-0.5, -0.5, -0.5, 0.5)).norm() < 1e-15);
}

TEST_CASE("quat_to_dcm matches axis-angle oracle") {
    CHECK((quat_to_dcm(Quaternion::identity()) - Mat3::Identity()).norm() < 1e-15);

    // 90 degrees about z: frame-transform matrix is the transposed active
    // rotation.
    const Quaternion q = Quaternion::from_axis_angle(Vec3::UnitZ(), M_PI / 2);
    const Mat3 expected = oracles::rodrigues(Vec3::UnitZ(), M_PI / 2).transpose();
    CHECK((quat_to_dcm(q) - expected).norm() < 1e-12);

    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const Mat3 A = quat_to_dcm(random_unit_quat(rng));
        CHECK((A * A.transpose() - Mat3::Identity()).norm() < 1e-9);
        CHECK(std::abs(A.determinant() - 1.0) < 1e-9);
    }
}

TEST_CASE("skew matrix implements the cross product") {
    CHECK(skew(Vec3::Zero()).norm() == 0.0);
    CHECK((skew(Vec3::UnitX()) * Vec3::UnitY() - Vec3::UnitZ()).norm() < 1e-15);

    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const Vec3 v(rng.normal(), rng.normal(), rng.normal());
        const Vec3 w(rng.normal(), rng.normal(), rng.normal());
        CHECK((skew(v) * w - v.cross(w)).norm() < 1e-12);
        CHECK((skew(v).transpose() + skew(v)).norm() < 1e-15);
        CHECK((skew(v) * v).norm() < 1e-12);
    }
}

TEST_CASE("omega_matrix is skew symmetric and zero at rest") {
    CHECK(omega_matrix(Vec3::Zero()).norm() == 0.0);
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const Vec3 w(rng.normal(), rng.normal(), rng.normal());
        const Mat4 O = omega_matrix(w);
        CHECK((O.transpose() + O).norm() < 1e-15);
    }
}

TEST_CASE("quat_rate integration recovers the axis-angle closed form") {
    // Constant omega = [0,0,0.1] for 10 s from identity -> 1 rad about z.
    const Vec3 w(0, 0, 0.1);
    Quaternion q = Quaternion::identity();
    const double dt = 1e-3;
    for (int i = 0; i < 10000; ++i) {
        const Vec4 k1 = quat_rate(q, w);
        const Vec4 k2 = quat_rate(Quaternion::from_coeffs(q.coeffs() + 0.5 * dt * k1), w);
        const Vec4 k3 = quat_rate(Quaternion::from_coeffs(q.coeffs() + 0.5 * dt * k2), w);
        const Vec4 k4 = quat_rate(Quaternion::from_coeffs(q.coeffs() + dt * k3), w);
        q = Quaternion::from_coeffs(q.coeffs() + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
    }
    const Quaternion expected = Quaternion::from_axis_angle(Vec3::UnitZ(), 1.0);
    CHECK(quat_angle_between(q, expected) < 1e-6);
}

TEST_CASE("quat_rate is norm stationary") {
    Rng rng(9);
    CHECK(quat_rate(Quaternion::identity(), Vec3::Zero()).norm() == 0.0);
    for (int i = 0; i < 100; ++i) {
        const Quaternion q = random_unit_quat(rng);
        const Vec3 w(rng.normal(), rng.normal(), rng.normal());
        CHECK(std::abs(q.coeffs().dot(quat_rate(q, w))) < 1e-12);
    }
}

TEST_CASE("composition consistency for random quaternion pairs") {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const Quaternion q = random_unit_quat(rng);
        const Quaternion p = random_unit_quat(rng);
        const Mat3 lhs = quat_to_dcm(quat_multiply(q, p));
        const Mat3 rhs = quat_to_dcm(q) * quat_to_dcm(p);
        CHECK((lhs - rhs).norm() < 1e-9);
        CHECK(std::abs(quat_multiply(q, p).norm() - 1.0) < 1e-9);
    }
}
