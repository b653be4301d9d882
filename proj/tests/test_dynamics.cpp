#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "proxops/cw.hpp"
#include "proxops/relative_dynamics.hpp"
#include "proxops/rng.hpp"

using namespace proxops;

namespace {

constexpr double kOrbitRadius = kEarthRadius + 500e3;

// Chaser inertial state consistent with (rho, rho_dot) in target LVLH.
void chaser_inertial(const TargetAbsoluteState& tgt, const Vec3& rho, const Vec3& rho_dot,
                     Vec3& r_c, Vec3& v_c) {
    const Mat3 L = lvlh_basis(tgt).inertial_to_lvlh();
    const OrbitGeometry g = elements_from_rv(tgt.r, tgt.v, kMuEarth);
    const Vec3 omega = lvlh_angular_velocity(g, gve_rates(g, 0, 0, 0, tgt.r.norm()));
    r_c = tgt.r + L.transpose() * rho;
    v_c = tgt.v + L.transpose() * (rho_dot + omega.cross(rho));
}

}  // namespace

TEST_CASE("relative acceleration is zero at the co-located equilibrium") {
    const FullState s = circular_scenario(kOrbitRadius, Vec3::Zero(), Vec3::Zero());
    const Vec3 omega(0, 0, circular_mean_motion(kOrbitRadius, kMuEarth));
    const Vec3 a = relative_translational_accel(s.rel, s.target, omega, Vec3::Zero(), {},
                                                kMuEarth);
    CHECK(a.norm() == 0.0);
}

TEST_CASE("relative acceleration matches CW to 0.1% at 100 m") {
    const double n = circular_mean_motion(kOrbitRadius, kMuEarth);
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        Vec3 rho(rng.normal(), rng.normal(), rng.normal());
        rho = rho.normalized() * 100.0;
        const Vec3 rho_dot(0.01 * rng.normal(), 0.01 * rng.normal(), 0.01 * rng.normal());
        const FullState s = circular_scenario(kOrbitRadius, rho, rho_dot);
        const Vec3 a_nl = relative_translational_accel(s.rel, s.target, Vec3(0, 0, n),
                                                       Vec3::Zero(), {}, kMuEarth);
        const Vec3 a_cw = cw_accel(rho, rho_dot, n);
        CHECK((a_nl - a_cw).norm() < 1e-3 * a_cw.norm());
    }
}

TEST_CASE("relative acceleration matches inertial differencing to 1e-8") {
    Rng rng(33);
    for (int i = 0; i < 20; ++i) {
        // Mildly eccentric target orbit.
        TargetAbsoluteState tgt;
        tgt.r = Vec3(kOrbitRadius, 0, 0);
        const double v0 = std::sqrt(kMuEarth / kOrbitRadius) * rng.uniform(0.99, 1.01);
        const double inc = rng.uniform(0.1, 1.2);
        tgt.v = Vec3(0, v0 * std::cos(inc), v0 * std::sin(inc));

        const Vec3 rho(rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(-200, 200));
        const Vec3 rho_dot(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                           rng.uniform(-0.5, 0.5));

        Vec3 r_c, v_c;
        chaser_inertial(tgt, rho, rho_dot, r_c, v_c);

        // Oracle: propagate both bodies with the extended-precision two-body
        // RK4 and take a central second difference of the LVLH separation.
        const double h = 0.5;
        const int sub = 100;  // oracle step h/sub
        auto rho_lvlh_at = [&](int k) {
            oracles::TwoBodyState t{{tgt.r.x(), tgt.r.y(), tgt.r.z()},
                                    {tgt.v.x(), tgt.v.y(), tgt.v.z()}};
            oracles::TwoBodyState c{{r_c.x(), r_c.y(), r_c.z()}, {v_c.x(), v_c.y(), v_c.z()}};
            const double dt = h / sub;
            for (int s_i = 0; s_i < sub * k; ++s_i) {
                t = oracles::two_body_rk4_step(t, kMuEarth, dt);
                c = oracles::two_body_rk4_step(c, kMuEarth, dt);
            }
            return oracles::lvlh_separation(t, c);
        };
        const Vec3 r_m1 = rho_lvlh_at(0), r_0 = rho_lvlh_at(1), r_p1 = rho_lvlh_at(2);
        const Vec3 a_fd = (r_p1 - 2.0 * r_0 + r_m1) / (h * h);

        // Library value at the midpoint epoch.
        oracles::TwoBodyState t{{tgt.r.x(), tgt.r.y(), tgt.r.z()},
                                {tgt.v.x(), tgt.v.y(), tgt.v.z()}};
        oracles::TwoBodyState c{{r_c.x(), r_c.y(), r_c.z()}, {v_c.x(), v_c.y(), v_c.z()}};
        for (int s_i = 0; s_i < sub; ++s_i) {
            t = oracles::two_body_rk4_step(t, kMuEarth, h / sub);
            c = oracles::two_body_rk4_step(c, kMuEarth, h / sub);
        }
        const TargetAbsoluteState tgt_mid{
            Vec3(static_cast<double>(t.r[0]), static_cast<double>(t.r[1]),
                 static_cast<double>(t.r[2])),
            Vec3(static_cast<double>(t.v[0]), static_cast<double>(t.v[1]),
                 static_cast<double>(t.v[2]))};
        const Mat3 L = lvlh_basis(tgt_mid).inertial_to_lvlh();
        const Vec3 rho_mid = oracles::lvlh_separation(t, c);
        const OrbitGeometry g = elements_from_rv(tgt_mid.r, tgt_mid.v, kMuEarth);
        const Vec3 omega =
            lvlh_angular_velocity(g, gve_rates(g, 0, 0, 0, tgt_mid.r.norm()));
        const Vec3 v_rel(static_cast<double>(c.v[0] - t.v[0]),
                         static_cast<double>(c.v[1] - t.v[1]),
                         static_cast<double>(c.v[2] - t.v[2]));
        const Vec3 rho_dot_mid = L * v_rel - omega.cross(rho_mid);
        // omega_dot for the unperturbed orbit: d/dt (h/r^2) along h_hat.
        const double rn = tgt_mid.r.norm();
        const double hn = tgt_mid.r.cross(tgt_mid.v).norm();
        const double w_dot = -2.0 * hn * tgt_mid.r.dot(tgt_mid.v) / (rn * rn * rn * rn);

        const Vec3 a_lib = relative_translational_accel(
            {rho_mid, rho_dot_mid}, tgt_mid, omega, Vec3(0, 0, w_dot), {}, kMuEarth);
        CHECK((a_lib - a_fd).norm() < 1e-8);
    }
}

TEST_CASE("euler_eom principal-axis spin and torque-free conservation") {
    const Mat3 J = Vec3(1, 2, 3).asDiagonal();
    CHECK(euler_eom(Vec3(0, 0, 1), J, Vec3::Zero()).norm() == 0.0);
    CHECK(euler_eom(Vec3(2, 0, 0), J, Vec3::Zero()).norm() == 0.0);

    // Torque-free tumbling: kinetic energy and momentum magnitude conserved.
    Vec3 w(0.3, -0.7, 0.5);
    const double E0 = 0.5 * w.dot(J * w);
    const double H0 = (J * w).norm();
    const double dt = 0.01;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 k1 = euler_eom(w, J, Vec3::Zero());
        const Vec3 k2 = euler_eom(w + 0.5 * dt * k1, J, Vec3::Zero());
        const Vec3 k3 = euler_eom(w + 0.5 * dt * k2, J, Vec3::Zero());
        const Vec3 k4 = euler_eom(w + dt * k3, J, Vec3::Zero());
        w += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    CHECK(std::abs(0.5 * w.dot(J * w) - E0) < 1e-8 * E0);
    CHECK(std::abs((J * w).norm() - H0) < 1e-8 * H0);

    Mat3 singular = Mat3::Zero();
    CHECK_THROWS_AS(euler_eom(w, singular, Vec3::Zero()), InvalidArgument);
}

TEST_CASE("relative rotational acceleration trivial cases") {
    SpacecraftInertia inertia;
    RotationalState rot;
    CHECK(relative_rotational_accel(rot, inertia, {}).norm() == 0.0);

    ExternalInputs in;
    in.T_t = Vec3(1, 0, 0);
    const Vec3 wdot = relative_rotational_accel(rot, inertia, in);
    CHECK((wdot - Vec3(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("relative rotation matches independently propagated absolute attitudes") {
    SpacecraftInertia inertia;
    inertia.J_s = Vec3(1.0, 1.5, 2.0).asDiagonal();
    inertia.J_t = Vec3(2.0, 1.2, 0.8).asDiagonal();

    Rng rng(37);
    Quaternion q_s = Quaternion::from_axis_angle(
        Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(), 0.4);
    Quaternion q_t = Quaternion::from_axis_angle(
        Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(), -0.7);
    Vec3 w_bs(0.02, -0.015, 0.01);
    Vec3 w_bt(-0.01, 0.02, 0.015);

    // Direct relative state.
    RotationalState rel;
    rel.q_s = q_s;
    rel.omega_bs = w_bs;
    rel.q_r = quat_multiply(q_t, quat_inverse(q_s));
    rel.omega_r = w_bt - quat_to_dcm(rel.q_r) * w_bs;

    ExternalInputs in;
    in.T_s = Vec3(0.001, 0.0, -0.002);
    in.T_t = Vec3(-0.001, 0.002, 0.0);

    const double dt = 0.01;
    const int steps = 10000;  // 100 s
    for (int i = 0; i < steps; ++i) {
        // Absolute propagation (oracle).
        auto step_abs = [&](Quaternion& q, Vec3& w, const Mat3& J, const Vec3& T) {
            const Vec4 k1q = quat_rate(q, w);
            const Vec3 k1w = euler_eom(w, J, T);
            const Quaternion q2 = Quaternion::from_coeffs(q.coeffs() + 0.5 * dt * k1q);
            const Vec4 k2q = quat_rate(q2, w + 0.5 * dt * k1w);
            const Vec3 k2w = euler_eom(w + 0.5 * dt * k1w, J, T);
            const Quaternion q3 = Quaternion::from_coeffs(q.coeffs() + 0.5 * dt * k2q);
            const Vec4 k3q = quat_rate(q3, w + 0.5 * dt * k2w);
            const Vec3 k3w = euler_eom(w + 0.5 * dt * k2w, J, T);
            const Quaternion q4 = Quaternion::from_coeffs(q.coeffs() + dt * k3q);
            const Vec4 k4q = quat_rate(q4, w + dt * k3w);
            const Vec3 k4w = euler_eom(w + dt * k3w, J, T);
            q = Quaternion::from_coeffs(q.coeffs() + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q));
            w += dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
        };
        step_abs(q_s, w_bs, inertia.J_s, in.T_s);
        step_abs(q_t, w_bt, inertia.J_t, in.T_t);

        // Direct relative propagation (library dynamics).
        auto deriv = [&](const RotationalState& r) {
            struct D {
                Vec4 qs, qr;
                Vec3 wbs, wr;
            } d;
            d.qs = quat_rate(r.q_s, r.omega_bs);
            d.wbs = euler_eom(r.omega_bs, inertia.J_s, in.T_s);
            d.qr = quat_rate(r.q_r, r.omega_r);
            d.wr = relative_rotational_accel(r, inertia, in);
            return d;
        };
        auto advance = [&](const RotationalState& r, const auto& d, double h) {
            RotationalState o;
            o.q_s = Quaternion::from_coeffs(r.q_s.coeffs() + h * d.qs);
            o.omega_bs = r.omega_bs + h * d.wbs;
            o.q_r = Quaternion::from_coeffs(r.q_r.coeffs() + h * d.qr);
            o.omega_r = r.omega_r + h * d.wr;
            return o;
        };
        const auto k1 = deriv(rel);
        const auto k2 = deriv(advance(rel, k1, 0.5 * dt));
        const auto k3 = deriv(advance(rel, k2, 0.5 * dt));
        const auto k4 = deriv(advance(rel, k3, dt));
        RotationalState next;
        next.q_s = Quaternion::from_coeffs(
            rel.q_s.coeffs() + dt / 6.0 * (k1.qs + 2 * k2.qs + 2 * k3.qs + k4.qs));
        next.omega_bs = rel.omega_bs + dt / 6.0 * (k1.wbs + 2 * k2.wbs + 2 * k3.wbs + k4.wbs);
        next.q_r = Quaternion::from_coeffs(
            rel.q_r.coeffs() + dt / 6.0 * (k1.qr + 2 * k2.qr + 2 * k3.qr + k4.qr));
        next.omega_r = rel.omega_r + dt / 6.0 * (k1.wr + 2 * k2.wr + 2 * k3.wr + k4.wr);
        rel = next;
    }

    const Quaternion q_r_oracle = quat_multiply(q_t, quat_inverse(q_s));
    const Vec3 w_r_oracle = w_bt - quat_to_dcm(q_r_oracle) * w_bs;
    CHECK(quat_angle_between(rel.q_r, q_r_oracle) < 1e-6);
    CHECK((rel.omega_r - w_r_oracle).norm() < 1e-6);
    CHECK(quat_angle_between(rel.q_s, q_s) < 1e-6);
}

TEST_CASE("propagate holds the co-located equilibrium over one orbit") {
    const FullState s0 = circular_scenario(kOrbitRadius, Vec3::Zero(), Vec3::Zero());
    Propagator prop({});
    const double period = 2 * M_PI / circular_mean_motion(kOrbitRadius, kMuEarth);
    const int n = static_cast<int>(period / 5.0);
    const auto traj = prop.propagate(s0, [](double) { return ExternalInputs{}; }, 5.0, n);
    for (const auto& row : traj) {
        CHECK(row.state.rel.rho.norm() < 1e-9);
        CHECK(std::abs(row.state.rot.q_s.norm() - 1.0) < 1e-9);
        CHECK(std::abs(row.state.rot.q_r.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("propagate tracks the CW analytic solution within 1% over one orbit") {
    const Vec3 rho0(0, 0, 50);
    const FullState s0 = circular_scenario(kOrbitRadius, rho0, Vec3::Zero());
    const double n_mm = circular_mean_motion(kOrbitRadius, kMuEarth);
    const double period = 2 * M_PI / n_mm;
    const double dt = 2.0;
    const int steps = static_cast<int>(period / dt);

    Propagator prop({});
    const auto traj = prop.propagate(s0, [](double) { return ExternalInputs{}; }, dt, steps);

    oracles::Vec6 x0;
    x0 << rho0, Vec3::Zero();
    double worst = 0.0;
    for (const auto& row : traj) {
        const oracles::Vec6 cw = oracles::cw_closed_form(x0, n_mm, row.t);
        worst = std::max(worst, (row.state.rel.rho - cw.head<3>()).norm());
    }
    CHECK(worst < 0.01 * rho0.norm());
}

TEST_CASE("propagate converges at fourth order in the step size") {
    FullState s0 = circular_scenario(kOrbitRadius, Vec3(200, 300, 400), Vec3(0.5, -0.3, 0.2));
    s0.target.v *= 1.005;  // small eccentricity so the spline path is nontrivial
    s0.rot.omega_bs = Vec3(0.01, -0.02, 0.005);
    s0.rot.omega_r = Vec3(0.004, 0.002, -0.006);

    Propagator prop({});
    auto zero_inputs = [](double) { return ExternalInputs{}; };
    auto terminal_rho = [&](double dt) {
        const int steps = static_cast<int>(std::llround(1000.0 / dt));
        return prop.propagate(s0, zero_inputs, dt, steps).back().state.rel.rho;
    };
    const Vec3 ref = terminal_rho(0.25);
    const double e_coarse = (terminal_rho(4.0) - ref).norm();
    const double e_fine = (terminal_rho(2.0) - ref).norm();
    const double ratio = e_coarse / e_fine;
    CHECK(ratio > 10.0);
    CHECK(ratio < 22.0);
}
