// Nonlinear relative translational dynamics (Battin q form), relative
// rotational dynamics, and a fixed-step RK4 propagator over the combined
// 26-dimensional state.
//
// Frames: relative translation lives in target LVLH components, target
// absolute state in inertial, angular velocities in their own body frames
// (omega_bs in F_bs, omega_r in F_bt). Perturbing and thrust accelerations
// in ExternalInputs are LVLH components; torques are body components.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "proxops/attitude.hpp"
#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"
#include "proxops/orbit.hpp"
#include "proxops/spline.hpp"

namespace proxops {

struct RelativeTranslationalState {
    Vec3 rho = Vec3::Zero();      // m, LVLH
    Vec3 rho_dot = Vec3::Zero();  // m/s, LVLH-observed
};

struct RotationalState {
    Quaternion q_s;                 // F_bs w.r.t. inertial
    Vec3 omega_bs = Vec3::Zero();   // rad/s, F_bs components
    Quaternion q_r;                 // F_bt w.r.t. F_bs
    Vec3 omega_r = Vec3::Zero();    // rad/s, F_bt components
};

struct SpacecraftInertia {
    Mat3 J_s = Mat3::Identity();  // kg m^2
    Mat3 J_t = Mat3::Identity();
    double m_s = 1.0;  // kg
    double m_t = 1.0;
};

struct ExternalInputs {
    Vec3 a_p_t = Vec3::Zero();  // target perturbation, m/s^2, LVLH
    Vec3 a_p_s = Vec3::Zero();  // chaser perturbation, m/s^2, LVLH
    Vec3 a_t_s = Vec3::Zero();  // chaser thrust, m/s^2, LVLH
    Vec3 T_s = Vec3::Zero();    // N m, F_bs
    Vec3 T_t = Vec3::Zero();    // N m, F_bt
};

// L rho_ddot per the Battin q formulation. rho, rho_dot, omega terms and the
// returned acceleration are all LVLH components; the target position enters
// as the vector [|r_t|, 0, 0].
inline Vec3 relative_translational_accel(const RelativeTranslationalState& rel,
                                         const TargetAbsoluteState& tgt,
                                         const Vec3& omega_li,
                                         const Vec3& omega_li_dot,
                                         const ExternalInputs& in, double mu) {
    const double rt = tgt.r.norm();
    const Vec3 rt_lvlh(rt, 0.0, 0.0);
    const double q = battin_q(rel.rho, rt_lvlh);
    const double rs = (rel.rho + rt_lvlh).norm();
    if (rs == 0.0) throw SingularGeometry("relative accel: chaser at body center");

    const double sq = std::sqrt(1.0 + q);
    const double gain = q * (q + 2.0 + sq) / ((1.0 + q) * sq * (sq + 1.0));

    return mu / (rt * rt * rt) * gain * rt_lvlh - mu / (rs * rs * rs) * rel.rho +
           in.a_p_s + in.a_t_s - in.a_p_t - 2.0 * omega_li.cross(rel.rho_dot) -
           omega_li_dot.cross(rel.rho) - omega_li.cross(omega_li.cross(rel.rho));
}

// Euler's rigid-body equation: omega_dot = J^-1 [T - omega x (J omega)].
inline Vec3 euler_eom(const Vec3& omega, const Mat3& J, const Vec3& T) {
    Eigen::LDLT<Mat3> ldlt(J);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw InvalidArgument("euler_eom: inertia not symmetric positive definite");
    return ldlt.solve(T - omega.cross(J * omega));
}

// omega_dot_r in F_bt components; A = dcm(q_r) maps F_bs -> F_bt.
inline Vec3 relative_rotational_accel(const RotationalState& rot,
                                      const SpacecraftInertia& inertia,
                                      const ExternalInputs& in) {
    const Mat3 A = quat_to_dcm(rot.q_r);
    const Vec3 w_bs_bt = A * rot.omega_bs;
    const Vec3 w_bt = rot.omega_r + w_bs_bt;
    const Vec3 term_t = euler_eom(w_bt, inertia.J_t, in.T_t);
    const Vec3 term_s = euler_eom(rot.omega_bs, inertia.J_s, in.T_s);
    return term_t - A * term_s + w_bt.cross(w_bs_bt);
}

struct FullState {
    TargetAbsoluteState target;
    RelativeTranslationalState rel;
    RotationalState rot;
};

struct TimedState {
    double t = 0.0;
    FullState state;
};

using InputSchedule = std::function<ExternalInputs(double t)>;

// omega_{L/I} of the target LVLH frame, LVLH components, from the current
// absolute state. a_p_t_lvlh feeds the GVE out-of-plane terms.
inline Vec3 target_lvlh_omega(const TargetAbsoluteState& tgt, const Vec3& a_p_t_lvlh,
                              double mu) {
    const OrbitGeometry g = elements_from_rv(tgt.r, tgt.v, mu);
    const GveRates rates = gve_rates(g, a_p_t_lvlh.x(), a_p_t_lvlh.y(),
                                     a_p_t_lvlh.z(), tgt.r.norm());
    return lvlh_angular_velocity(g, rates);
}

// Fits one cubic spline per component over an omega_{L/I} sample grid; its
// analytic derivative stands in for omega_dot_{L/I}(t).
inline VectorSpline lvlh_angular_accel(const std::vector<double>& times,
                                       const std::vector<Vec3>& omega_samples) {
    return VectorSpline(times, omega_samples);
}

namespace detail {

using StateVec = Eigen::Matrix<double, 26, 1>;

inline StateVec pack(const FullState& s) {
    StateVec y;
    y.segment<3>(0) = s.target.r;
    y.segment<3>(3) = s.target.v;
    y.segment<3>(6) = s.rel.rho;
    y.segment<3>(9) = s.rel.rho_dot;
    y.segment<4>(12) = s.rot.q_s.coeffs();
    y.segment<3>(16) = s.rot.omega_bs;
    y.segment<4>(19) = s.rot.q_r.coeffs();
    y.segment<3>(23) = s.rot.omega_r;
    return y;
}

inline FullState unpack(const StateVec& y, bool renormalize) {
    FullState s;
    s.target.r = y.segment<3>(0);
    s.target.v = y.segment<3>(3);
    s.rel.rho = y.segment<3>(6);
    s.rel.rho_dot = y.segment<3>(9);
    Quaternion qs, qr;
    qs.v = y.segment<3>(12);
    qs.s = y(15);
    qr.v = y.segment<3>(19);
    qr.s = y(22);
    s.rot.q_s = renormalize ? qs.normalized() : qs;
    s.rot.q_r = renormalize ? qr.normalized() : qr;
    s.rot.omega_bs = y.segment<3>(16);
    s.rot.omega_r = y.segment<3>(23);
    return s;
}

}  // namespace detail

class Propagator {
public:
    Propagator(SpacecraftInertia inertia, double mu = kMuEarth)
        : inertia_(inertia), mu_(mu) {}

    // Fixed-step RK4 over n_steps of size dt. The LVLH angular acceleration
    // is the spline derivative over an omega grid precomputed from a
    // target-only pass at the same step size.
    std::vector<TimedState> propagate(const FullState& initial,
                                      const InputSchedule& inputs, double dt,
                                      int n_steps) const {
        if (dt <= 0.0) throw InvalidArgument("propagate: dt must be positive");
        if (n_steps < 3) throw InvalidArgument("propagate: need >= 3 steps");

        const VectorSpline omega_dot = precompute_omega_spline(initial.target, inputs, dt, n_steps);

        std::vector<TimedState> out;
        out.reserve(static_cast<std::size_t>(n_steps) + 1);
        detail::StateVec y = detail::pack(initial);
        out.push_back({0.0, detail::unpack(y, true)});
        for (int k = 0; k < n_steps; ++k) {
            const double t = k * dt;
            y = rk4_step(y, t, dt, inputs, omega_dot);
            // Renormalize quaternions in place after each step.
            y.segment<4>(12).normalize();
            y.segment<4>(19).normalize();
            out.push_back({t + dt, detail::unpack(y, true)});
        }
        return out;
    }

    // Full state derivative at (t, y); omega_dot_li supplied externally.
    detail::StateVec derivative(const detail::StateVec& y, double t,
                                const InputSchedule& inputs,
                                const VectorSpline& omega_dot_li) const {
        const FullState s = detail::unpack(y, false);
        const ExternalInputs in = inputs(t);

        const LvlhBasis basis = lvlh_basis(s.target);
        const Mat3 L = basis.inertial_to_lvlh();
        const Vec3 omega_li = target_lvlh_omega(s.target, in.a_p_t, mu_);
        const Vec3 omega_li_dot = omega_dot_li.deriv(t);

        detail::StateVec dy;
        dy.segment<3>(0) = s.target.v;
        dy.segment<3>(3) = two_body_accel(s.target.r, mu_, L.transpose() * in.a_p_t);
        dy.segment<3>(6) = s.rel.rho_dot;
        dy.segment<3>(9) =
            relative_translational_accel(s.rel, s.target, omega_li, omega_li_dot, in, mu_);
        dy.segment<4>(12) = quat_rate(s.rot.q_s, s.rot.omega_bs);
        dy.segment<3>(16) = euler_eom(s.rot.omega_bs, inertia_.J_s, in.T_s);
        dy.segment<4>(19) = quat_rate(s.rot.q_r, s.rot.omega_r);
        dy.segment<3>(23) = relative_rotational_accel(s.rot, inertia_, in);
        return dy;
    }

    double mu() const { return mu_; }
    const SpacecraftInertia& inertia() const { return inertia_; }

private:
    VectorSpline precompute_omega_spline(const TargetAbsoluteState& tgt0,
                                         const InputSchedule& inputs, double dt,
                                         int n_steps) const {
        std::vector<double> times;
        std::vector<Vec3> omegas;
        times.reserve(static_cast<std::size_t>(n_steps) + 1);
        omegas.reserve(static_cast<std::size_t>(n_steps) + 1);

        Vec6 y;
        y.head<3>() = tgt0.r;
        y.tail<3>() = tgt0.v;
        auto deriv = [&](const Vec6& x, double t) {
            TargetAbsoluteState st{x.head<3>(), x.tail<3>()};
            const Mat3 L = lvlh_basis(st).inertial_to_lvlh();
            Vec6 d;
            d.head<3>() = st.v;
            d.tail<3>() = two_body_accel(st.r, mu_, L.transpose() * inputs(t).a_p_t);
            return d;
        };
        for (int k = 0; k <= n_steps; ++k) {
            const double t = k * dt;
            TargetAbsoluteState st{y.head<3>(), y.tail<3>()};
            times.push_back(t);
            omegas.push_back(target_lvlh_omega(st, inputs(t).a_p_t, mu_));
            if (k == n_steps) break;
            const Vec6 k1 = deriv(y, t);
            const Vec6 k2 = deriv(y + 0.5 * dt * k1, t + 0.5 * dt);
            const Vec6 k3 = deriv(y + 0.5 * dt * k2, t + 0.5 * dt);
            const Vec6 k4 = deriv(y + dt * k3, t + dt);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return VectorSpline(times, omegas);
    }

    detail::StateVec rk4_step(const detail::StateVec& y, double t, double dt,
                              const InputSchedule& inputs,
                              const VectorSpline& omega_dot) const {
        const detail::StateVec k1 = derivative(y, t, inputs, omega_dot);
        const detail::StateVec k2 = derivative(y + 0.5 * dt * k1, t + 0.5 * dt, inputs, omega_dot);
        const detail::StateVec k3 = derivative(y + 0.5 * dt * k2, t + 0.5 * dt, inputs, omega_dot);
        const detail::StateVec k4 = derivative(y + dt * k3, t + dt, inputs, omega_dot);
        return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    SpacecraftInertia inertia_;
    double mu_;
};

// Impulsive thrust between integration steps: velocity increment in LVLH.
inline void apply_impulse(FullState& s, const Vec3& dv_lvlh) {
    s.rel.rho_dot += dv_lvlh;
}

// Circular-orbit full state helper: target on a circular orbit of radius r
// at zero argument of latitude, chaser offset by rho/rho_dot in LVLH.
inline FullState circular_scenario(double orbit_radius, const Vec3& rho,
                                   const Vec3& rho_dot, double mu = kMuEarth,
                                   double inclination = 0.9) {
    FullState s;
    const double v = std::sqrt(mu / orbit_radius);
    const double ci = std::cos(inclination), si = std::sin(inclination);
    s.target.r = Vec3(orbit_radius, 0.0, 0.0);
    s.target.v = Vec3(0.0, v * ci, v * si);
    s.rel.rho = rho;
    s.rel.rho_dot = rho_dot;
    return s;
}

}  // namespace proxops
