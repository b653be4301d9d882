// Operational constraints phi_1..phi_5, the CW control barrier functions
// h_1..h_5 built on the worst-case deceleration a_m, and the
// minimal-intervention quadratic-program control filter.
//
// Sign convention: phi >= 0 and h >= 0 mean satisfied. The filter enforces
// hdot + alpha h >= 0 along CW dynamics, which is affine in the commanded
// thrust acceleration.
#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "proxops/cw.hpp"
#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"
#include "proxops/qp.hpp"

namespace proxops {

struct SafetyParams {
    double r_agent_i = 0.5;   // m
    double r_agent_j = 0.5;   // m
    double r_target = 0.5;    // m
    double r_m = 1000.0;      // model-validity radius, m
    double nu_0 = 0.05;       // m/s
    double nu_1 = 0.1;        // 1/s
    double theta_s = 0.5;     // sun cone full angle, rad
    Vec3 e_sun_hat = Vec3::UnitX();
    double F_max = 1.0;       // N
    double T_max = 0.1;       // N m
    double mass = 10.0;       // kg
    double n = 1.13e-3;       // mean motion, rad/s
    double v_m = 1.0;         // max allowable speed, m/s
    double alpha_cbf = 1.0;   // class-K gain, 1/s, shared across barriers
    bool sun_constraint_enabled = false;  // gates the h5 row in the filter

    void validate() const {
        if (r_agent_i <= 0.0 || r_agent_j <= 0.0 || r_target <= 0.0)
            throw InvalidArgument("SafetyParams: radii must be positive");
        if (r_m <= r_agent_i + r_target)
            throw InvalidArgument("SafetyParams: r_m must exceed r_agent + r_target");
        if (theta_s <= 0.0 || theta_s >= M_PI)
            throw InvalidArgument("SafetyParams: theta_s out of (0, pi)");
        if (std::abs(e_sun_hat.norm() - 1.0) > 1e-9)
            throw InvalidArgument("SafetyParams: e_sun_hat must be unit");
        if (F_max <= 0.0 || T_max <= 0.0 || mass <= 0.0)
            throw InvalidArgument("SafetyParams: F_max, T_max, mass must be positive");
    }
};

struct AgentKinematics {
    Vec3 rho = Vec3::Zero();      // m, LVLH, relative to target
    Vec3 rho_dot = Vec3::Zero();  // m/s
    std::optional<Vec3> rho_pr;       // sun-cone projection point, m
    std::optional<Vec3> rho_pr_dot;   // its velocity, m/s
};

struct ControlCommand {
    Vec3 u_force = Vec3::Zero();   // thrust acceleration, m/s^2
    Vec3 u_torque = Vec3::Zero();  // N m
};

// a_m = F_max/m - 3 n^2 r_m - 2 n v_m. Must be positive for the braking
// barriers to exist.
inline double worst_case_accel(const SafetyParams& p) {
    const double a_m = p.F_max / p.mass - 3.0 * p.n * p.n * p.r_m - 2.0 * p.n * p.v_m;
    if (!(a_m > 0.0))
        throw InfeasibleSafetyConfig("worst_case_accel: a_m <= 0, barriers undefined");
    return a_m;
}

// Projection of rho onto the boundary of the sun exclusion cone (apex at the
// target, axis e_sun_hat, half angle theta_s/2), preserving distance to the
// nearest boundary ray.
inline Vec3 sun_cone_projection(const Vec3& rho, const SafetyParams& p) {
    const double rn = rho.norm();
    if (rn == 0.0) throw SingularGeometry("sun_cone_projection: rho = 0");
    const Vec3 axis = p.e_sun_hat;
    Vec3 perp = rho - rho.dot(axis) * axis;
    if (perp.norm() < 1e-12 * rn) {
        // On the axis: any boundary direction is equidistant; pick one.
        perp = axis.unitOrthogonal();
    } else {
        perp.normalize();
    }
    const double half = 0.5 * p.theta_s;
    const Vec3 boundary_dir = std::cos(half) * axis + std::sin(half) * perp;
    const double along = std::max(rho.dot(boundary_dir), 0.0);
    return along * boundary_dir;
}

struct ConstraintValues {
    std::vector<double> phi1;  // one per unordered agent pair (i < j)
    std::vector<double> phi2, phi3, phi4, phi5;  // one per agent

    double min_value() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto* v : {&phi1, &phi2, &phi3, &phi4, &phi5})
            for (double x : *v) m = std::min(m, x);
        return m;
    }
};

namespace detail {
inline double agent_radius(const SafetyParams& p, std::size_t idx) {
    return idx == 0 ? p.r_agent_i : p.r_agent_j;
}
}  // namespace detail

inline ConstraintValues eval_constraints(const std::vector<AgentKinematics>& agents,
                                         const SafetyParams& p) {
    if (agents.empty()) throw InvalidArgument("eval_constraints: no agents");
    ConstraintValues out;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const Vec3& rho = agents[i].rho;
        const double rn = rho.norm();
        if (rn == 0.0)
            throw SingularGeometry("eval_constraints: |rho| = 0, phi5 undefined");
        out.phi2.push_back(rn - (detail::agent_radius(p, i) + p.r_target));
        out.phi3.push_back(p.r_m - rn);
        out.phi4.push_back(p.nu_1 * rn + p.nu_0 - agents[i].rho_dot.norm());
        out.phi5.push_back(-rho.dot(p.e_sun_hat) / rn + std::cos(0.5 * p.theta_s));
        for (std::size_t j = i + 1; j < agents.size(); ++j) {
            const double sep = (agents[i].rho - agents[j].rho).norm();
            out.phi1.push_back(sep - (detail::agent_radius(p, i) + detail::agent_radius(p, j)));
        }
    }
    return out;
}

struct BarrierValues {
    std::vector<double> h1;
    std::vector<double> h2, h3, h4, h5;

    double min_value() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto* v : {&h1, &h2, &h3, &h4, &h5})
            for (double x : *v) m = std::min(m, x);
        return m;
    }
};

namespace detail {
inline double braking_sqrt(double a, double radicand_arg, int barrier) {
    const double r = a * radicand_arg;
    if (r < 0.0)
        throw ConstraintViolated(barrier, "eval_cbfs: negative radicand for h" +
                                              std::to_string(barrier));
    return std::sqrt(r);
}
}  // namespace detail

inline BarrierValues eval_cbfs(const std::vector<AgentKinematics>& agents,
                               const SafetyParams& p) {
    if (agents.empty()) throw InvalidArgument("eval_cbfs: no agents");
    const double a_m = worst_case_accel(p);
    BarrierValues out;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const Vec3& rho = agents[i].rho;
        const Vec3& v = agents[i].rho_dot;
        const double rn = rho.norm();
        if (rn == 0.0) throw SingularGeometry("eval_cbfs: |rho| = 0");
        const double radial_rate = rho.dot(v) / rn;

        out.h2.push_back(
            detail::braking_sqrt(a_m, rn - (detail::agent_radius(p, i) + p.r_target), 2) +
            radial_rate);
        out.h3.push_back(detail::braking_sqrt(a_m, p.r_m - rn, 3) + radial_rate);
        out.h4.push_back(p.nu_1 * rn + p.nu_0 - v.norm());

        const Vec3 pr = agents[i].rho_pr ? *agents[i].rho_pr : sun_cone_projection(rho, p);
        const Vec3 pr_dot = agents[i].rho_pr_dot ? *agents[i].rho_pr_dot : Vec3::Zero();
        out.h5.push_back(detail::braking_sqrt(a_m, (rho - pr).norm(), 5) +
                         rho.dot(v - pr_dot) / rn);

        for (std::size_t j = i + 1; j < agents.size(); ++j) {
            const Vec3 drho = agents[i].rho - agents[j].rho;
            const Vec3 dv = agents[i].rho_dot - agents[j].rho_dot;
            const double dn = drho.norm();
            if (dn == 0.0) throw SingularGeometry("eval_cbfs: coincident agents");
            out.h1.push_back(
                detail::braking_sqrt(
                    2.0 * (a_m + a_m),
                    dn - (detail::agent_radius(p, i) + detail::agent_radius(p, j)), 1) +
                drho.dot(dv) / dn);
        }
    }
    return out;
}

namespace detail {

// One affine CBF row: grad_v . u >= rhs_floor, assembled from
// hdot = grad_r . v + grad_v . (f_cw + u) and hdot + alpha h >= 0.
struct CbfRow {
    Vec3 grad_v;
    double drift;  // grad_r . v + grad_v . f_cw
    double h;
};

inline Vec3 safe_unit(const Vec3& v) {
    const double n = v.norm();
    return n > 1e-12 ? Vec3(v / n) : Vec3::Zero();
}

// Rows for the controlled agent (index 0); other agents contribute pairwise
// h1 rows with their own control taken as zero.
inline std::vector<CbfRow> cbf_rows(const std::vector<AgentKinematics>& agents,
                                    const SafetyParams& p) {
    const double a_m = worst_case_accel(p);
    const AgentKinematics& a0 = agents.front();
    const Vec3& rho = a0.rho;
    const Vec3& v = a0.rho_dot;
    const double rn = rho.norm();
    if (rn == 0.0) throw SingularGeometry("filter_control: |rho| = 0");
    const Vec3 rhat = rho / rn;
    const double radial_rate = rho.dot(v) / rn;
    const Vec3 f = cw_accel(rho, v, p.n);
    // d/drho of (rho.v / |rho|)
    const Vec3 grad_r_radial = v / rn - rho * (rho.dot(v)) / (rn * rn * rn);

    std::vector<CbfRow> rows;
    const double rc = agent_radius(p, 0) + p.r_target;
    {   // h2
        const double s = braking_sqrt(a_m, rn - rc, 2);
        const Vec3 grad_r = (s > 1e-12 ? (a_m / (2.0 * s)) * rhat : Vec3(1e12 * rhat)) +
                            grad_r_radial;
        rows.push_back({rhat, grad_r.dot(v) + rhat.dot(f), s + radial_rate});
    }
    {   // h3
        const double s = braking_sqrt(a_m, p.r_m - rn, 3);
        const Vec3 grad_r = (s > 1e-12 ? -(a_m / (2.0 * s)) * rhat : Vec3(-1e12 * rhat)) +
                            grad_r_radial;
        rows.push_back({rhat, grad_r.dot(v) + rhat.dot(f), s + radial_rate});
    }
    {   // h4
        const Vec3 grad_v = -safe_unit(v);
        const Vec3 grad_r = p.nu_1 * rhat;
        rows.push_back({grad_v, grad_r.dot(v) + grad_v.dot(f),
                        p.nu_1 * rn + p.nu_0 - v.norm()});
    }
    if (p.sun_constraint_enabled) {  // h5; projection point treated as exogenous
        const Vec3 pr = a0.rho_pr ? *a0.rho_pr : sun_cone_projection(rho, p);
        const Vec3 pr_dot = a0.rho_pr_dot ? *a0.rho_pr_dot : Vec3::Zero();
        const double s = braking_sqrt(a_m, (rho - pr).norm(), 5);
        const Vec3 diff_unit = safe_unit(rho - pr);
        const Vec3 vrel = v - pr_dot;
        const Vec3 grad_r = (s > 1e-12 ? (a_m / (2.0 * s)) * diff_unit : Vec3(1e12 * diff_unit)) +
                            vrel / rn - rho * rho.dot(vrel) / (rn * rn * rn);
        rows.push_back({rhat, grad_r.dot(v) + rhat.dot(f), s + rho.dot(vrel) / rn});
    }
    for (std::size_t j = 1; j < agents.size(); ++j) {  // h1 vs agent j
        const Vec3 drho = rho - agents[j].rho;
        const Vec3 dv = v - agents[j].rho_dot;
        const double dn = drho.norm();
        if (dn == 0.0) throw SingularGeometry("filter_control: coincident agents");
        const Vec3 dhat = drho / dn;
        const double s =
            braking_sqrt(4.0 * a_m, dn - (agent_radius(p, 0) + agent_radius(p, j)), 1);
        const Vec3 grad_r = (s > 1e-12 ? (4.0 * a_m / (2.0 * s)) * dhat : Vec3(1e12 * dhat)) +
                            dv / dn - drho * drho.dot(dv) / (dn * dn * dn);
        const Vec3 fj = cw_accel(agents[j].rho, agents[j].rho_dot, p.n);
        rows.push_back({dhat, grad_r.dot(dv) + dhat.dot(f - fj), s + drho.dot(dv) / dn});
    }
    return rows;
}

}  // namespace detail

// Minimal-intervention safety filter: argmin (u - u_ref)^T Q (u - u_ref)
// subject to hdot_k + alpha h_k >= 0 for each enabled barrier and the
// actuation box. Throws QpInfeasible when the constraint set is empty;
// callers decide the fallback.
inline ControlCommand filter_control(const ControlCommand& u_ref,
                                     const std::vector<AgentKinematics>& agents,
                                     const SafetyParams& p, const Mat6& Q) {
    if (agents.empty()) throw InvalidArgument("filter_control: no agents");
    const std::vector<detail::CbfRow> rows = detail::cbf_rows(agents, p);

    MatX A(static_cast<int>(rows.size()), 6);
    VecX b(static_cast<int>(rows.size()));
    A.setZero();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        A.row(static_cast<int>(k)).head<3>() = rows[k].grad_v.transpose();
        b(static_cast<int>(k)) = -(rows[k].drift + p.alpha_cbf * rows[k].h);
    }

    VecX lb(6), ub(6);
    const double u_max = p.F_max / p.mass;
    lb << -u_max, -u_max, -u_max, -p.T_max, -p.T_max, -p.T_max;
    ub = -lb;

    Vec6 uref;
    uref << u_ref.u_force, u_ref.u_torque;
    const MatX H = 2.0 * Q;
    const VecX g = -2.0 * (Q * uref);

    const VecX u = solve_qp(H, g, A, b, lb, ub);
    ControlCommand out;
    out.u_force = u.head<3>();
    out.u_torque = u.tail<3>();
    return out;
}

}  // namespace proxops
