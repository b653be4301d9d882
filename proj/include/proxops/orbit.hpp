// Target absolute orbit machinery: LVLH frame construction, the Battin q
// parameter, osculating elements, Gauss variational rates, and the LVLH
// angular velocity assembled from them.
#pragma once

#include <cmath>

#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"

namespace proxops {

inline constexpr double kMuEarth = 3.986004418e14;  // m^3/s^2
inline constexpr double kEarthRadius = 6.378e6;     // m

struct TargetAbsoluteState {
    Vec3 r = Vec3::Zero();  // inertial position, m
    Vec3 v = Vec3::Zero();  // inertial velocity, m/s
};

// Right-handed orthonormal triad (r_hat, theta_hat, h_hat) expressed in
// inertial components.
struct LvlhBasis {
    Vec3 r_hat, theta_hat, h_hat;

    // Rows are the basis vectors: maps inertial components to LVLH components.
    Mat3 inertial_to_lvlh() const {
        Mat3 m;
        m.row(0) = r_hat;
        m.row(1) = theta_hat;
        m.row(2) = h_hat;
        return m;
    }
};

inline LvlhBasis lvlh_basis(const TargetAbsoluteState& s) {
    const double r = s.r.norm();
    const Vec3 hv = s.r.cross(s.v);
    const double h = hv.norm();
    if (r == 0.0 || h < 1e-12 * r * s.v.norm() || h == 0.0)
        throw SingularGeometry("lvlh_basis: degenerate (rectilinear) orbit");
    LvlhBasis b;
    b.r_hat = s.r / r;
    b.h_hat = hv / h;
    b.theta_hat = b.h_hat.cross(b.r_hat);
    return b;
}

// q = (|rho|^2 + 2 rho.r_t) / r_t^2. Satisfies (1+q) r_t^2 = |rho + r_t|^2,
// so q > -1 whenever the chaser is off the central body.
inline double battin_q(const Vec3& rho, const Vec3& r_t) {
    const double rt2 = r_t.squaredNorm();
    if (rt2 <= 0.0) throw SingularGeometry("battin_q: zero target radius");
    const double q = (rho.squaredNorm() + 2.0 * rho.dot(r_t)) / rt2;
    if ((rho + r_t).squaredNorm() == 0.0)
        throw SingularGeometry("battin_q: chaser at central body center");
    return q;
}

struct OrbitGeometry {
    double mu = kMuEarth;     // m^3/s^2
    double raan = 0.0;        // Omega, rad
    double inc = 0.0;         // i, rad
    double arg_lat = 0.0;     // theta_t = omega + nu, rad
    double ecc = 0.0;         // e
    double true_anom = 0.0;   // nu, rad
    double semilatus = 0.0;   // p, m
    double ang_mom = 0.0;     // h, m^2/s
    double mean_motion = 0.0; // n, rad/s
};

// Osculating elements from an inertial state. Degenerate cases use the
// standard conventions: equatorial -> node along +x, circular -> nu measured
// from the node.
inline OrbitGeometry elements_from_rv(const Vec3& r, const Vec3& v, double mu) {
    OrbitGeometry g;
    g.mu = mu;
    const double rn = r.norm();
    const Vec3 hv = r.cross(v);
    const double h = hv.norm();
    if (rn == 0.0 || h == 0.0)
        throw SingularGeometry("elements_from_rv: rectilinear orbit");
    g.ang_mom = h;
    g.semilatus = h * h / mu;
    g.inc = std::acos(std::clamp(hv.z() / h, -1.0, 1.0));

    const Vec3 e_vec = ((v.squaredNorm() - mu / rn) * r - r.dot(v) * v) / mu;
    g.ecc = e_vec.norm();

    const Vec3 h_hat = hv / h;
    const Vec3 node = Vec3::UnitZ().cross(hv);
    Vec3 n_hat;
    if (node.norm() > 1e-12 * h) {
        n_hat = node.normalized();
        g.raan = std::atan2(n_hat.y(), n_hat.x());
    } else {
        n_hat = Vec3::UnitX();  // equatorial
        g.raan = 0.0;
    }
    // Argument of latitude: angle from the node to the position, in-plane.
    g.arg_lat = std::atan2(r.dot(h_hat.cross(n_hat)), r.dot(n_hat));

    if (g.ecc > 1e-11) {
        const Vec3 e_hat = e_vec / g.ecc;
        g.true_anom = std::atan2(r.dot(h_hat.cross(e_hat)), r.dot(e_hat));
    } else {
        g.true_anom = g.arg_lat;  // circular: periapsis at the node
    }

    const double a = g.semilatus / (1.0 - g.ecc * g.ecc);
    g.mean_motion = std::sqrt(mu / (a * a * a));
    return g;
}

struct GveRates {
    double di_dt = 0.0;
    double draan_dt = 0.0;
    double darg_lat_dt = 0.0;
};

// (a_r, a_theta, a_h) are the LVLH components of the perturbing acceleration
// on the target; r is its current radius.
inline GveRates gve_rates(const OrbitGeometry& g, double a_r, double a_theta,
                          double a_h, double r) {
    (void)a_r;
    (void)a_theta;
    GveRates out;
    const double sin_i = std::sin(g.inc);
    const double sin_th = std::sin(g.arg_lat);
    const double cos_th = std::cos(g.arg_lat);
    const double ecosnu = 1.0 + g.ecc * std::cos(g.true_anom);

    out.di_dt = r * cos_th / g.ang_mom * a_h;
    out.darg_lat_dt = std::sqrt(g.mu / std::pow(g.semilatus, 3)) * ecosnu * ecosnu;
    if (std::abs(sin_i) < 1e-12) {
        if (std::abs(a_h) > 0.0)
            throw SingularInclination(
                "gve_rates: equatorial orbit with out-of-plane acceleration");
        out.draan_dt = 0.0;
    } else {
        const double node_term = r * sin_th / (g.ang_mom * sin_i) * a_h;
        out.draan_dt = node_term;
        out.darg_lat_dt -= node_term * std::cos(g.inc);
    }
    return out;
}

// omega_{L/I} in LVLH components (r_hat, theta_hat, h_hat).
inline Vec3 lvlh_angular_velocity(const OrbitGeometry& g, const GveRates& rates) {
    const double sin_i = std::sin(g.inc);
    const double cos_i = std::cos(g.inc);
    const double sin_th = std::sin(g.arg_lat);
    const double cos_th = std::cos(g.arg_lat);
    return Vec3(rates.draan_dt * sin_i * sin_th + rates.di_dt * cos_th,
                rates.draan_dt * sin_i * cos_th - rates.di_dt * sin_th,
                rates.draan_dt * cos_i + rates.darg_lat_dt);
}

inline Vec3 two_body_accel(const Vec3& r, double mu, const Vec3& a_p = Vec3::Zero()) {
    const double rn = r.norm();
    if (rn == 0.0) throw SingularGeometry("two_body_accel: r = 0");
    return -mu / (rn * rn * rn) * r + a_p;
}

// Mean motion of a circular orbit at radius r.
inline double circular_mean_motion(double r, double mu) {
    return std::sqrt(mu / (r * r * r));
}

}  // namespace proxops
