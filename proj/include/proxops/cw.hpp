// Clohessy-Wiltshire linearized relative motion about a circular reference
// orbit. LVLH axis order matches the rest of the library: x radial,
// y along-track, z cross-track (angular momentum).
#pragma once

#include <cmath>

#include "proxops/linalg.hpp"

namespace proxops {

// Relative acceleration of the CW model, control not included.
inline Vec3 cw_accel(const Vec3& rho, const Vec3& rho_dot, double n) {
    return Vec3(3.0 * n * n * rho.x() + 2.0 * n * rho_dot.y(),
                -2.0 * n * rho_dot.x(),
                -n * n * rho.z());
}

// Exact state transition matrix over time t for state [rho; rho_dot].
inline Mat6 cw_stm(double n, double t) {
    const double c = std::cos(n * t);
    const double s = std::sin(n * t);
    Mat6 m = Mat6::Zero();
    m(0, 0) = 4.0 - 3.0 * c;
    m(0, 3) = s / n;
    m(0, 4) = 2.0 / n * (1.0 - c);
    m(1, 0) = 6.0 * (s - n * t);
    m(1, 1) = 1.0;
    m(1, 3) = 2.0 / n * (c - 1.0);
    m(1, 4) = (4.0 * s - 3.0 * n * t) / n;
    m(2, 2) = c;
    m(2, 5) = s / n;
    m(3, 0) = 3.0 * n * s;
    m(3, 3) = c;
    m(3, 4) = 2.0 * s;
    m(4, 0) = 6.0 * n * (c - 1.0);
    m(4, 3) = -2.0 * s;
    m(4, 4) = 4.0 * c - 3.0;
    m(5, 2) = -n * s;
    m(5, 5) = c;
    return m;
}

}  // namespace proxops
