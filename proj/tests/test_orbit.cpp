#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "proxops/orbit.hpp"
#include "proxops/rng.hpp"
#include "proxops/spline.hpp"

using namespace proxops;

namespace {
TargetAbsoluteState random_orbit_state(Rng& rng) {
    TargetAbsoluteState s;
    s.r = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized() * rng.uniform(6.6e6, 8e6);
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    dir -= dir.dot(s.r.normalized()) * s.r.normalized();
    s.v = dir.normalized() * rng.uniform(6.5e3, 8.0e3) + s.r.normalized() * rng.uniform(-200.0, 200.0);
    return s;
}
}  // namespace

TEST_CASE("lvlh_basis axis-aligned circular case") {
    TargetAbsoluteState s{Vec3(7e6, 0, 0), Vec3(0, 7.5e3, 0)};
    const LvlhBasis b = lvlh_basis(s);
    CHECK((b.r_hat - Vec3::UnitX()).norm() < 1e-12);
    CHECK((b.theta_hat - Vec3::UnitY()).norm() < 1e-12);
    CHECK((b.h_hat - Vec3::UnitZ()).norm() < 1e-12);
}

TEST_CASE("lvlh_basis orthonormality and alignment for random states") {
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
        const TargetAbsoluteState s = random_orbit_state(rng);
        const LvlhBasis b = lvlh_basis(s);
        CHECK(std::abs(b.r_hat.dot(b.theta_hat)) < 1e-12);
        CHECK(std::abs(b.r_hat.dot(b.h_hat)) < 1e-12);
        CHECK(std::abs(b.theta_hat.dot(b.h_hat)) < 1e-12);
        const Vec3 h = s.r.cross(s.v);
        CHECK((b.h_hat - h.normalized()).norm() < 1e-12);
    }
}

TEST_CASE("lvlh_basis rejects a rectilinear orbit") {
    TargetAbsoluteState s{Vec3(7e6, 0, 0), Vec3(1e3, 0, 0)};
    CHECK_THROWS_AS(lvlh_basis(s), SingularGeometry);
}

TEST_CASE("battin_q trivial and identity cases") {
    const Vec3 rt(7e6, 0, 0);
    CHECK(battin_q(Vec3::Zero(), rt) == 0.0);
    CHECK(std::abs(battin_q(rt, rt) - 3.0) < 1e-15);

    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        const Vec3 rho(rng.uniform(-1e5, 1e5), rng.uniform(-1e5, 1e5), rng.uniform(-1e5, 1e5));
        const Vec3 r(rng.uniform(6.6e6, 8e6), rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6));
        const double q = battin_q(rho, r);
        const double lhs = (1.0 + q) * r.squaredNorm();
        const double rhs = (rho + r).squaredNorm();
        CHECK(std::abs(lhs - rhs) < 1e-9 * rhs);
    }
}

TEST_CASE("gve_rates unperturbed and hand-substituted values") {
    OrbitGeometry g;
    g.mu = kMuEarth;
    g.inc = M_PI / 4;
    g.arg_lat = M_PI / 2;
    g.ecc = 0.0;
    g.true_anom = 0.0;
    g.semilatus = 7e6;
    g.ang_mom = std::sqrt(kMuEarth * g.semilatus);

    SECTION("a_h = 0 leaves only the Keplerian rate") {
        const GveRates r = gve_rates(g, 0, 0, 0, 7e6);
        CHECK(r.di_dt == 0.0);
        CHECK(r.draan_dt == 0.0);
        const double expected = std::sqrt(kMuEarth / std::pow(7e6, 3));
        CHECK(std::abs(r.darg_lat_dt - expected) < 1e-15 * expected);
    }

    SECTION("circular unperturbed rate equals the mean motion") {
        const GveRates r = gve_rates(g, 0, 0, 0, 7e6);
        CHECK(std::abs(r.darg_lat_dt - circular_mean_motion(7e6, kMuEarth)) < 1e-18);
    }

    SECTION("hand substitution at i=45deg, theta=90deg, a_h=1e-5") {
        const double a_h = 1e-5, r_now = 7e6;
        const GveRates r = gve_rates(g, 0, 0, a_h, r_now);
        const double h = g.ang_mom;
        const double di = r_now * std::cos(M_PI / 2) / h * a_h;
        const double draan = r_now * std::sin(M_PI / 2) / (h * std::sin(M_PI / 4)) * a_h;
        const double dth = std::sqrt(kMuEarth / std::pow(7e6, 3)) -
                           r_now * std::sin(M_PI / 2) * std::cos(M_PI / 4) /
                               (h * std::sin(M_PI / 4)) * a_h;
        CHECK(std::abs(r.di_dt - di) <= 1e-12 * std::abs(di) + 1e-25);
        CHECK(std::abs(r.draan_dt - draan) <= 1e-12 * std::abs(draan));
        CHECK(std::abs(r.darg_lat_dt - dth) <= 1e-12 * std::abs(dth));
    }

    SECTION("equatorial orbit with out-of-plane forcing is singular") {
        g.inc = 0.0;
        CHECK_THROWS_AS(gve_rates(g, 0, 0, 1e-5, 7e6), SingularInclination);
        CHECK_NOTHROW(gve_rates(g, 0, 0, 0.0, 7e6));
    }
}

TEST_CASE("lvlh_angular_velocity assembles the printed components") {
    OrbitGeometry g;
    g.inc = 0.3;
    g.arg_lat = 1.1;

    SECTION("unperturbed circular orbit gives [0,0,n]") {
        GveRates r;
        r.darg_lat_dt = 1.1e-3;
        const Vec3 w = lvlh_angular_velocity(g, r);
        CHECK((w - Vec3(0, 0, 1.1e-3)).norm() < 1e-18);
    }

    SECTION("theta-rate only") {
        GveRates r;
        r.darg_lat_dt = 1e-3;
        CHECK((lvlh_angular_velocity(g, r) - Vec3(0, 0, 1e-3)).norm() < 1e-18);
    }

    SECTION("finite-difference frame oracle on a circular orbit") {
        // Propagate two adjacent states and difference the LVLH bases.
        const double r0 = 6.9e6;
        const double n = circular_mean_motion(r0, kMuEarth);
        const double inc = 0.7, dt = 0.25;
        auto state_at = [&](double t) {
            TargetAbsoluteState s;
            const double th = n * t;
            const double v = std::sqrt(kMuEarth / r0);
            s.r = Vec3(r0 * std::cos(th), r0 * std::sin(th) * std::cos(inc),
                       r0 * std::sin(th) * std::sin(inc));
            s.v = Vec3(-v * std::sin(th), v * std::cos(th) * std::cos(inc),
                       v * std::cos(th) * std::sin(inc));
            return s;
        };
        const TargetAbsoluteState s0 = state_at(100.0 - dt);
        const TargetAbsoluteState s1 = state_at(100.0);
        const TargetAbsoluteState s2 = state_at(100.0 + dt);
        const Mat3 L0 = lvlh_basis(s0).inertial_to_lvlh();
        const Mat3 L1 = lvlh_basis(s1).inertial_to_lvlh();
        const Mat3 L2 = lvlh_basis(s2).inertial_to_lvlh();
        // Ldot = -[w]_x L with w in LVLH components, so
        // -(Ldot L^T) = [w]_x; central difference for Ldot.
        const Mat3 W = -((L2 - L0) / (2.0 * dt)) * L1.transpose();
        const Vec3 w_fd(W(2, 1), W(0, 2), W(1, 0));

        const OrbitGeometry g1 = elements_from_rv(s1.r, s1.v, kMuEarth);
        const GveRates rates = gve_rates(g1, 0, 0, 0, s1.r.norm());
        const Vec3 w_lvlh = lvlh_angular_velocity(g1, rates);
        CHECK((w_fd - w_lvlh).norm() < 1e-6);
    }
}

TEST_CASE("elements round trip on a known circular orbit") {
    const double r0 = 6.878e6;
    const double v0 = std::sqrt(kMuEarth / r0);
    const double inc = 0.9;
    TargetAbsoluteState s{Vec3(r0, 0, 0), Vec3(0, v0 * std::cos(inc), v0 * std::sin(inc))};
    const OrbitGeometry g = elements_from_rv(s.r, s.v, kMuEarth);
    CHECK(std::abs(g.inc - inc) < 1e-12);
    CHECK(g.ecc < 1e-12);
    CHECK(std::abs(g.semilatus - r0) < 1e-3);
    CHECK(std::abs(g.mean_motion - circular_mean_motion(r0, kMuEarth)) < 1e-12);
}

TEST_CASE("cubic spline derivative: constant, linear, and sine data") {
    SECTION("constant samples give zero derivative") {
        std::vector<double> t, y;
        for (int i = 0; i < 10; ++i) {
            t.push_back(i * 0.5);
            y.push_back(3.25);
        }
        const CubicSpline s(t, y);
        for (double x = 0.0; x <= 4.5; x += 0.1) CHECK(std::abs(s.deriv(x)) < 1e-12);
    }

    SECTION("linear samples reproduce the slope exactly") {
        std::vector<double> t, y;
        for (int i = 0; i < 12; ++i) {
            t.push_back(i * 0.3);
            y.push_back(2.0 + 1.7 * i * 0.3);
        }
        const CubicSpline s(t, y);
        for (double x = 0.05; x < 3.2; x += 0.07)
            CHECK(std::abs(s.deriv(x) - 1.7) < 1e-10);
    }

    SECTION("cubic polynomial is reproduced exactly (not-a-knot)") {
        auto f = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x - 0.25 * x * x * x; };
        auto fp = [](double x) { return -2.0 + x - 0.75 * x * x; };
        std::vector<double> t, y;
        for (int i = 0; i < 9; ++i) {
            t.push_back(i * 0.4);
            y.push_back(f(i * 0.4));
        }
        const CubicSpline s(t, y);
        for (double x = 0.0; x <= 3.2; x += 0.05) {
            CHECK(std::abs(s.eval(x) - f(x)) < 1e-10);
            CHECK(std::abs(s.deriv(x) - fp(x)) < 1e-9);
        }
    }

    SECTION("sine sampled over one period: derivative error below 1e-4 * n") {
        const double n = 1.1e-3;
        const double period = 2 * M_PI / n;
        std::vector<double> t;
        std::vector<Vec3> w;
        for (int i = 0; i < 100; ++i) {
            const double x = period * i / 99.0;
            t.push_back(x);
            w.push_back(Vec3(0, 0, std::sin(n * x)));
        }
        const VectorSpline s(t, w);
        double max_err = 0.0;
        for (double x = 0.0; x <= period; x += period / 517.0)
            max_err = std::max(max_err, std::abs(s.deriv(x).z() - n * std::cos(n * x)));
        CHECK(max_err < 1e-4 * n);
    }

    SECTION("fewer than 4 samples is an error") {
        std::vector<double> t{0, 1, 2}, y{0, 1, 2};
        CHECK_THROWS_AS(CubicSpline(t, y), InsufficientData);
    }
}
