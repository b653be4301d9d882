#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "proxops/qp.hpp"
#include "proxops/rng.hpp"

using namespace proxops;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("unconstrained QP returns -H^{-1} g") {
    MatX H(2, 2);
    H << 2, 0.5, 0.5, 3;
    VecX g(2);
    g << 1, -2;
    MatX A(0, 2);
    VecX b(0);
    VecX lb = VecX::Constant(2, -kInf), ub = VecX::Constant(2, kInf);
    const VecX x = solve_qp(H, g, A, b, lb, ub);
    const VecX expected = -H.inverse() * g;
    CHECK((x - expected).norm() < 1e-10);
}

TEST_CASE("single active constraint projects onto the boundary") {
    // min 1/2 |x|^2 s.t. x1 >= 1  ->  x = (1, 0, 0).
    const int n = 3;
    MatX H = MatX::Identity(n, n);
    VecX g = VecX::Zero(n);
    MatX A(1, n);
    A << 1, 0, 0;
    VecX b(1);
    b << 1;
    VecX lb = VecX::Constant(n, -kInf), ub = VecX::Constant(n, kInf);
    const VecX x = solve_qp(H, g, A, b, lb, ub);
    CHECK((x - Vec3(1, 0, 0)).norm() < 1e-10);
}

TEST_CASE("box clamping matches the componentwise closed form") {
    // Diagonal H, no rows: minimizer is the clamped unconstrained solution.
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4;
        VecX d(n), g(n), lb(n), ub(n);
        for (int i = 0; i < n; ++i) {
            d(i) = rng.uniform(0.5, 3.0);
            g(i) = rng.uniform(-5.0, 5.0);
            lb(i) = rng.uniform(-2.0, 0.0);
            ub(i) = rng.uniform(0.1, 2.0);
        }
        const MatX H = MatX(d.asDiagonal());
        const VecX x = solve_qp(H, g, MatX(0, n), VecX(0), lb, ub);
        for (int i = 0; i < n; ++i) {
            const double unc = -g(i) / d(i);
            CHECK(std::abs(x(i) - std::clamp(unc, lb(i), ub(i))) < 1e-9);
        }
    }
}

TEST_CASE("random small QPs beat a brute-force grid search") {
    Rng rng(43);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2;
        MatX M(n, n);
        for (int i = 0; i < n * n; ++i) M.data()[i] = rng.normal();
        const MatX H = M * M.transpose() + 0.5 * MatX::Identity(n, n);
        VecX g(n);
        for (int i = 0; i < n; ++i) g(i) = rng.normal();
        MatX A(2, n);
        VecX b(2);
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < n; ++c) A(r, c) = rng.normal();
            b(r) = rng.uniform(-1.5, -0.2);  // keeps the origin feasible
        }
        const VecX lb = VecX::Constant(n, -1.0), ub = VecX::Constant(n, 1.0);

        const VecX x = solve_qp(H, g, A, b, lb, ub);
        const double obj = 0.5 * x.dot(H * x) + g.dot(x);
        // Solver result must satisfy the constraints...
        for (int r = 0; r < 2; ++r) CHECK(A.row(r).dot(x) >= b(r) - 1e-9);
        for (int i = 0; i < n; ++i) {
            CHECK(x(i) >= lb(i) - 1e-9);
            CHECK(x(i) <= ub(i) + 1e-9);
        }
        // ...and be no worse than the best feasible grid point.
        const double brute = oracles::qp_bruteforce_objective(H, g, A, b, lb, ub, 61);
        CHECK(obj <= brute + 1e-4);
    }
}

TEST_CASE("KKT stationarity holds at the reported solution") {
    Rng rng(47);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 3;
        MatX M(n, n);
        for (int i = 0; i < n * n; ++i) M.data()[i] = rng.normal();
        const MatX H = M * M.transpose() + 0.3 * MatX::Identity(n, n);
        VecX g(n);
        for (int i = 0; i < n; ++i) g(i) = 2.0 * rng.normal();
        MatX A(3, n);
        VecX b(3);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < n; ++c) A(r, c) = rng.normal();
            b(r) = rng.uniform(-2.0, 0.5);
        }
        VecX lb = VecX::Constant(n, -2.0), ub = VecX::Constant(n, 2.0);

        QpResult res;
        try {
            res = solve_qp_full(H, g, A, b, lb, ub);
        } catch (const QpInfeasible&) {
            continue;  // random instance genuinely infeasible
        }
        // Reconstruct gradient minus the active-constraint combination.
        VecX grad = H * res.x + g;
        const auto stacked = detail::stack_constraints(A, b, lb, ub);
        for (std::size_t k = 0; k < res.active_set.size(); ++k) {
            CHECK(res.multipliers(static_cast<long>(k)) >= -1e-9);
            grad -= res.multipliers(static_cast<long>(k)) *
                    stacked.C.row(res.active_set[k]).transpose();
        }
        CHECK(grad.norm() < 1e-8);
    }
}

TEST_CASE("infeasible constraint sets raise QpInfeasible with an active set") {
    MatX H = MatX::Identity(1, 1);
    VecX g = VecX::Zero(1);
    MatX A(2, 1);
    A << 1, -1;
    VecX b(2);
    b << 2, 2;  // x >= 2 and -x >= 2: empty
    VecX lb = VecX::Constant(1, -kInf), ub = VecX::Constant(1, kInf);
    CHECK_THROWS_AS(solve_qp(H, g, A, b, lb, ub), QpInfeasible);

    try {
        solve_qp(H, g, A, b, lb, ub);
    } catch (const QpInfeasible& e) {
        CHECK(!e.active_set.empty());
    }
}
