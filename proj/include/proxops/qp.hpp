// Dense active-set solver for strictly convex QPs of the size this library
// needs (n <= 6 decision variables, <= ~20 inequality rows).
//
//   minimize   1/2 x^T H x + g^T x
//   subject to A x >= b,  lb <= x <= ub
//
// Dual active-set method (Goldfarb-Idnani): start at the unconstrained
// minimum, add the most violated constraint at a time, dropping blocking
// constraints along dual steps. Feasibility of the constraint set is
// detected exactly; KKT residuals are at working precision for these sizes.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"

namespace proxops {

struct QpResult {
    VecX x;
    std::vector<int> active_set;  // row indices into the stacked constraint list
    VecX multipliers;             // same order as active_set
};

namespace detail {

struct StackedConstraints {
    MatX C;  // each ROW is c_k^T, constraint c_k^T x >= d_k
    VecX d;
};

inline StackedConstraints stack_constraints(const MatX& A, const VecX& b,
                                            const VecX& lb, const VecX& ub) {
    const int n = static_cast<int>(lb.size());
    std::vector<int> box_rows;
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(lb(i))) box_rows.push_back(i + 1);    // +e_i x >= lb
        if (std::isfinite(ub(i))) box_rows.push_back(-(i + 1)); // -e_i x >= -ub
    }
    StackedConstraints s;
    const int m = static_cast<int>(A.rows()) + static_cast<int>(box_rows.size());
    s.C.setZero(m, n);
    s.d.setZero(m);
    s.C.topRows(A.rows()) = A;
    s.d.head(A.rows()) = b;
    int r = static_cast<int>(A.rows());
    for (int code : box_rows) {
        if (code > 0) {
            s.C(r, code - 1) = 1.0;
            s.d(r) = lb(code - 1);
        } else {
            s.C(r, -code - 1) = -1.0;
            s.d(r) = -ub(-code - 1);
        }
        ++r;
    }
    return s;
}

}  // namespace detail

inline QpResult solve_qp_full(const MatX& H, const VecX& g, const MatX& A,
                              const VecX& b, const VecX& lb, const VecX& ub) {
    const int n = static_cast<int>(H.rows());
    if (H.cols() != n || g.size() != n)
        throw InvalidArgument("solve_qp: dimension mismatch");
    Eigen::LLT<MatX> hllt(H);
    if (hllt.info() != Eigen::Success)
        throw InvalidArgument("solve_qp: H not positive definite");

    const detail::StackedConstraints sc = detail::stack_constraints(A, b, lb, ub);
    const int m = static_cast<int>(sc.C.rows());

    VecX x = hllt.solve(-g);
    std::vector<int> active;
    std::vector<double> lambda;

    double d_scale = 1.0;
    for (int k = 0; k < m; ++k) d_scale = std::max(d_scale, std::abs(sc.d(k)));
    const double feas_tol = 1e-11 * d_scale;
    const int max_iter = 50 * (m + 1);

    for (int iter = 0; iter < max_iter; ++iter) {
        // Most violated inactive constraint.
        int p = -1;
        double worst = -feas_tol;
        for (int k = 0; k < m; ++k) {
            bool in_active = false;
            for (int a : active)
                if (a == k) { in_active = true; break; }
            if (in_active) continue;
            const double s = sc.C.row(k).dot(x) - sc.d(k);
            if (s < worst) {
                worst = s;
                p = k;
            }
        }
        if (p < 0) {
            QpResult res;
            res.x = x;
            res.active_set = active;
            res.multipliers.resize(static_cast<long>(lambda.size()));
            for (std::size_t i = 0; i < lambda.size(); ++i)
                res.multipliers(static_cast<long>(i)) = lambda[i];
            return res;
        }

        const VecX cp = sc.C.row(p).transpose();
        double lambda_p = 0.0;

        // Inner loop: take dual/primal steps until constraint p is active.
        for (int inner = 0; inner <= m + 1; ++inner) {
            const int na = static_cast<int>(active.size());
            const VecX hinv_cp = hllt.solve(cp);
            VecX r(na);
            VecX z = hinv_cp;
            if (na > 0) {
                MatX Ca(na, n);
                for (int i = 0; i < na; ++i) Ca.row(i) = sc.C.row(active[i]);
                const MatX HiCt = hllt.solve(Ca.transpose());
                const MatX S = Ca * HiCt;  // na x na, SPD for independent rows
                r = S.ldlt().solve(Ca * hinv_cp);
                z = hinv_cp - HiCt * r;
            }

            const double czp = cp.dot(z);
            const double sp = cp.dot(x) - sc.d(p);

            // Blocking dual step among active constraints with r_k > 0.
            double t1 = std::numeric_limits<double>::infinity();
            int blocking = -1;
            for (int i = 0; i < na; ++i) {
                if (r(i) > 1e-14) {
                    const double t = lambda[static_cast<std::size_t>(i)] / r(i);
                    if (t < t1) {
                        t1 = t;
                        blocking = i;
                    }
                }
            }

            if (czp <= 1e-13) {
                // No primal progress possible toward p.
                if (!std::isfinite(t1)) {
                    std::vector<int> bad = active;
                    bad.push_back(p);
                    throw QpInfeasible(bad, "solve_qp: infeasible constraint set");
                }
                // Pure dual step: drop the blocking constraint.
                for (int i = 0; i < na; ++i) lambda[static_cast<std::size_t>(i)] -= t1 * r(i);
                lambda_p += t1;
                active.erase(active.begin() + blocking);
                lambda.erase(lambda.begin() + blocking);
                continue;
            }

            const double t2 = -sp / czp;
            const double t = std::min(t1, t2);
            x += t * z;
            for (int i = 0; i < na; ++i) lambda[static_cast<std::size_t>(i)] -= t * r(i);
            lambda_p += t;

            if (t2 <= t1) {
                active.push_back(p);
                lambda.push_back(lambda_p);
                break;
            }
            active.erase(active.begin() + blocking);
            lambda.erase(lambda.begin() + blocking);
        }
    }
    throw NumericalFailure("solve_qp: iteration limit exceeded");
}

inline VecX solve_qp(const MatX& H, const VecX& g, const MatX& A, const VecX& b,
                     const VecX& lb, const VecX& ub) {
    return solve_qp_full(H, g, A, b, lb, ub).x;
}

}  // namespace proxops
