// Exact Gaussian-process regression with an anisotropic squared-exponential
// kernel, marginal-likelihood hyperparameter search (multistart, gradient
// free), and the expected-improvement acquisition value.
#pragma once

#include <cmath>
#include <vector>

#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"
#include "proxops/rng.hpp"

namespace proxops {

struct GpKernel {
    VecX lengthscales;       // per input dimension
    double signal_var = 1.0;
    double noise_var = 1e-6;
};

class GpSurrogate {
public:
    GpSurrogate() = default;

    GpSurrogate(MatX X, VecX y, GpKernel kernel)
        : X_(std::move(X)), kernel_(std::move(kernel)) {
        if (X_.rows() < 1 || y.size() != X_.rows())
            throw InvalidArgument("GpSurrogate: need >= 1 observation");
        if (kernel_.lengthscales.size() != X_.cols())
            throw InvalidArgument("GpSurrogate: lengthscale dimension mismatch");
        y_mean_ = y.mean();
        y_ = y.array() - y_mean_;

        const long n = X_.rows();
        MatX K(n, n);
        for (long i = 0; i < n; ++i)
            for (long j = 0; j <= i; ++j)
                K(i, j) = K(j, i) = kval(X_.row(i), X_.row(j));
        double jitter = 0.0;
        for (int attempt = 0; attempt < 3; ++attempt) {
            llt_.compute(K + (kernel_.noise_var + jitter) * MatX::Identity(n, n));
            if (llt_.info() == Eigen::Success) {
                alpha_ = llt_.solve(y_);
                return;
            }
            jitter = (jitter == 0.0) ? 1e-10 : jitter * 100.0;
        }
        throw NumericalFailure("GpSurrogate: kernel matrix not positive definite");
    }

    struct Prediction {
        double mean = 0.0;
        double variance = 0.0;
    };

    Prediction predict(const VecX& x) const {
        const long n = X_.rows();
        VecX k(n);
        for (long i = 0; i < n; ++i) k(i) = kval(X_.row(i), x.transpose());
        Prediction p;
        p.mean = y_mean_ + k.dot(alpha_);
        const VecX v = llt_.matrixL().solve(k);
        p.variance = std::max(kernel_.signal_var - v.squaredNorm(), 0.0);
        return p;
    }

    double log_marginal_likelihood() const {
        const long n = X_.rows();
        double logdet = 0.0;
        for (long i = 0; i < n; ++i) logdet += std::log(llt_.matrixLLT()(i, i));
        return -0.5 * y_.dot(alpha_) - logdet - 0.5 * n * std::log(2.0 * M_PI);
    }

    const MatX& X() const { return X_; }
    const GpKernel& kernel() const { return kernel_; }

private:
    double kval(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
        double s = 0.0;
        for (long d = 0; d < a.size(); ++d) {
            const double t = (a(d) - b(d)) / kernel_.lengthscales(d);
            s += t * t;
        }
        return kernel_.signal_var * std::exp(-0.5 * s);
    }

    MatX X_;
    VecX y_;
    double y_mean_ = 0.0;
    GpKernel kernel_;
    Eigen::LLT<MatX> llt_;
    VecX alpha_;
};

namespace detail {
// Drops rows closer than 1e-9 to an earlier row; keeps the first occurrence.
inline void dedupe_rows(MatX& X, VecX& y) {
    std::vector<long> keep;
    for (long i = 0; i < X.rows(); ++i) {
        bool dup = false;
        for (long k : keep)
            if ((X.row(i) - X.row(k)).norm() < 1e-9) { dup = true; break; }
        if (!dup) keep.push_back(i);
    }
    if (keep.size() == static_cast<std::size_t>(X.rows())) return;
    MatX X2(static_cast<long>(keep.size()), X.cols());
    VecX y2(static_cast<long>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        X2.row(static_cast<long>(i)) = X.row(keep[i]);
        y2(static_cast<long>(i)) = y(keep[i]);
    }
    X = std::move(X2);
    y = std::move(y2);
}
}  // namespace detail

// Fixed-kernel fit (deduplicated).
inline GpSurrogate gp_fit(MatX X, VecX y, const GpKernel& kernel) {
    detail::dedupe_rows(X, y);
    return GpSurrogate(std::move(X), std::move(y), kernel);
}

// Fit with kernel hyperparameters chosen by maximizing the marginal
// likelihood: random multistart over log-space boxes plus a coordinate
// refinement pass. Inputs are expected in the unit cube.
inline GpSurrogate gp_fit_mll(MatX X, VecX y, Rng& rng, int n_starts = 24,
                              int refine_rounds = 12) {
    detail::dedupe_rows(X, y);
    const long d = X.cols();
    const double y_var = (y.size() > 1)
                             ? (y.array() - y.mean()).square().sum() / (y.size() - 1)
                             : 1.0;
    const double sv_scale = std::max(y_var, 1e-8);

    struct Theta {
        VecX log_ls;
        double log_sv, log_nv;
    };
    auto build = [&](const Theta& t) {
        GpKernel k;
        k.lengthscales = t.log_ls.array().exp();
        k.signal_var = std::exp(t.log_sv);
        k.noise_var = std::exp(t.log_nv);
        return k;
    };
    auto score = [&](const Theta& t) -> double {
        try {
            return GpSurrogate(X, y, build(t)).log_marginal_likelihood();
        } catch (const NumericalFailure&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    Theta best;
    best.log_ls = VecX::Constant(d, std::log(0.5));
    best.log_sv = std::log(sv_scale);
    best.log_nv = std::log(1e-4 * sv_scale);
    double best_score = score(best);

    for (int s = 0; s < n_starts; ++s) {
        Theta t;
        t.log_ls.resize(d);
        for (long k = 0; k < d; ++k)
            t.log_ls(k) = rng.uniform(std::log(0.05), std::log(10.0));
        t.log_sv = std::log(sv_scale) + rng.uniform(-2.0, 2.0);
        t.log_nv = std::log(sv_scale) + rng.uniform(-14.0, -2.0);
        const double sc = score(t);
        if (sc > best_score) {
            best_score = sc;
            best = t;
        }
    }
    // Coordinate descent with shrinking steps.
    double step = 0.5;
    for (int round = 0; round < refine_rounds; ++round) {
        bool improved = false;
        for (long k = 0; k < d + 2; ++k) {
            for (double dir : {+1.0, -1.0}) {
                Theta t = best;
                if (k < d) t.log_ls(k) += dir * step;
                else if (k == d) t.log_sv += dir * step;
                else t.log_nv = std::min(t.log_nv + dir * step, std::log(sv_scale));
                const double sc = score(t);
                if (sc > best_score) {
                    best_score = sc;
                    best = t;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return GpSurrogate(std::move(X), std::move(y), build(best));
}

inline GpSurrogate::Prediction gp_predict(const GpSurrogate& s, const VecX& x) {
    return s.predict(x);
}

// Expected improvement for maximization. sigma = 0 reduces to
// max(mean - best, 0).
inline double expected_improvement(double mean, double variance, double best_so_far) {
    if (variance < 0.0) throw InvalidArgument("expected_improvement: negative variance");
    const double sigma = std::sqrt(variance);
    const double diff = mean - best_so_far;
    if (sigma == 0.0) return std::max(diff, 0.0);
    const double z = diff / sigma;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return std::max(diff * cdf + sigma * pdf, 0.0);
}

}  // namespace proxops
