// Sigma-point unscented Kalman filter with additive noise, a corrected-state
// history buffer for delayed/asynchronous measurements, and
// ordered-weighted-averaging fusion of parallel filters.
//
// Delayed measurements are folded in at the current time by carrying the
// measurement-epoch innovation forward: the extrapolated measurement keeps
// the printed two-term correction, and the gain is built from the
// cross-covariance between measurement-epoch sigma points propagated to now
// and their predicted measurements. With linear dynamics this reproduces a
// roll-back/replay filter exactly; a zero delay reduces bitwise to the
// ordinary update.
#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"

namespace proxops {

struct GaussianBelief {
    VecX m;
    MatX P;
    double t = 0.0;
};

struct UkfConfig {
    double alpha = 0.1;
    double beta = 2.0;   // Gaussian prior
    double kappa = 0.0;
    int n = 0;           // state dimension
    MatX Q;              // additive process noise per predict step

    double lambda() const { return alpha * alpha * (n + kappa) - n; }

    void validate() const {
        if (n < 1) throw InvalidArgument("UkfConfig: n >= 1");
        if (!(n + lambda() > 0.0)) throw InvalidArgument("UkfConfig: n + lambda <= 0");
        if (Q.rows() != n || Q.cols() != n) throw InvalidArgument("UkfConfig: Q must be n x n");
    }
};

struct SigmaPointSet {
    MatX points;  // n x (2n+1), column 0 is the mean
    VecX w_mean;
    VecX w_cov;
};

// state -> state over [t, t + dt]
using UkfDynamics = std::function<VecX(const VecX& x, double t, double dt)>;
// state -> measurement
using UkfMeasurement = std::function<VecX(const VecX& x)>;

namespace detail {
// Lower-Cholesky square root with up-to-1e-9 diagonal jitter, retried once.
inline MatX cholesky_sqrt(const MatX& P) {
    Eigen::LLT<MatX> llt(P);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    llt.compute(P + 1e-9 * MatX::Identity(P.rows(), P.cols()));
    if (llt.info() == Eigen::Success) return llt.matrixL();
    throw NumericalFailure("ukf: covariance square root failed after jitter");
}

inline void symmetrize(MatX& P) { P = 0.5 * (P + P.transpose()).eval(); }
}  // namespace detail

inline SigmaPointSet generate_sigma_points(const GaussianBelief& b, const UkfConfig& c) {
    c.validate();
    const int n = c.n;
    if (b.m.size() != n || b.P.rows() != n)
        throw InvalidArgument("generate_sigma_points: dimension mismatch");
    const double lam = c.lambda();
    const MatX L = detail::cholesky_sqrt(b.P);
    const double scale = std::sqrt(n + lam);

    SigmaPointSet s;
    s.points.resize(n, 2 * n + 1);
    s.points.col(0) = b.m;
    for (int i = 0; i < n; ++i) {
        s.points.col(1 + i) = b.m + scale * L.col(i);
        s.points.col(1 + n + i) = b.m - scale * L.col(i);
    }
    s.w_mean = VecX::Constant(2 * n + 1, 1.0 / (2.0 * (n + lam)));
    s.w_cov = s.w_mean;
    s.w_mean(0) = lam / (n + lam);
    s.w_cov(0) = lam / (n + lam) + (1.0 - c.alpha * c.alpha + c.beta);
    return s;
}

inline GaussianBelief ukf_predict(const GaussianBelief& b, const UkfDynamics& f,
                                  const UkfConfig& c, double dt) {
    const SigmaPointSet s = generate_sigma_points(b, c);
    const int cols = static_cast<int>(s.points.cols());
    MatX prop(c.n, cols);
    for (int i = 0; i < cols; ++i) prop.col(i) = f(s.points.col(i), b.t, dt);

    GaussianBelief out;
    out.t = b.t + dt;
    out.m = prop * s.w_mean;
    out.P = c.Q;
    for (int i = 0; i < cols; ++i) {
        const VecX d = prop.col(i) - out.m;
        out.P += s.w_cov(i) * (d * d.transpose());
    }
    detail::symmetrize(out.P);
    return out;
}

// Prediction with the update skipped: m+ = m-, P+ = P-.
inline GaussianBelief propagate_only(const GaussianBelief& b, const UkfDynamics& f,
                                     const UkfConfig& c, double dt) {
    return ukf_predict(b, f, c, dt);
}

inline GaussianBelief ukf_update(const GaussianBelief& predicted, const VecX& z,
                                 const UkfMeasurement& h, const MatX& R,
                                 const UkfConfig& c) {
    const SigmaPointSet s = generate_sigma_points(predicted, c);
    const int cols = static_cast<int>(s.points.cols());
    const long mz = z.size();
    MatX Z(mz, cols);
    for (int i = 0; i < cols; ++i) Z.col(i) = h(s.points.col(i));
    const VecX z_hat = Z * s.w_mean;

    MatX W = R;
    MatX C = MatX::Zero(c.n, mz);
    for (int i = 0; i < cols; ++i) {
        const VecX dz = Z.col(i) - z_hat;
        W += s.w_cov(i) * (dz * dz.transpose());
        C += s.w_cov(i) * ((s.points.col(i) - predicted.m) * dz.transpose());
    }

    Eigen::FullPivLU<MatX> lu(W);
    if (!lu.isInvertible()) throw NumericalFailure("ukf_update: singular innovation covariance");
    const MatX K = C * lu.inverse();

    GaussianBelief out;
    out.t = predicted.t;
    out.m = predicted.m + K * (z - z_hat);
    out.P = predicted.P - C * K.transpose() - K * C.transpose() + K * W * K.transpose();
    detail::symmetrize(out.P);
    return out;
}

struct HistoryEntry {
    GaussianBelief belief;
    bool corrected = false;
};

// Ring buffer of the last N filter results, timestamps strictly increasing.
class StateHistoryBuffer {
public:
    explicit StateHistoryBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ < 1) throw InvalidArgument("StateHistoryBuffer: capacity >= 1");
    }

    void push(const GaussianBelief& b, bool corrected) {
        if (!entries_.empty() && !(b.t > entries_.back().belief.t))
            throw InvalidArgument("StateHistoryBuffer: timestamps must increase");
        entries_.push_back({b, corrected});
        if (entries_.size() > capacity_) entries_.pop_front();
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }
    double oldest_time() const { return entries_.front().belief.t; }
    double newest_time() const { return entries_.back().belief.t; }
    const HistoryEntry& at(std::size_t i) const { return entries_[i]; }

    // Latest corrected belief with t <= t_meas.
    std::optional<GaussianBelief> latest_corrected_before(double t_meas) const {
        for (std::size_t i = entries_.size(); i-- > 0;) {
            if (entries_[i].belief.t <= t_meas && entries_[i].corrected)
                return entries_[i].belief;
        }
        return std::nullopt;
    }

private:
    std::size_t capacity_;
    std::deque<HistoryEntry> entries_;
};

// z_extra = z_meas + sum w h(X_now-) - sum w h(X_meas-). The current
// predicted belief supplies X_now-; the measurement-epoch sigma points come
// from forward-propagating the closest earlier corrected belief. Zero delay
// returns z_meas bitwise.
inline VecX extrapolate_measurement(const VecX& z_meas, double t_meas,
                                    const StateHistoryBuffer& history,
                                    const UkfMeasurement& h, const UkfDynamics& f,
                                    const UkfConfig& c,
                                    const GaussianBelief& current_predicted) {
    if (t_meas == current_predicted.t) return z_meas;
    if (history.empty() || t_meas < history.oldest_time())
        throw StaleMeasurement("extrapolate_measurement: t_meas older than history span");
    const auto base = history.latest_corrected_before(t_meas);
    if (!base)
        throw StaleMeasurement("extrapolate_measurement: no corrected belief before t_meas");

    GaussianBelief at_meas = *base;
    if (t_meas > at_meas.t) at_meas = ukf_predict(at_meas, f, c, t_meas - at_meas.t);

    const SigmaPointSet s_now = generate_sigma_points(current_predicted, c);
    const SigmaPointSet s_meas = generate_sigma_points(at_meas, c);
    VecX zhat_now = VecX::Zero(z_meas.size());
    VecX zhat_meas = VecX::Zero(z_meas.size());
    for (int i = 0; i < s_now.points.cols(); ++i) {
        zhat_now += s_now.w_mean(i) * h(s_now.points.col(i));
        zhat_meas += s_meas.w_mean(i) * h(s_meas.points.col(i));
    }
    return z_meas + zhat_now - zhat_meas;
}

// Delayed update at the current time: innovation taken at the measurement
// epoch, gain built from the cross-covariance between measurement-epoch
// sigma points propagated to now and their predicted measurements.
inline GaussianBelief ukf_update_delayed(const GaussianBelief& predicted, const VecX& z,
                                         double t_meas, const StateHistoryBuffer& history,
                                         const UkfMeasurement& h, const UkfDynamics& f,
                                         const MatX& R, const UkfConfig& c) {
    if (t_meas == predicted.t) return ukf_update(predicted, z, h, R, c);
    if (history.empty() || t_meas < history.oldest_time())
        throw StaleMeasurement("ukf_update_delayed: t_meas older than history span");
    const auto base = history.latest_corrected_before(t_meas);
    if (!base) throw StaleMeasurement("ukf_update_delayed: no corrected belief before t_meas");

    GaussianBelief at_meas = *base;
    if (t_meas > at_meas.t) at_meas = ukf_predict(at_meas, f, c, t_meas - at_meas.t);

    const SigmaPointSet s = generate_sigma_points(at_meas, c);
    const int cols = static_cast<int>(s.points.cols());
    const long mz = z.size();

    MatX Z(mz, cols);
    MatX X_now(c.n, cols);
    for (int i = 0; i < cols; ++i) {
        Z.col(i) = h(s.points.col(i));
        X_now.col(i) = f(s.points.col(i), t_meas, predicted.t - t_meas);
    }
    const VecX z_hat = Z * s.w_mean;
    const VecX m_now = X_now * s.w_mean;

    MatX W = R;
    MatX C = MatX::Zero(c.n, mz);
    for (int i = 0; i < cols; ++i) {
        const VecX dz = Z.col(i) - z_hat;
        W += s.w_cov(i) * (dz * dz.transpose());
        C += s.w_cov(i) * ((X_now.col(i) - m_now) * dz.transpose());
    }
    Eigen::FullPivLU<MatX> lu(W);
    if (!lu.isInvertible())
        throw NumericalFailure("ukf_update_delayed: singular innovation covariance");
    const MatX K = C * lu.inverse();

    GaussianBelief out;
    out.t = predicted.t;
    out.m = predicted.m + K * (z - z_hat);
    out.P = predicted.P - C * K.transpose() - K * C.transpose() + K * W * K.transpose();
    detail::symmetrize(out.P);
    return out;
}

// Ordered weighted averaging over >= 2 aligned beliefs. Per state component
// j the weights are proportional to the inverse covariance diagonals; the
// fused covariance diagonal sum w_i^2 s_i is a documented heuristic (the
// source defines fused means only).
inline GaussianBelief owa_fuse(const std::vector<GaussianBelief>& beliefs) {
    if (beliefs.size() < 2) throw InvalidArgument("owa_fuse: need >= 2 beliefs");
    const long n = beliefs.front().m.size();
    const double t = beliefs.front().t;
    for (const auto& b : beliefs) {
        if (b.m.size() != n || b.P.rows() != n)
            throw InvalidArgument("owa_fuse: state layout mismatch");
        if (std::abs(b.t - t) > 1e-9)
            throw InvalidArgument("owa_fuse: timestamps not aligned");
    }

    GaussianBelief out;
    out.t = t;
    out.m = VecX::Zero(n);
    out.P = MatX::Zero(n, n);
    for (long j = 0; j < n; ++j) {
        double denom = 0.0;
        for (const auto& b : beliefs) {
            const double s = b.P(j, j);
            if (!(s > 0.0))
                throw DegenerateCovariance("owa_fuse: non-positive covariance diagonal");
            denom += 1.0 / s;
        }
        for (const auto& b : beliefs) {
            const double w = (1.0 / b.P(j, j)) / denom;
            out.m(j) += w * b.m(j);
            out.P(j, j) += w * w * b.P(j, j);
        }
    }
    return out;
}

// Concatenates per-sensor measurement models into one stacked model with a
// block-diagonal noise covariance; the stacked update is an ordinary
// ukf_update on the result.
struct StackedMeasurement {
    UkfMeasurement h;
    MatX R;
};

inline StackedMeasurement stack_measurements(const std::vector<UkfMeasurement>& hs,
                                             const std::vector<MatX>& Rs) {
    if (hs.empty() || hs.size() != Rs.size())
        throw InvalidArgument("stack_measurements: mismatched inputs");
    long mz = 0;
    for (const auto& R : Rs) mz += R.rows();
    StackedMeasurement out;
    out.R = MatX::Zero(mz, mz);
    long off = 0;
    for (const auto& R : Rs) {
        out.R.block(off, off, R.rows(), R.cols()) = R;
        off += R.rows();
    }
    out.h = [hs, mz](const VecX& x) {
        VecX z(mz);
        long o = 0;
        for (const auto& h : hs) {
            const VecX zi = h(x);
            z.segment(o, zi.size()) = zi;
            o += zi.size();
        }
        return z;
    };
    return out;
}

inline GaussianBelief ukf_fusion_stacked(const GaussianBelief& predicted,
                                         const VecX& stacked_z,
                                         const StackedMeasurement& stacked,
                                         const UkfConfig& c) {
    return ukf_update(predicted, stacked_z, stacked.h, stacked.R, c);
}

}  // namespace proxops
