// Not-a-knot cubic spline interpolation with analytic first derivative.
// Not-a-knot end conditions make the interpolant exact for data sampled from
// any single cubic polynomial, which the derivative tests rely on.
#pragma once

#include <algorithm>
#include <vector>

#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"

namespace proxops {

class CubicSpline {
public:
    CubicSpline() = default;

    CubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 4 || y_.size() != n)
            throw InsufficientData("CubicSpline: need >= 4 samples");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw InvalidArgument("CubicSpline: times must be strictly increasing");

        std::vector<double> h(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];

        // Solve for second derivatives M_1..M_{n-2}; M_0 and M_{n-1} follow
        // from the not-a-knot conditions (continuous third derivative at the
        // first and last interior knots).
        const std::size_t m = n - 2;
        std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const std::size_t k = i - 1;
            lower[k] = h[i - 1] / 6.0;
            diag[k] = (h[i - 1] + h[i]) / 3.0;
            upper[k] = h[i] / 6.0;
            rhs[k] = (y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1];
        }
        // M_0 = ((h0+h1) M_1 - h0 M_2) / h1 folded into row 0.
        diag[0] += lower[0] * (h[0] + h[1]) / h[1];
        upper[0] -= lower[0] * h[0] / h[1];
        lower[0] = 0.0;
        // M_{n-1} = ((h_{n-2}+h_{n-3}) M_{n-2} - h_{n-2} M_{n-3}) / h_{n-3}.
        const double hl = h[n - 2], hp = h[n - 3];
        diag[m - 1] += upper[m - 1] * (hl + hp) / hp;
        lower[m - 1] -= upper[m - 1] * hl / hp;
        upper[m - 1] = 0.0;

        // Thomas elimination.
        for (std::size_t k = 1; k < m; ++k) {
            const double w = lower[k] / diag[k - 1];
            diag[k] -= w * upper[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        m2_.assign(n, 0.0);
        m2_[n - 2] = rhs[m - 1] / diag[m - 1];
        for (std::size_t k = m - 1; k-- > 0;)
            m2_[k + 1] = (rhs[k] - upper[k] * m2_[k + 2]) / diag[k];
        m2_[0] = ((h[0] + h[1]) * m2_[1] - h[0] * m2_[2]) / h[1];
        m2_[n - 1] = ((hl + hp) * m2_[n - 2] - hl * m2_[n - 3]) / hp;
    }

    double eval(double t) const {
        const std::size_t i = segment(t);
        const double h = x_[i + 1] - x_[i];
        const double a = x_[i + 1] - t, b = t - x_[i];
        return m2_[i] * a * a * a / (6.0 * h) + m2_[i + 1] * b * b * b / (6.0 * h) +
               (y_[i] / h - m2_[i] * h / 6.0) * a + (y_[i + 1] / h - m2_[i + 1] * h / 6.0) * b;
    }

    double deriv(double t) const {
        const std::size_t i = segment(t);
        const double h = x_[i + 1] - x_[i];
        const double a = x_[i + 1] - t, b = t - x_[i];
        return -m2_[i] * a * a / (2.0 * h) + m2_[i + 1] * b * b / (2.0 * h) +
               (y_[i + 1] - y_[i]) / h - (m2_[i + 1] - m2_[i]) * h / 6.0;
    }

    double t_min() const { return x_.front(); }
    double t_max() const { return x_.back(); }

private:
    std::size_t segment(double t) const {
        // Clamped extrapolation on the end segments.
        auto it = std::upper_bound(x_.begin(), x_.end(), t);
        std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it));
        if (i == 0) return 0;
        if (i >= x_.size()) return x_.size() - 2;
        return i - 1;
    }

    std::vector<double> x_, y_, m2_;
};

// Componentwise spline over Vec3 samples; deriv() gives the fitted
// time-derivative used for the LVLH angular acceleration.
class VectorSpline {
public:
    VectorSpline() = default;

    VectorSpline(const std::vector<double>& t, const std::vector<Vec3>& samples) {
        if (samples.size() != t.size())
            throw InvalidArgument("VectorSpline: size mismatch");
        std::vector<double> c0(t.size()), c1(t.size()), c2(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            c0[i] = samples[i].x();
            c1[i] = samples[i].y();
            c2[i] = samples[i].z();
        }
        s_[0] = CubicSpline(t, c0);
        s_[1] = CubicSpline(t, c1);
        s_[2] = CubicSpline(t, c2);
    }

    Vec3 eval(double t) const {
        return Vec3(s_[0].eval(t), s_[1].eval(t), s_[2].eval(t));
    }
    Vec3 deriv(double t) const {
        return Vec3(s_[0].deriv(t), s_[1].deriv(t), s_[2].deriv(t));
    }

private:
    CubicSpline s_[3];
};

}  // namespace proxops
