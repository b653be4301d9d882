// Synthetic pose sensor standing in for the navigation network, plus the
// translation/rotation/pose error metrics used to score estimates.
#pragma once

#include <cmath>
#include <optional>

#include "proxops/attitude.hpp"
#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"
#include "proxops/rng.hpp"

namespace proxops {

struct PoseSensorModel {
    double sigma_t = 0.0;   // translation noise std, m
    double sigma_q = 0.0;   // rotation noise std, rad (axis-angle magnitude)
    double rate = 2.0;      // Hz
    enum class DelayKind { Fixed, Uniform };
    DelayKind delay_kind = DelayKind::Fixed;
    double delay_a = 0.0;   // fixed value, or lower bound, s
    double delay_b = 0.0;   // upper bound for Uniform, s
    double dropout = 0.0;   // probability an emission is lost

    void validate() const {
        if (!(rate > 0.0)) throw ConfigError("PoseSensorModel: rate must be positive");
        if (delay_a < 0.0 || delay_b < delay_a * (delay_kind == DelayKind::Uniform ? 1.0 : 0.0))
            throw ConfigError("PoseSensorModel: delays must be >= 0 and ordered");
        if (delay_kind == DelayKind::Uniform && delay_b < delay_a)
            throw ConfigError("PoseSensorModel: delay_b >= delay_a");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ConfigError("PoseSensorModel: dropout in [0, 1)");
    }
};

struct PoseMeasurement {
    Vec3 translation = Vec3::Zero();  // m
    Quaternion rotation;
    double t_meas = 0.0;       // acquisition time
    double t_available = 0.0;  // t_meas + sampled processing delay
    int sensor_id = 0;
};

// One emission tick: dropout draw, Gaussian translation noise, axis-angle
// rotation perturbation, sampled delay. Draw order is fixed so a seed pins
// the whole stream.
inline std::optional<PoseMeasurement> mock_pose_sensor(const Vec3& true_translation,
                                                       const Quaternion& true_rotation,
                                                       const PoseSensorModel& model,
                                                       double t_now, Rng& rng,
                                                       int sensor_id = 0) {
    const bool dropped = rng.uniform01() < model.dropout;
    Vec3 t_noisy = true_translation;
    for (int i = 0; i < 3; ++i) t_noisy(i) += model.sigma_t * rng.normal();
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    if (axis.norm() < 1e-12) axis = Vec3::UnitX();
    const double angle = model.sigma_q * rng.normal();
    const Quaternion q_noisy =
        quat_multiply(Quaternion::from_axis_angle(axis.normalized(), angle), true_rotation);
    double delay = model.delay_a;
    if (model.delay_kind == PoseSensorModel::DelayKind::Uniform)
        delay = rng.uniform(model.delay_a, model.delay_b);
    if (dropped) return std::nullopt;

    PoseMeasurement m;
    m.translation = t_noisy;
    m.rotation = q_noisy;
    m.t_meas = t_now;
    m.t_available = t_now + delay;
    m.sensor_id = sensor_id;
    return m;
}

struct PoseErrors {
    double e_t = 0.0;  // m
    double e_q = 0.0;  // rad
    double e_p = 0.0;  // combined
};

// e_t = |t_hat - t|, e_q = 2 acos(|<q_hat, q>|),
// e_p = |t_hat - t| / |t| + e_q. Calibration thresholds, when positive, zero
// out sub-threshold errors before e_p is formed.
inline PoseErrors pose_error_metrics(const Vec3& t_hat, const Vec3& t,
                                     const Quaternion& q_hat, const Quaternion& q,
                                     double calib_t = 0.0, double calib_q = 0.0) {
    PoseErrors e;
    e.e_t = (t_hat - t).norm();
    e.e_q = quat_angle_between(q_hat, q);
    if (calib_t > 0.0 && e.e_t < calib_t) e.e_t = 0.0;
    if (calib_q > 0.0 && e.e_q < calib_q) e.e_q = 0.0;
    const double tn = t.norm();
    if (tn == 0.0) throw InvalidArgument("pose_error_metrics: |t| = 0, e_p undefined");
    e.e_p = e.e_t / tn + e.e_q;
    return e;
}

}  // namespace proxops
