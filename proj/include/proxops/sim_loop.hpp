// Closed-loop runner: a deterministic single-threaded event loop over sensor
// emissions, measurement arrivals, filter ticks, and control ticks.
//
// Per control period each agent runs: two mock pose sensors -> per-camera
// UKFs plus a stacked-measurement UKF -> OWA fusion -> guidance on the fused
// estimate -> CBF safety filter -> nonlinear plant, with an optional
// simulated-arm layer driven through the kappa/nu scaling. Guidance and
// safety only ever see fused estimates; plant truth is logged separately.
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "proxops/attitude.hpp"
#include "proxops/ddpg.hpp"
#include "proxops/linalg.hpp"
#include "proxops/mlp.hpp"
#include "proxops/relative_dynamics.hpp"
#include "proxops/robot.hpp"
#include "proxops/safety.hpp"
#include "proxops/scenario.hpp"
#include "proxops/sensor.hpp"
#include "proxops/ukf.hpp"

namespace proxops {

// Truth plant on a circular unperturbed target orbit: the LVLH rate is the
// constant [0, 0, n], so relative translation plus both attitude chains close
// into a 20-state ODE integrated with RK4.
class ClosedLoopPlant {
public:
    ClosedLoopPlant(const OrbitConfig& orbit, const SpacecraftInertia& inertia,
                    const Vec3& rho0, const Vec3& rho_dot0)
        : inertia_(inertia), mu_(orbit.mu), r_t_(orbit.radius) {
        n_ = circular_mean_motion(orbit.radius, orbit.mu);
        rho_ = rho0;
        rho_dot_ = rho_dot0;
    }

    void step(double dt, const Vec3& accel_lvlh, const Vec3& torque_s, int substeps = 0) {
        if (substeps <= 0) substeps = std::max(1, static_cast<int>(std::ceil(dt / 0.1)));
        const double h = dt / substeps;
        for (int i = 0; i < substeps; ++i) rk4(h, accel_lvlh, torque_s);
    }

    void apply_impulse(const Vec3& dv) { rho_dot_ += dv; }

    const Vec3& rho() const { return rho_; }
    const Vec3& rho_dot() const { return rho_dot_; }
    const RotationalState& rotation() const { return rot_; }
    double mean_motion() const { return n_; }
    double orbit_radius() const { return r_t_; }
    double mu() const { return mu_; }

private:
    void rk4(double h, const Vec3& u, const Vec3& torque) {
        const TargetAbsoluteState tgt{Vec3(r_t_, 0, 0), Vec3::Zero()};
        const Vec3 omega(0.0, 0.0, n_);
        ExternalInputs in;
        in.a_t_s = u;
        in.T_s = torque;
        auto accel = [&](const Vec3& r, const Vec3& v) {
            return relative_translational_accel({r, v}, tgt, omega, Vec3::Zero(), in, mu_);
        };
        const Vec3 k1v = accel(rho_, rho_dot_), k1r = rho_dot_;
        const Vec3 k2r = rho_dot_ + 0.5 * h * k1v;
        const Vec3 k2v = accel(rho_ + 0.5 * h * k1r, k2r);
        const Vec3 k3r = rho_dot_ + 0.5 * h * k2v;
        const Vec3 k3v = accel(rho_ + 0.5 * h * k2r, k3r);
        const Vec3 k4r = rho_dot_ + h * k3v;
        const Vec3 k4v = accel(rho_ + h * k3r, k4r);
        rho_ += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        rho_dot_ += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

        // Attitude chain (plant torque on the chaser only, target unactuated).
        const Vec4 qs_dot = quat_rate(rot_.q_s, rot_.omega_bs);
        const Vec3 wbs_dot = euler_eom(rot_.omega_bs, inertia_.J_s, torque);
        const Vec4 qr_dot = quat_rate(rot_.q_r, rot_.omega_r);
        const Vec3 wr_dot = relative_rotational_accel(rot_, inertia_, in);
        rot_.q_s = Quaternion::from_coeffs(rot_.q_s.coeffs() + h * qs_dot);
        rot_.omega_bs += h * wbs_dot;
        rot_.q_r = Quaternion::from_coeffs(rot_.q_r.coeffs() + h * qr_dot);
        rot_.omega_r += h * wr_dot;
    }

    SpacecraftInertia inertia_;
    double mu_, r_t_, n_ = 0.0;
    Vec3 rho_ = Vec3::Zero(), rho_dot_ = Vec3::Zero();
    RotationalState rot_;
};

// 12-state translational filter model {rho, rho_dot, r_t, v_t}: exact
// unperturbed LVLH rate omega = [0,0,h/r^2] and its analytic derivative, the
// commanded acceleration as a known input.
class TranslationalFilterModel {
public:
    explicit TranslationalFilterModel(double mu) : mu_(mu) {}

    void set_control(const Vec3& u) { u_ = u; }
    const Vec3& control() const { return u_; }

    VecX propagate(const VecX& x, double dt) const {
        VecX y = x;
        const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(dt) / 0.5)));
        const double h = dt / substeps;
        for (int i = 0; i < substeps; ++i) {
            const VecX k1 = deriv(y);
            const VecX k2 = deriv(y + 0.5 * h * k1);
            const VecX k3 = deriv(y + 0.5 * h * k2);
            const VecX k4 = deriv(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return y;
    }

private:
    VecX deriv(const VecX& x) const {
        const Vec3 rho = x.segment<3>(0);
        const Vec3 rho_dot = x.segment<3>(3);
        const Vec3 r_t = x.segment<3>(6);
        const Vec3 v_t = x.segment<3>(9);
        const double rn = r_t.norm();
        const Vec3 hv = r_t.cross(v_t);
        const double hn = hv.norm();
        const double w = hn / (rn * rn);
        const double w_dot = -2.0 * hn * r_t.dot(v_t) / (rn * rn * rn * rn);

        ExternalInputs in;
        in.a_t_s = u_;
        VecX d(12);
        d.segment<3>(0) = rho_dot;
        d.segment<3>(3) = relative_translational_accel(
            {rho, rho_dot}, {r_t, v_t}, Vec3(0, 0, w), Vec3(0, 0, w_dot), in, mu_);
        d.segment<3>(6) = v_t;
        d.segment<3>(9) = two_body_accel(r_t, mu_);
        return d;
    }

    double mu_;
    Vec3 u_ = Vec3::Zero();
};

struct ControlRecord {
    double t = 0.0;
    Vec3 rho_true, rho_dot_true;
    Vec3 rho_est, rho_dot_est;
    Vec3 u_ref, u_cmd;
    double h1 = std::numeric_limits<double>::quiet_NaN();
    double h2 = 0.0, h3 = 0.0, h4 = 0.0, h5 = 0.0;
    double reward = 0.0;
    bool qp_saturated = false;
};

struct EstimateRecord {
    double t = 0.0;
    VecX mean;
    VecX p_diag;
    bool cam_available[2] = {false, false};
    double e_t = 0.0, e_q = 0.0, e_p = 0.0;
};

struct JointRecord {
    double t_lab = 0.0;
    Vec6 q, q_dot;
    Vec3 ee_position;
};

struct RunMetrics {
    std::vector<ControlRecord> controls;
    std::vector<EstimateRecord> estimates;
    std::vector<PoseMeasurement> delivered_measurements;
    std::vector<JointRecord> joints;
    bool docked = false;
    double dock_time = -1.0;
    double total_reward = 0.0;
    double min_barrier = std::numeric_limits<double>::infinity();
    double E_t = 0.0, E_q = 0.0, E_p = 0.0;
    int stale_measurements_dropped = 0;
    std::string failure;  // empty on clean completion
};

namespace loopdetail {

struct AgentFilters {
    TranslationalFilterModel model;
    UkfConfig config;
    MatX R_single;
    std::vector<GaussianBelief> beliefs;  // cam0, cam1, stacked
    std::vector<StateHistoryBuffer> histories;
    std::optional<Quaternion> attitude_estimate;  // latest measured q_r
    GaussianBelief fused;

    AgentFilters(const ScenarioConfig& cfg, const Vec3& rho0, const Vec3& rho_dot0)
        : model(cfg.orbit.mu) {
        config.alpha = cfg.ukf.alpha;
        config.beta = cfg.ukf.beta;
        config.kappa = cfg.ukf.kappa;
        config.n = 12;
        VecX qd(12);
        qd << VecX::Constant(3, cfg.ukf.q_pos), VecX::Constant(3, cfg.ukf.q_vel),
            VecX::Constant(3, cfg.ukf.q_target), VecX::Constant(3, cfg.ukf.q_target * 1e-6);
        config.Q = qd.asDiagonal();
        R_single = cfg.ukf.r_pos * MatX::Identity(3, 3);

        GaussianBelief b0;
        b0.m.resize(12);
        const double v = std::sqrt(cfg.orbit.mu / cfg.orbit.radius);
        const double ci = std::cos(cfg.orbit.inclination), si = std::sin(cfg.orbit.inclination);
        b0.m << rho0, rho_dot0, Vec3(cfg.orbit.radius, 0, 0), Vec3(0, v * ci, v * si);
        VecX pd(12);
        pd << VecX::Constant(3, cfg.ukf.p0_pos), VecX::Constant(3, cfg.ukf.p0_vel),
            VecX::Constant(3, cfg.ukf.p0_target), VecX::Constant(3, cfg.ukf.p0_target * 1e-6);
        b0.P = pd.asDiagonal();
        b0.t = 0.0;

        const int n_filters = 3;
        for (int i = 0; i < n_filters; ++i) {
            beliefs.push_back(b0);
            histories.emplace_back(static_cast<std::size_t>(cfg.ukf.history_capacity));
            histories.back().push(b0, true);
        }
        fused = b0;
    }

    UkfDynamics dynamics() {
        return [this](const VecX& x, double, double dt) { return model.propagate(x, dt); };
    }
};

inline UkfMeasurement position_measurement() {
    return [](const VecX& x) { return VecX(x.head(3)); };
}

}  // namespace loopdetail

// Scripted approach-and-brake guidance on the fused estimate: command the
// velocity toward the target under a braking envelope, saturated to a_bound.
inline Vec3 scripted_guidance(const Vec3& rho_est, const Vec3& rho_dot_est,
                              const GuidanceConfig& g, double eps_pos, double dt_control) {
    const double dist = rho_est.norm();
    if (dist < 0.5 * eps_pos) {
        // Inside the port: null remaining velocity.
        Vec3 u = -rho_dot_est / dt_control;
        return u.cwiseMax(-g.a_bound).cwiseMin(g.a_bound);
    }
    const Vec3 dir = rho_est / dist;
    const double a_brake = 0.5 * g.a_bound;
    const double v_allow =
        std::min(g.approach_speed_cap, std::sqrt(2.0 * a_brake * std::max(dist - 0.5 * eps_pos, 0.0)));
    const Vec3 v_des = -dir * v_allow;
    Vec3 u = (v_des - rho_dot_est) / dt_control;
    return u.cwiseMax(-g.a_bound).cwiseMin(g.a_bound);
}

inline RunMetrics run_closed_loop(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    RunMetrics metrics;
    try {
        const int n_agents = cfg.sim.n_agents;
        const int n_cams = cfg.sensor.cameras_per_agent;

        std::optional<Mlp<float>> policy;
        if (cfg.guidance.mode == GuidanceConfig::Mode::TrainedPolicy) {
            std::ifstream in(cfg.guidance.policy_checkpoint);
            if (!in)
                throw ConfigError("run: cannot open policy checkpoint " +
                                  cfg.guidance.policy_checkpoint);
            policy = Mlp<float>::load(in);
        }

        std::vector<ClosedLoopPlant> plants;
        std::vector<loopdetail::AgentFilters> filters;
        std::vector<Vec3> commands(static_cast<std::size_t>(n_agents), Vec3::Zero());
        for (int a = 0; a < n_agents; ++a) {
            const Vec3 r0 = (a == 0) ? cfg.rho0 : cfg.rho0_second_agent;
            const Vec3 v0 = (a == 0) ? cfg.rho_dot0 : Vec3::Zero();
            plants.emplace_back(cfg.orbit, cfg.spacecraft, r0, v0);
            filters.emplace_back(cfg, r0, v0);
        }

        Rng master(seed);
        std::vector<Rng> cam_rngs;
        for (int a = 0; a < n_agents; ++a)
            for (int c = 0; c < n_cams; ++c) cam_rngs.push_back(master.spawn());

        // Event queue: (time, priority, sequence). Priorities keep arrivals
        // ahead of filter ticks ahead of control ticks at equal times.
        enum EventKind { SensorEmit = 0, Arrival = 1, FilterTick = 2, ControlTick = 3 };
        struct Event {
            double t;
            int kind;
            long seq;
            int agent = 0, cam = 0;
            PoseMeasurement meas;
        };
        auto cmp = [](const Event& a, const Event& b) {
            if (a.t != b.t) return a.t > b.t;
            if (a.kind != b.kind) return a.kind > b.kind;
            return a.seq > b.seq;
        };
        std::priority_queue<Event, std::vector<Event>, decltype(cmp)> queue(cmp);
        long seq = 0;

        const double Ts = 1.0 / cfg.sensor.model.rate;
        const double Tf = 1.0 / cfg.sim.filter_hz;
        const double Tc = 1.0 / cfg.sim.control_hz;
        if (cfg.sensor.enabled)
            for (int a = 0; a < n_agents; ++a)
                for (int c = 0; c < n_cams; ++c)
                    queue.push({Ts, SensorEmit, seq++, a, c, {}});
        queue.push({Tf, FilterTick, seq++, 0, 0, {}});
        queue.push({0.0, ControlTick, seq++, 0, 0, {}});

        std::vector<std::vector<std::vector<PoseMeasurement>>> pending(
            static_cast<std::size_t>(n_agents));
        for (auto& p : pending) p.resize(static_cast<std::size_t>(n_cams));

        // Simulated arm state (agent 0) when the lab layer is enabled.
        Vec6 arm_q = Vec6::Zero();
        EndEffectorPose arm_home;
        if (cfg.lab.enabled) {
            arm_q << 0.0, -0.6, 1.0, 0.0, 0.6, 0.0;
            arm_home = forward_kinematics(cfg.lab.dh, arm_q);
        }

        double t_now = 0.0;
        std::vector<Vec3> prev_rho(static_cast<std::size_t>(n_agents));
        for (int a = 0; a < n_agents; ++a) prev_rho[static_cast<std::size_t>(a)] = plants[static_cast<std::size_t>(a)].rho();

        auto advance_plants = [&](double t_target) {
            const double dt = t_target - t_now;
            if (dt <= 0.0) return;
            for (int a = 0; a < n_agents; ++a)
                plants[static_cast<std::size_t>(a)].step(
                    dt, cfg.sim.impulsive_control ? Vec3::Zero() : commands[static_cast<std::size_t>(a)],
                    Vec3::Zero());
            t_now = t_target;
        };

        double sum_et = 0.0, sum_eq = 0.0, sum_ep = 0.0;
        long n_metric = 0;

        while (!queue.empty()) {
            Event ev = queue.top();
            queue.pop();
            if (ev.t > cfg.sim.duration) break;
            advance_plants(ev.t);

            if (ev.kind == SensorEmit) {
                auto& plant = plants[static_cast<std::size_t>(ev.agent)];
                Rng& rng = cam_rngs[static_cast<std::size_t>(ev.agent * n_cams + ev.cam)];
                const Vec3 biased_rho = plant.rho() + cfg.sensor.bias_t;
                auto m = mock_pose_sensor(biased_rho, plant.rotation().q_r, cfg.sensor.model,
                                          ev.t, rng, ev.agent * n_cams + ev.cam);
                if (m) {
                    Event arrival{m->t_available, Arrival, seq++, ev.agent, ev.cam, *m};
                    queue.push(arrival);
                }
                queue.push({ev.t + Ts, SensorEmit, seq++, ev.agent, ev.cam, {}});
            } else if (ev.kind == Arrival) {
                pending[static_cast<std::size_t>(ev.agent)][static_cast<std::size_t>(ev.cam)]
                    .push_back(ev.meas);
                metrics.delivered_measurements.push_back(ev.meas);
            } else if (ev.kind == FilterTick) {
                for (int a = 0; a < n_agents; ++a) {
                    auto& F = filters[static_cast<std::size_t>(a)];
                    F.model.set_control(cfg.sim.impulsive_control
                                            ? Vec3::Zero()
                                            : commands[static_cast<std::size_t>(a)]);
                    const auto h = loopdetail::position_measurement();
                    const auto f = F.dynamics();
                    bool avail[2] = {false, false};

                    for (int fi = 0; fi < 3; ++fi) {
                        GaussianBelief& b = F.beliefs[static_cast<std::size_t>(fi)];
                        GaussianBelief predicted =
                            (ev.t > b.t) ? ukf_predict(b, f, F.config, ev.t - b.t) : b;
                        bool corrected = false;

                        auto apply = [&](const PoseMeasurement& m, bool stacked_pair,
                                         const PoseMeasurement* m2) {
                            try {
                                if (stacked_pair && m2) {
                                    StackedMeasurement sm = stack_measurements(
                                        {h, h}, {F.R_single, F.R_single});
                                    VecX z(6);
                                    z << m.translation, m2->translation;
                                    predicted = ukf_update_delayed(
                                        predicted, z, m.t_meas,
                                        F.histories[static_cast<std::size_t>(fi)], sm.h, f,
                                        sm.R, F.config);
                                } else {
                                    predicted = ukf_update_delayed(
                                        predicted, VecX(m.translation), m.t_meas,
                                        F.histories[static_cast<std::size_t>(fi)], h, f,
                                        F.R_single, F.config);
                                }
                                corrected = true;
                            } catch (const StaleMeasurement&) {
                                metrics.stale_measurements_dropped += 1;
                            }
                        };

                        if (fi < 2) {
                            auto& queue_cam =
                                pending[static_cast<std::size_t>(a)][static_cast<std::size_t>(fi)];
                            if (fi < n_cams)
                                for (const auto& m : queue_cam) apply(m, false, nullptr);
                        } else {
                            auto& q0 = pending[static_cast<std::size_t>(a)][0];
                            auto& q1 = (n_cams > 1) ? pending[static_cast<std::size_t>(a)][1] : q0;
                            if (n_cams > 1 && !q0.empty() && !q1.empty() &&
                                q0.back().t_meas == q1.back().t_meas) {
                                apply(q0.back(), true, &q1.back());
                            } else {
                                for (const auto& m : q0) apply(m, false, nullptr);
                                if (n_cams > 1)
                                    for (const auto& m : q1) apply(m, false, nullptr);
                            }
                        }
                        b = predicted;
                        F.histories[static_cast<std::size_t>(fi)].push(b, corrected);
                    }

                    avail[0] = !pending[static_cast<std::size_t>(a)][0].empty();
                    if (n_cams > 1) avail[1] = !pending[static_cast<std::size_t>(a)][1].empty();
                    for (int c = 0; c < n_cams; ++c) {
                        auto& qc = pending[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
                        if (!qc.empty()) F.attitude_estimate = qc.back().rotation;
                        qc.clear();
                    }

                    F.fused = (n_cams > 1)
                                  ? owa_fuse({F.beliefs[0], F.beliefs[1], F.beliefs[2]})
                                  : F.beliefs[0];

                    if (a == 0) {
                        EstimateRecord rec;
                        rec.t = ev.t;
                        rec.mean = F.fused.m;
                        rec.p_diag = F.fused.P.diagonal();
                        rec.cam_available[0] = avail[0];
                        rec.cam_available[1] = avail[1];
                        const Quaternion q_att =
                            F.attitude_estimate ? *F.attitude_estimate : Quaternion::identity();
                        const auto& plant = plants[0];
                        if (plant.rho().norm() > 0.0) {
                            const PoseErrors pe(pose_error_metrics(
                                F.fused.m.head(3), plant.rho(), q_att, plant.rotation().q_r));
                            rec.e_t = pe.e_t;
                            rec.e_q = pe.e_q;
                            rec.e_p = pe.e_p;
                            sum_et += pe.e_t;
                            sum_eq += pe.e_q;
                            sum_ep += pe.e_p;
                            n_metric += 1;
                        }
                        metrics.estimates.push_back(std::move(rec));
                    }

                    // Simulated arm mirrors the scaled relative trajectory.
                    if (cfg.lab.enabled && a == 0) {
                        const double dt_lab = cfg.lab.scaling.time_orbit_to_lab(Tf);
                        const Vec3 target_mm =
                            arm_home.position +
                            1000.0 * cfg.lab.scaling.position_orbit_to_lab(plants[0].rho());
                        const EndEffectorPose now = forward_kinematics(cfg.lab.dh, arm_q);
                        Vec6 twist;
                        twist << (target_mm - now.position) / dt_lab, Vec3::Zero();
                        const Mat6 J = jacobian(cfg.lab.dh, arm_q);
                        Vec6 qd;
                        try {
                            qd = joint_rates_from_twist(J, twist);
                        } catch (const SingularGeometry&) {
                            qd = Vec6::Zero();
                        }
                        qd = damp_joint_rates(qd, J, cfg.lab.damping);
                        arm_q += qd * dt_lab;
                        JointRecord jr;
                        jr.t_lab = cfg.lab.scaling.time_orbit_to_lab(ev.t);
                        jr.q = arm_q;
                        jr.q_dot = qd;
                        jr.ee_position = forward_kinematics(cfg.lab.dh, arm_q).position;
                        metrics.joints.push_back(jr);
                    }
                }
                queue.push({ev.t + Tf, FilterTick, seq++, 0, 0, {}});
            } else {  // ControlTick
                bool any_docked = false;
                for (int a = 0; a < n_agents; ++a) {
                    auto& F = filters[static_cast<std::size_t>(a)];
                    auto& plant = plants[static_cast<std::size_t>(a)];
                    const Vec3 rho_est = F.fused.m.head(3);
                    const Vec3 rho_dot_est = F.fused.m.segment(3, 3);

                    Vec3 u_ref = Vec3::Zero();
                    switch (cfg.guidance.mode) {
                        case GuidanceConfig::Mode::Zero:
                            break;
                        case GuidanceConfig::Mode::Scripted:
                            u_ref = scripted_guidance(rho_est, rho_dot_est, cfg.guidance,
                                                      cfg.sim.eps_pos, Tc);
                            break;
                        case GuidanceConfig::Mode::TrainedPolicy: {
                            VecX s(policy->input_dim());
                            s.head(3) = -rho_est;
                            if (s.size() >= 6) s.segment(3, 3) = -rho_dot_est;
                            Mlp<float>::Mat x = s.cast<float>();
                            u_ref = Vec3(0, 0, static_cast<double>(policy->forward(x)(0, 0)));
                            break;
                        }
                    }

                    ControlRecord rec;
                    rec.t = ev.t;
                    rec.u_ref = u_ref;
                    rec.rho_true = plant.rho();
                    rec.rho_dot_true = plant.rho_dot();
                    rec.rho_est = rho_est;
                    rec.rho_dot_est = rho_dot_est;

                    Vec3 u_cmd = u_ref;
                    if (cfg.safety_enabled) {
                        std::vector<AgentKinematics> est_agents;
                        est_agents.push_back({rho_est, rho_dot_est, {}, {}});
                        for (int other = 0; other < n_agents; ++other) {
                            if (other == a) continue;
                            const auto& OF = filters[static_cast<std::size_t>(other)];
                            est_agents.push_back(
                                {OF.fused.m.head(3), OF.fused.m.segment(3, 3), {}, {}});
                        }
                        ControlCommand in;
                        in.u_force = u_ref;
                        try {
                            const ControlCommand filtered =
                                filter_control(in, est_agents, cfg.safety, Mat6::Identity());
                            u_cmd = filtered.u_force;
                        } catch (const QpInfeasible&) {
                            const double cap = cfg.safety.F_max / cfg.safety.mass;
                            u_cmd = u_ref.cwiseMax(-cap).cwiseMin(cap);
                            rec.qp_saturated = true;
                        } catch (const ConstraintViolated&) {
                            u_cmd = Vec3::Zero();
                            rec.qp_saturated = true;
                        }
                    }
                    rec.u_cmd = u_cmd;
                    commands[static_cast<std::size_t>(a)] = u_cmd;
                    if (cfg.sim.impulsive_control) plant.apply_impulse(u_cmd * Tc);

                    // True barrier values for the log.
                    try {
                        std::vector<AgentKinematics> true_agents;
                        true_agents.push_back({plant.rho(), plant.rho_dot(), {}, {}});
                        for (int other = 0; other < n_agents; ++other) {
                            if (other == a) continue;
                            true_agents.push_back({plants[static_cast<std::size_t>(other)].rho(),
                                                   plants[static_cast<std::size_t>(other)].rho_dot(),
                                                   {},
                                                   {}});
                        }
                        const BarrierValues h = eval_cbfs(true_agents, cfg.safety);
                        rec.h2 = h.h2[0];
                        rec.h3 = h.h3[0];
                        rec.h4 = h.h4[0];
                        rec.h5 = h.h5[0];
                        if (!h.h1.empty()) rec.h1 = h.h1[0];
                        double mn = std::min(std::min(rec.h2, rec.h3), rec.h4);
                        if (cfg.safety.sun_constraint_enabled) mn = std::min(mn, rec.h5);
                        if (!h.h1.empty()) mn = std::min(mn, rec.h1);
                        metrics.min_barrier = std::min(metrics.min_barrier, mn);
                    } catch (const Error&) {
                        metrics.min_barrier = -std::numeric_limits<double>::infinity();
                    }

                    if (a == 0) {
                        VecX s_now(3), s_prev(3);
                        s_now = -plant.rho();
                        s_prev = -prev_rho[0];
                        DockingEnvConfig rc;
                        rc.d_i = std::max(cfg.rho0.norm(), 2.0 * cfg.sim.eps_pos);
                        rc.eps_pos = cfg.sim.eps_pos;
                        rc.eps_vel = cfg.sim.eps_vel;
                        rc.velocity_constrained = cfg.sim.velocity_constrained;
                        rec.reward = reward(s_now, s_prev, cfg.reward, rc,
                                            plant.rho_dot().norm());
                        metrics.total_reward += rec.reward;
                        prev_rho[0] = plant.rho();
                        metrics.controls.push_back(rec);
                    }

                    const bool pos_ok = plant.rho().norm() < cfg.sim.eps_pos;
                    const bool vel_ok =
                        !cfg.sim.velocity_constrained || plant.rho_dot().norm() < cfg.sim.eps_vel;
                    if (a == 0 && pos_ok && vel_ok) any_docked = true;
                }
                if (any_docked) {
                    metrics.docked = true;
                    metrics.dock_time = ev.t;
                    break;
                }
                queue.push({ev.t + Tc, ControlTick, seq++, 0, 0, {}});
            }
        }

        if (n_metric > 0) {
            metrics.E_t = sum_et / n_metric;
            metrics.E_q = sum_eq / n_metric;
            metrics.E_p = sum_ep / n_metric;
        }
    } catch (const Error& e) {
        metrics.failure = e.what();
    }
    return metrics;
}

}  // namespace proxops
