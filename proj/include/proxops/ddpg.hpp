// DDPG guidance for the single-agent docking problem: environment with
// impulsive 1-D thrust along +-h_hat, Ornstein-Uhlenbeck exploration,
// epsilon-greedy schedule, replay buffer, and the actor/critic training loop
// with soft target updates.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "proxops/cw.hpp"
#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"
#include "proxops/mlp.hpp"
#include "proxops/orbit.hpp"
#include "proxops/relative_dynamics.hpp"
#include "proxops/rng.hpp"

namespace proxops {

struct DockingEnvConfig {
    double d_i = 10.0;        // initial separation along h_hat, m
    double eps_pos = 0.1;     // docking position tolerance, m
    double eps_vel = 0.05;    // max contact speed, m/s
    bool velocity_constrained = false;
    enum class StateMode { PositionOnly, PositionVelocity };
    StateMode state_mode = StateMode::PositionOnly;
    double a_bound = 0.1;     // m/s^2
    double dt = 1.0;          // s
    int max_steps = 500;      // T
    enum class DynamicsMode { Cw, Nonlinear };
    DynamicsMode dynamics_mode = DynamicsMode::Cw;
    double orbit_radius = kEarthRadius + 500e3;  // m
    double mu = kMuEarth;

    int state_dim() const { return state_mode == StateMode::PositionOnly ? 3 : 6; }
    double mean_motion() const { return circular_mean_motion(orbit_radius, mu); }

    void validate() const {
        if (!(d_i > eps_pos) || !(eps_pos > 0.0))
            throw ConfigError("DockingEnvConfig: need d_i > eps_pos > 0");
        if (a_bound <= 0.0) throw ConfigError("DockingEnvConfig: a_bound must be positive");
        if (max_steps < 1) throw ConfigError("DockingEnvConfig: max_steps >= 1");
        if (dt <= 0.0) throw ConfigError("DockingEnvConfig: dt must be positive");
    }
};

struct RewardParams {
    double c1 = 1.0;        // dense shaping scale, 1/m
    double c2 = 1.0;        // velocity reward scale
    double R_docked = 10.0; // sparse docking reward
    double vel_reward_radius_factor = 3.0;  // gate: |pos| < factor * eps_pos
    // Rejected sparse-penalty variant, kept behind this flag only to
    // reproduce the qualitative comparison.
    bool sparse_penalty_mode = false;
    double c3 = 20.0;
};

struct Transition {
    VecX s;
    double a = 0.0;
    double r = 0.0;
    VecX s_next;
    double d = 0.0;  // 1 only when the docking criteria were met
};

// The velocity-reward ratio eps_vel/|v| is capped at 10 so the reward stays
// bounded as |v| -> 0.
inline constexpr double kVelRewardCap = 10.0;

inline double reward(const VecX& s_t, const VecX& s_prev, const RewardParams& rp,
                     const DockingEnvConfig& cfg,
                     std::optional<double> v_rel_norm = {}) {
    const double pos_now = s_t.head(3).norm();
    const double pos_prev = s_prev.head(3).norm();
    double r = -rp.c1 * (pos_now - pos_prev);

    std::optional<double> v = v_rel_norm;
    if (!v && s_t.size() >= 6) v = s_t.segment(3, 3).norm();

    bool docked = pos_now < cfg.eps_pos;
    if (cfg.velocity_constrained) {
        if (!v) throw InvalidArgument("reward: velocity needed but unavailable");
        docked = docked && *v < cfg.eps_vel;
    }

    if (!rp.sparse_penalty_mode) {
        if (pos_now < rp.vel_reward_radius_factor * cfg.eps_pos) {
            if (!v) throw InvalidArgument("reward: velocity needed but unavailable");
            const double ratio = (*v > 0.0) ? std::min(cfg.eps_vel / *v, kVelRewardCap)
                                            : kVelRewardCap;
            r += rp.c2 * ratio;
        }
    } else {
        if (v && pos_now < cfg.eps_pos && *v < cfg.eps_vel) r -= rp.c3;
    }

    if (docked) r += rp.R_docked;
    return r;
}

struct EnvStep {
    VecX obs;
    double reward = 0.0;
    bool done = false;
    bool docked = false;
};

// Docking environment. Observed state is s = [x_tgt - x_chaser,
// v_tgt - v_chaser] = [-rho, -rho_dot] truncated per state_mode; thrust is a
// scalar acceleration along +-h_hat applied as an impulse each step.
class DockingEnv {
public:
    DockingEnv(DockingEnvConfig cfg, RewardParams rp) : cfg_(cfg), rp_(rp) {
        cfg_.validate();
        n_ = cfg_.mean_motion();
        stm_ = cw_stm(n_, cfg_.dt);
    }

    VecX reset() {
        rho_ = Vec3(0.0, 0.0, cfg_.d_i);
        rho_dot_ = Vec3::Zero();
        steps_ = 0;
        return observe();
    }

    EnvStep step(double action) {
        if (!std::isfinite(action)) throw InvalidArgument("env_step: non-finite action");
        action = std::clamp(action, -cfg_.a_bound, cfg_.a_bound);
        const VecX s_prev = observe();

        rho_dot_.z() += action * cfg_.dt;  // impulsive burn along h_hat
        if (cfg_.dynamics_mode == DockingEnvConfig::DynamicsMode::Cw) {
            Vec6 x;
            x << rho_, rho_dot_;
            x = stm_ * x;
            rho_ = x.head<3>();
            rho_dot_ = x.tail<3>();
        } else {
            nonlinear_coast();
        }
        steps_ += 1;

        EnvStep out;
        out.obs = observe();
        out.docked = docked();
        out.reward = proxops::reward(out.obs, s_prev, rp_, cfg_, rho_dot_.norm());
        out.done = out.docked || steps_ >= cfg_.max_steps;
        return out;
    }

    const Vec3& rho() const { return rho_; }
    const Vec3& rho_dot() const { return rho_dot_; }
    int steps() const { return steps_; }
    const DockingEnvConfig& config() const { return cfg_; }

    bool docked() const {
        const bool pos_ok = rho_.norm() < cfg_.eps_pos;
        if (!cfg_.velocity_constrained) return pos_ok;
        return pos_ok && rho_dot_.norm() < cfg_.eps_vel;
    }

private:
    VecX observe() const {
        VecX s(cfg_.state_dim());
        s.head(3) = -rho_;
        if (cfg_.state_dim() == 6) s.tail(3) = -rho_dot_;
        return s;
    }

    // Circular unperturbed target: LVLH rate is the constant [0,0,n], so the
    // exact nonlinear relative dynamics reduce to a 6-state ODE.
    void nonlinear_coast() {
        const int substeps = 5;
        const double h = cfg_.dt / substeps;
        const TargetAbsoluteState tgt{Vec3(cfg_.orbit_radius, 0, 0), Vec3::Zero()};
        const Vec3 omega(0.0, 0.0, n_);
        auto accel = [&](const Vec3& r, const Vec3& v) {
            RelativeTranslationalState rel{r, v};
            return relative_translational_accel(rel, tgt, omega, Vec3::Zero(), {}, cfg_.mu);
        };
        for (int i = 0; i < substeps; ++i) {
            const Vec3 k1v = accel(rho_, rho_dot_), k1r = rho_dot_;
            const Vec3 k2v = accel(rho_ + 0.5 * h * k1r, rho_dot_ + 0.5 * h * k1v);
            const Vec3 k2r = rho_dot_ + 0.5 * h * k1v;
            const Vec3 k3v = accel(rho_ + 0.5 * h * k2r, rho_dot_ + 0.5 * h * k2v);
            const Vec3 k3r = rho_dot_ + 0.5 * h * k2v;
            const Vec3 k4v = accel(rho_ + h * k3r, rho_dot_ + h * k3v);
            const Vec3 k4r = rho_dot_ + h * k3v;
            rho_ += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
            rho_dot_ += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
    }

    DockingEnvConfig cfg_;
    RewardParams rp_;
    double n_ = 0.0;
    Mat6 stm_;
    Vec3 rho_ = Vec3::Zero(), rho_dot_ = Vec3::Zero();
    int steps_ = 0;
};

struct OuNoiseState {
    double current_noise = 0.0;
    double theta = 0.15;
    double mu = 0.0;
    double dt = 0.01;
    double gamma = 1.0;        // decaying scale
    double decay_k = 0.995;
    double gamma_floor = 0.05;
};

inline double ou_step(OuNoiseState& n, double a_t, Rng& rng) {
    const double dA = n.theta * (n.mu - a_t) * n.dt + n.gamma * std::sqrt(n.dt) * rng.normal();
    n.gamma = std::max(n.decay_k * n.gamma, n.gamma_floor);
    n.current_noise = dA;
    return dA;
}

struct DdpgHyperparams {
    double alpha0 = 1e-3;        // actor learning rate
    double beta0 = 2e-3;         // critic learning rate
    double tau = 0.01;           // soft update rate
    double gamma = 0.99;         // discount
    int episodes = 1500;         // N
    double eps0 = 0.4;
    double eps_min = 0.0;
    double lambda_decay = 0.08;  // epsilon decay vs within-episode step
    int batch_size = 64;         // M
    int buffer_capacity = 200000;
    int hidden_width = 64;
    int hidden_depth = 2;
    double ou_gamma0 = 1.0;      // initial OU noise scale
    // Algorithm-as-printed actor loss carries a (1-d) factor; flag kept so
    // the standard loss can be compared.
    bool actor_loss_done_mask = true;

    void validate() const {
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("DdpgHyperparams: tau in (0,1]");
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("DdpgHyperparams: gamma in (0,1)");
        if (eps_min > eps0) throw ConfigError("DdpgHyperparams: eps_min <= eps0 required");
        if (batch_size > buffer_capacity)
            throw ConfigError("DdpgHyperparams: batch does not fit buffer");
        if (hidden_depth < 1 || hidden_width < 1)
            throw ConfigError("DdpgHyperparams: bad architecture");
    }
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return data_.size(); }
    const Transition& at(std::size_t i) const { return data_[i]; }

    std::vector<const Transition*> sample(std::size_t m, Rng& rng) const {
        std::vector<const Transition*> batch(m);
        for (std::size_t i = 0; i < m; ++i) batch[i] = &data_[rng.index(data_.size())];
        return batch;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> data_;
};

// Critic with the action concatenated at the first hidden layer:
// trunk(state) -> relu -> head([h1; a]) -> q.
template <class S>
struct Critic {
    Mlp<S> trunk;  // state -> width (linear output; relu applied here)
    Mlp<S> head;   // [width + act] -> hidden^(depth-1) -> 1

    using Mat = typename Mlp<S>::Mat;

    struct Cache {
        typename Mlp<S>::Cache trunk_cache, head_cache;
        Mat h1_pre, joined;
    };

    static Critic make(int state_dim, int act_dim, int width, int depth, Rng& rng) {
        Critic c;
        c.trunk = Mlp<S>({state_dim, width}, Mlp<S>::Output::Linear, S(1), rng);
        std::vector<int> head_widths{width + act_dim};
        for (int k = 1; k < depth; ++k) head_widths.push_back(width);
        head_widths.push_back(1);
        c.head = Mlp<S>(head_widths, Mlp<S>::Output::Linear, S(1), rng);
        return c;
    }

    Mat forward(const Mat& states, const Mat& actions, Cache* cache = nullptr) const {
        Cache local;
        Cache* c = cache ? cache : &local;
        c->h1_pre = trunk.forward(states, &c->trunk_cache);
        Mat h1 = c->h1_pre.cwiseMax(S(0));
        c->joined.resize(h1.rows() + actions.rows(), h1.cols());
        c->joined.topRows(h1.rows()) = h1;
        c->joined.bottomRows(actions.rows()) = actions;
        return head.forward(c->joined, &c->head_cache);
    }

    // Returns dL/d(actions); fills parameter grads.
    Mat backward(const Cache& cache, const Mat& dq, Critic& grads) const {
        Mat djoined = head.backward(cache.head_cache, dq, grads.head);
        const long w = cache.h1_pre.rows();
        Mat dh1 = djoined.topRows(w);
        Mat dact = djoined.bottomRows(djoined.rows() - w);
        Mat dh1_pre =
            (dh1.array() * (cache.h1_pre.array() > S(0)).template cast<S>()).matrix();
        trunk.backward(cache.trunk_cache, dh1_pre, grads.trunk);
        return dact;
    }

    void adam_step(const Critic& grads, typename Mlp<S>::AdamState& st_trunk,
                   typename Mlp<S>::AdamState& st_head, S lr) {
        trunk.adam_step(grads.trunk, st_trunk, lr);
        head.adam_step(grads.head, st_head, lr);
    }

    static void soft_update(Critic& target, const Critic& online, S tau) {
        Mlp<S>::soft_update(target.trunk, online.trunk, tau);
        Mlp<S>::soft_update(target.head, online.head, tau);
    }
};

template <class S>
struct DdpgNets {
    Mlp<S> actor, actor_target;
    Critic<S> critic, critic_target;
    typename Mlp<S>::AdamState actor_adam, critic_trunk_adam, critic_head_adam;

    static DdpgNets make(int state_dim, double a_bound, const DdpgHyperparams& hp, Rng& rng) {
        DdpgNets n;
        std::vector<int> actor_widths{state_dim};
        for (int k = 0; k < hp.hidden_depth; ++k) actor_widths.push_back(hp.hidden_width);
        actor_widths.push_back(1);
        n.actor = Mlp<S>(actor_widths, Mlp<S>::Output::TanhScaled, static_cast<S>(a_bound), rng);
        n.actor_target = n.actor;
        n.critic = Critic<S>::make(state_dim, 1, hp.hidden_width, hp.hidden_depth, rng);
        n.critic_target = n.critic;
        return n;
    }
};

// Epsilon-greedy explore/exploit with OU noise added to either branch; the
// schedule decays with the within-episode step.
template <class S>
double select_action(const Mlp<S>& actor, const VecX& s, int step,
                     const DdpgHyperparams& hp, double a_bound, OuNoiseState& noise,
                     Rng& rng) {
    const double eps =
        hp.eps_min + (hp.eps0 - hp.eps_min) * std::exp(-hp.lambda_decay * step);
    double a;
    if (rng.uniform01() < eps) {
        a = rng.uniform(-a_bound, a_bound);
    } else {
        typename Mlp<S>::Mat x = s.cast<S>();
        a = static_cast<double>(actor.forward(x)(0, 0));
    }
    a += ou_step(noise, a, rng);
    return std::clamp(a, -a_bound, a_bound);
}

// y_t = r_t + gamma (1 - d_t) Q'(s', mu'(s')).
template <class S>
VecX critic_targets(const std::vector<const Transition*>& batch, double gamma,
                    const Mlp<S>& actor_target, const Critic<S>& critic_target) {
    const int m = static_cast<int>(batch.size());
    if (m < 1) throw InvalidArgument("critic_targets: empty batch");
    const int sd = static_cast<int>(batch[0]->s_next.size());
    typename Mlp<S>::Mat S_next(sd, m);
    for (int i = 0; i < m; ++i) S_next.col(i) = batch[i]->s_next.cast<S>();
    typename Mlp<S>::Mat a_next = actor_target.forward(S_next);
    typename Mlp<S>::Mat q_next = critic_target.forward(S_next, a_next);
    VecX y(m);
    for (int i = 0; i < m; ++i)
        y(i) = batch[i]->r +
               gamma * (1.0 - batch[i]->d) * static_cast<double>(q_next(0, i));
    return y;
}

struct TrainStepLosses {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
};

template <class S>
TrainStepLosses train_step(DdpgNets<S>& nets, const std::vector<const Transition*>& batch,
                           const DdpgHyperparams& hp) {
    const int m = static_cast<int>(batch.size());
    const int sd = static_cast<int>(batch[0]->s.size());
    using Mat = typename Mlp<S>::Mat;
    Mat S_mat(sd, m), A_mat(1, m), D_mat(1, m);
    for (int i = 0; i < m; ++i) {
        S_mat.col(i) = batch[i]->s.cast<S>();
        A_mat(0, i) = static_cast<S>(batch[i]->a);
        D_mat(0, i) = static_cast<S>(batch[i]->d);
    }
    const VecX y = critic_targets(batch, hp.gamma, nets.actor_target, nets.critic_target);

    TrainStepLosses losses;

    // Critic: L_c = mean (y - Q)^2.
    typename Critic<S>::Cache ccache;
    Mat q = nets.critic.forward(S_mat, A_mat, &ccache);
    Mat dq(1, m);
    for (int i = 0; i < m; ++i) {
        const double e = static_cast<double>(q(0, i)) - y(i);
        losses.critic_loss += e * e;
        dq(0, i) = static_cast<S>(2.0 * e / m);
    }
    losses.critic_loss /= m;
    Critic<S> cgrads;
    nets.critic.backward(ccache, dq, cgrads);
    nets.critic.adam_step(cgrads, nets.critic_trunk_adam, nets.critic_head_adam,
                          static_cast<S>(hp.beta0));

    // Actor: L_a = -mean Q(s, mu(s)) * (1 - d).
    typename Mlp<S>::Cache acache;
    Mat a_pi = nets.actor.forward(S_mat, &acache);
    typename Critic<S>::Cache ccache2;
    Mat q_pi = nets.critic.forward(S_mat, a_pi, &ccache2);
    Mat dq_pi(1, m);
    for (int i = 0; i < m; ++i) {
        const double mask = hp.actor_loss_done_mask ? (1.0 - batch[i]->d) : 1.0;
        losses.actor_loss += -static_cast<double>(q_pi(0, i)) * mask;
        dq_pi(0, i) = static_cast<S>(-mask / m);
    }
    losses.actor_loss /= m;
    Critic<S> cgrads_unused;
    Mat dact = nets.critic.backward(ccache2, dq_pi, cgrads_unused);
    Mlp<S> agrads;
    nets.actor.backward(acache, dact, agrads);
    nets.actor.adam_step(agrads, nets.actor_adam, static_cast<S>(hp.alpha0));

    // Soft target updates.
    Mlp<S>::soft_update(nets.actor_target, nets.actor, static_cast<S>(hp.tau));
    Critic<S>::soft_update(nets.critic_target, nets.critic, static_cast<S>(hp.tau));
    return losses;
}

struct EpisodeMetrics {
    int episode = 0;
    double total_reward = 0.0;
    double final_pos_norm = 0.0;
    double final_vel_norm = 0.0;
    bool docked = false;
};

struct TrainResult {
    Mlp<float> actor;
    std::vector<EpisodeMetrics> episodes;
    std::size_t buffer_size = 0;
};

inline TrainResult train_ddpg(const DockingEnvConfig& cfg, const DdpgHyperparams& hp,
                              const RewardParams& rp, std::uint64_t seed) {
    cfg.validate();
    hp.validate();
    Rng rng(seed);
    DockingEnv env(cfg, rp);
    DdpgNets<float> nets = DdpgNets<float>::make(cfg.state_dim(), cfg.a_bound, hp, rng);
    ReplayBuffer buffer(static_cast<std::size_t>(hp.buffer_capacity));

    TrainResult result;
    result.episodes.reserve(static_cast<std::size_t>(hp.episodes));

    for (int ep = 1; ep <= hp.episodes; ++ep) {
        VecX s = env.reset();
        OuNoiseState noise;
        noise.gamma = hp.ou_gamma0 * cfg.a_bound;
        EpisodeMetrics m;
        m.episode = ep;
        bool done = false;
        int step = 1;
        while (!done) {
            const double a = select_action(nets.actor, s, step, hp, cfg.a_bound, noise, rng);
            EnvStep es = env.step(a);
            m.total_reward += es.reward;
            Transition t;
            t.s = s;
            t.a = a;
            t.r = es.reward;
            t.s_next = es.obs;
            t.d = es.docked ? 1.0 : 0.0;
            buffer.push(std::move(t));
            if (buffer.size() >= static_cast<std::size_t>(hp.batch_size)) {
                auto batch = buffer.sample(static_cast<std::size_t>(hp.batch_size), rng);
                train_step(nets, batch, hp);
            }
            s = es.obs;
            done = es.done;
            step += 1;
        }
        m.docked = env.docked();
        m.final_pos_norm = env.rho().norm();
        m.final_vel_norm = env.rho_dot().norm();
        result.episodes.push_back(m);
    }
    result.actor = nets.actor;
    result.buffer_size = buffer.size();
    return result;
}

struct EvalResult {
    int docked_count = 0;
    std::vector<EpisodeMetrics> trials;
    std::vector<std::vector<Vec6>> trajectories;  // [rho; rho_dot] per step
};

// Greedy rollouts: no epsilon exploration, no OU noise. Trial 0 starts at
// exactly d_i; later trials perturb the separation by up to +-20% so a batch
// of attempts probes robustness rather than replaying one trajectory.
inline EvalResult evaluate_policy(const Mlp<float>& actor, const DockingEnvConfig& cfg,
                                  const RewardParams& rp, int n_trials,
                                  std::uint64_t seed) {
    if (n_trials < 1) throw InvalidArgument("evaluate_policy: n_trials >= 1");
    Rng rng(seed);
    EvalResult out;
    for (int trial = 0; trial < n_trials; ++trial) {
        DockingEnvConfig trial_cfg = cfg;
        if (trial > 0) trial_cfg.d_i = cfg.d_i * rng.uniform(0.8, 1.2);
        DockingEnv env(trial_cfg, rp);
        VecX s = env.reset();
        std::vector<Vec6> traj;
        EpisodeMetrics m;
        m.episode = trial;
        bool done = false;
        while (!done) {
            Vec6 x;
            x << env.rho(), env.rho_dot();
            traj.push_back(x);
            Mlp<float>::Mat xin = s.cast<float>();
            const double a = static_cast<double>(actor.forward(xin)(0, 0));
            EnvStep es = env.step(a);
            m.total_reward += es.reward;
            s = es.obs;
            done = es.done;
        }
        Vec6 x;
        x << env.rho(), env.rho_dot();
        traj.push_back(x);
        m.docked = env.docked();
        m.final_pos_norm = env.rho().norm();
        m.final_vel_norm = env.rho_dot().norm();
        if (m.docked) out.docked_count += 1;
        out.trials.push_back(m);
        out.trajectories.push_back(std::move(traj));
    }
    return out;
}

}  // namespace proxops
