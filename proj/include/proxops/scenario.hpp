// Scenario configuration: one declarative JSON document with a versioned
// schema, strict key checking, and cross-field consistency validation.
// Every CLI subcommand reads the sections it needs from the same file.
#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "proxops/bayesopt.hpp"
#include "proxops/ddpg.hpp"
#include "proxops/errors.hpp"
#include "proxops/linalg.hpp"
#include "proxops/robot.hpp"
#include "proxops/safety.hpp"
#include "proxops/sensor.hpp"
#include "proxops/ukf.hpp"

namespace proxops {

inline constexpr int kSchemaVersion = 1;

namespace cfgdetail {

using nlohmann::json;

inline void require_keys(const json& j, const std::string& section,
                         const std::set<std::string>& known) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("config: unknown key '" + section + "." + it.key() + "'");
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + key + "'");
    }
}

inline Vec3 get_vec3(const json& j, const std::string& key, const Vec3& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3)
        throw ConfigError("config: '" + key + "' must be a 3-element array");
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

}  // namespace cfgdetail

struct OrbitConfig {
    double mu = kMuEarth;
    double radius = kEarthRadius + 500e3;  // m
    double inclination = 0.9;              // rad

    double mean_motion() const { return circular_mean_motion(radius, mu); }
};

struct GuidanceConfig {
    enum class Mode { TrainedPolicy, Scripted, Zero };
    Mode mode = Mode::Scripted;
    std::string policy_checkpoint;
    double a_bound = 0.1;       // m/s^2
    double approach_speed_cap = 0.5;  // scripted-law speed cap, m/s
};

struct SensorSetupConfig {
    PoseSensorModel model;
    Vec3 bias_t = Vec3::Zero();  // deliberate translation bias (wiring tests)
    bool enabled = true;
    int cameras_per_agent = 2;
};

struct UkfSetupConfig {
    double alpha = 0.1;
    double beta = 2.0;
    double kappa = 0.0;
    double q_pos = 1e-6;   // process noise diag, position block
    double q_vel = 1e-8;   // velocity block
    double q_target = 1e-4;  // target absolute blocks
    double r_pos = 1e-4;   // measurement noise diag (m^2)
    int history_capacity = 64;
    double p0_pos = 1e-2;
    double p0_vel = 1e-4;
    double p0_target = 1.0;
};

struct LabConfig {
    bool enabled = false;
    LabScaling scaling{100.0, 50.0};
    DampingLimits damping;
    DhTable dh = cr20a_dh_table();
};

struct SimConfig {
    double dt_plant = 0.1;     // s
    double control_hz = 1.0;
    double filter_hz = 10.0;
    double duration = 300.0;   // s
    double eps_pos = 0.1;      // m
    double eps_vel = 0.05;     // m/s
    bool velocity_constrained = false;
    bool impulsive_control = false;  // false: constant accel over the interval
    int n_agents = 1;
};

struct ScenarioConfig {
    int schema_version = kSchemaVersion;
    OrbitConfig orbit;
    SpacecraftInertia spacecraft;
    Vec3 rho0 = Vec3(0.0, 0.0, 3.0);
    Vec3 rho_dot0 = Vec3::Zero();
    Vec3 rho0_second_agent = Vec3(0.0, 0.0, -3.0);
    bool safety_enabled = true;
    // Desk-scale defaults: collision spheres small enough that the docking
    // tolerance lies outside them.
    SafetyParams safety{.r_agent_i = 0.02,
                        .r_agent_j = 0.02,
                        .r_target = 0.03,
                        .n = 1.106e-3};
    GuidanceConfig guidance;
    SensorSetupConfig sensor;
    UkfSetupConfig ukf;
    LabConfig lab;
    SimConfig sim;
    DockingEnvConfig ddpg_env;
    DdpgHyperparams ddpg;
    RewardParams reward;
    SearchSpace tuner_space;
    int tuner_n_init = 5;
    int tuner_n_iter = 15;
    std::string tuner_objective = "final_docks";  // or "validation"
    int tuner_window = 50;
    std::uint64_t master_seed = 0;

    void validate() const {
        safety.validate();
        sensor.model.validate();
        ddpg_env.validate();
        ddpg.validate();
        lab.scaling.validate();
        lab.damping.validate();
        if (sim.dt_plant <= 0.0 || sim.control_hz <= 0.0 || sim.filter_hz <= 0.0)
            throw ConfigError("sim: rates and dt_plant must be positive");
        if (sim.duration <= 0.0) throw ConfigError("sim: duration must be positive");
        if (sim.n_agents < 1 || sim.n_agents > 2)
            throw ConfigError("sim: n_agents must be 1 or 2");
        // Cross-field consistency.
        if (safety_enabled && ddpg_env.d_i >= safety.r_m)
            throw ConfigError("config: d_i must be below the model-validity radius r_m");
        if (safety_enabled && rho0.norm() >= safety.r_m)
            throw ConfigError("config: initial separation exceeds r_m");
        if (sim.velocity_constrained &&
            !(sim.eps_vel < safety.nu_1 * ddpg_env.d_i + safety.nu_0))
            throw ConfigError("config: eps_vel incompatible with velocity constraint envelope");
        if (safety_enabled && guidance.mode != GuidanceConfig::Mode::Zero &&
            sim.eps_pos <= safety.r_agent_i + safety.r_target)
            throw ConfigError(
                "config: docking tolerance eps_pos lies inside the collision sphere "
                "(r_agent_i + r_target); docking would be unreachable");
    }
};

namespace cfgdetail {

inline SearchDimension parse_dim(const json& j) {
    require_keys(j, "tuner.space[]", {"name", "lower", "upper", "scale", "kind"});
    SearchDimension d;
    d.name = j.at("name").get<std::string>();
    d.lower = j.at("lower").get<double>();
    d.upper = j.at("upper").get<double>();
    const std::string scale = get_or<std::string>(j, "scale", "linear");
    if (scale == "log") d.scale = SearchDimension::Scale::Log;
    else if (scale == "linear") d.scale = SearchDimension::Scale::Linear;
    else throw ConfigError("tuner.space: scale must be linear|log");
    const std::string kind = get_or<std::string>(j, "kind", "continuous");
    if (kind == "integer") d.kind = SearchDimension::Kind::Integer;
    else if (kind == "continuous") d.kind = SearchDimension::Kind::Continuous;
    else throw ConfigError("tuner.space: kind must be continuous|integer");
    return d;
}

}  // namespace cfgdetail

inline ScenarioConfig load_scenario(const nlohmann::json& j) {
    using namespace cfgdetail;
    require_keys(j, "<root>",
                 {"schema_version", "orbit", "spacecraft", "initial", "safety", "guidance",
                  "sensor", "ukf", "lab", "sim", "ddpg", "reward", "tuner", "seeds"});
    ScenarioConfig c;
    c.schema_version = get_or<int>(j, "schema_version", -1);
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("config: schema_version must be " + std::to_string(kSchemaVersion));

    if (j.contains("orbit")) {
        const auto& o = j.at("orbit");
        require_keys(o, "orbit", {"mu", "radius_m", "inclination_rad"});
        c.orbit.mu = get_or<double>(o, "mu", c.orbit.mu);
        c.orbit.radius = get_or<double>(o, "radius_m", c.orbit.radius);
        c.orbit.inclination = get_or<double>(o, "inclination_rad", c.orbit.inclination);
    }
    if (j.contains("spacecraft")) {
        const auto& s = j.at("spacecraft");
        require_keys(s, "spacecraft", {"mass_s_kg", "mass_t_kg", "J_s_diag", "J_t_diag"});
        c.spacecraft.m_s = get_or<double>(s, "mass_s_kg", c.spacecraft.m_s);
        c.spacecraft.m_t = get_or<double>(s, "mass_t_kg", c.spacecraft.m_t);
        c.spacecraft.J_s = get_vec3(s, "J_s_diag", Vec3::Ones()).asDiagonal();
        c.spacecraft.J_t = get_vec3(s, "J_t_diag", Vec3::Ones()).asDiagonal();
    }
    if (j.contains("initial")) {
        const auto& s = j.at("initial");
        require_keys(s, "initial", {"rho_m", "rho_dot_mps", "rho_second_agent_m"});
        c.rho0 = get_vec3(s, "rho_m", c.rho0);
        c.rho_dot0 = get_vec3(s, "rho_dot_mps", c.rho_dot0);
        c.rho0_second_agent = get_vec3(s, "rho_second_agent_m", c.rho0_second_agent);
    }
    c.safety.n = c.orbit.mean_motion();  // mean motion follows the orbit unless overridden
    if (j.contains("safety")) {
        const auto& s = j.at("safety");
        require_keys(s, "safety",
                     {"enabled", "r_agent_i", "r_agent_j", "r_target", "r_m", "nu_0", "nu_1",
                      "theta_s", "e_sun_hat", "F_max", "T_max", "mass", "n", "v_m",
                      "alpha_cbf", "sun_constraint_enabled"});
        c.safety_enabled = get_or<bool>(s, "enabled", true);
        c.safety.r_agent_i = get_or<double>(s, "r_agent_i", c.safety.r_agent_i);
        c.safety.r_agent_j = get_or<double>(s, "r_agent_j", c.safety.r_agent_j);
        c.safety.r_target = get_or<double>(s, "r_target", c.safety.r_target);
        c.safety.r_m = get_or<double>(s, "r_m", c.safety.r_m);
        c.safety.nu_0 = get_or<double>(s, "nu_0", c.safety.nu_0);
        c.safety.nu_1 = get_or<double>(s, "nu_1", c.safety.nu_1);
        c.safety.theta_s = get_or<double>(s, "theta_s", c.safety.theta_s);
        c.safety.e_sun_hat = get_vec3(s, "e_sun_hat", c.safety.e_sun_hat).normalized();
        c.safety.F_max = get_or<double>(s, "F_max", c.safety.F_max);
        c.safety.T_max = get_or<double>(s, "T_max", c.safety.T_max);
        c.safety.mass = get_or<double>(s, "mass", c.safety.mass);
        c.safety.n = get_or<double>(s, "n", c.safety.n);
        c.safety.v_m = get_or<double>(s, "v_m", c.safety.v_m);
        c.safety.alpha_cbf = get_or<double>(s, "alpha_cbf", c.safety.alpha_cbf);
        c.safety.sun_constraint_enabled =
            get_or<bool>(s, "sun_constraint_enabled", c.safety.sun_constraint_enabled);
    }
    if (j.contains("guidance")) {
        const auto& g = j.at("guidance");
        require_keys(g, "guidance",
                     {"mode", "policy_checkpoint", "a_bound", "approach_speed_cap"});
        const std::string mode = get_or<std::string>(g, "mode", "scripted");
        if (mode == "trained_policy") c.guidance.mode = GuidanceConfig::Mode::TrainedPolicy;
        else if (mode == "scripted") c.guidance.mode = GuidanceConfig::Mode::Scripted;
        else if (mode == "zero") c.guidance.mode = GuidanceConfig::Mode::Zero;
        else throw ConfigError("guidance.mode must be trained_policy|scripted|zero");
        c.guidance.policy_checkpoint = get_or<std::string>(g, "policy_checkpoint", "");
        c.guidance.a_bound = get_or<double>(g, "a_bound", c.guidance.a_bound);
        c.guidance.approach_speed_cap =
            get_or<double>(g, "approach_speed_cap", c.guidance.approach_speed_cap);
        if (c.guidance.mode == GuidanceConfig::Mode::TrainedPolicy &&
            c.guidance.policy_checkpoint.empty())
            throw ConfigError("guidance: trained_policy requires policy_checkpoint");
    }
    if (j.contains("sensor")) {
        const auto& s = j.at("sensor");
        require_keys(s, "sensor",
                     {"enabled", "sigma_t", "sigma_q", "rate_hz", "delay_kind", "delay_a",
                      "delay_b", "dropout", "bias_t", "cameras_per_agent"});
        c.sensor.enabled = get_or<bool>(s, "enabled", true);
        c.sensor.model.sigma_t = get_or<double>(s, "sigma_t", 0.0);
        c.sensor.model.sigma_q = get_or<double>(s, "sigma_q", 0.0);
        c.sensor.model.rate = get_or<double>(s, "rate_hz", 2.0);
        const std::string dk = get_or<std::string>(s, "delay_kind", "fixed");
        if (dk == "fixed") c.sensor.model.delay_kind = PoseSensorModel::DelayKind::Fixed;
        else if (dk == "uniform") c.sensor.model.delay_kind = PoseSensorModel::DelayKind::Uniform;
        else throw ConfigError("sensor.delay_kind must be fixed|uniform");
        c.sensor.model.delay_a = get_or<double>(s, "delay_a", 0.0);
        c.sensor.model.delay_b = get_or<double>(s, "delay_b", 0.0);
        c.sensor.model.dropout = get_or<double>(s, "dropout", 0.0);
        c.sensor.bias_t = get_vec3(s, "bias_t", Vec3::Zero());
        c.sensor.cameras_per_agent = get_or<int>(s, "cameras_per_agent", 2);
        if (c.sensor.cameras_per_agent < 1 || c.sensor.cameras_per_agent > 2)
            throw ConfigError("sensor.cameras_per_agent must be 1 or 2");
    }
    if (j.contains("ukf")) {
        const auto& u = j.at("ukf");
        require_keys(u, "ukf",
                     {"alpha", "beta", "kappa", "q_pos", "q_vel", "q_target", "r_pos",
                      "history_capacity", "p0_pos", "p0_vel", "p0_target"});
        c.ukf.alpha = get_or<double>(u, "alpha", c.ukf.alpha);
        c.ukf.beta = get_or<double>(u, "beta", c.ukf.beta);
        c.ukf.kappa = get_or<double>(u, "kappa", c.ukf.kappa);
        c.ukf.q_pos = get_or<double>(u, "q_pos", c.ukf.q_pos);
        c.ukf.q_vel = get_or<double>(u, "q_vel", c.ukf.q_vel);
        c.ukf.q_target = get_or<double>(u, "q_target", c.ukf.q_target);
        c.ukf.r_pos = get_or<double>(u, "r_pos", c.ukf.r_pos);
        c.ukf.history_capacity = get_or<int>(u, "history_capacity", c.ukf.history_capacity);
        c.ukf.p0_pos = get_or<double>(u, "p0_pos", c.ukf.p0_pos);
        c.ukf.p0_vel = get_or<double>(u, "p0_vel", c.ukf.p0_vel);
        c.ukf.p0_target = get_or<double>(u, "p0_target", c.ukf.p0_target);
    }
    if (j.contains("lab")) {
        const auto& l = j.at("lab");
        require_keys(l, "lab", {"enabled", "kappa", "nu", "lambda_l", "lambda_u", "dh_rows"});
        c.lab.enabled = get_or<bool>(l, "enabled", false);
        c.lab.scaling.kappa = get_or<double>(l, "kappa", c.lab.scaling.kappa);
        c.lab.scaling.nu = get_or<double>(l, "nu", c.lab.scaling.nu);
        c.lab.damping.lambda_l = get_or<double>(l, "lambda_l", c.lab.damping.lambda_l);
        c.lab.damping.lambda_u = get_or<double>(l, "lambda_u", c.lab.damping.lambda_u);
        if (l.contains("dh_rows")) {
            const auto& rows = l.at("dh_rows");
            if (!rows.is_array() || rows.size() != 6)
                throw ConfigError("lab.dh_rows must be an array of 6 rows");
            c.lab.dh.rows.clear();
            for (const auto& r : rows) {
                require_keys(r, "lab.dh_rows[]", {"theta_offset", "d", "a", "alpha"});
                DhRow row;
                row.theta_offset = get_or<double>(r, "theta_offset", 0.0);
                row.d = get_or<double>(r, "d", 0.0);
                row.a = get_or<double>(r, "a", 0.0);
                row.alpha = get_or<double>(r, "alpha", 0.0);
                c.lab.dh.rows.push_back(row);
            }
        }
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        require_keys(s, "sim",
                     {"dt_plant", "control_hz", "filter_hz", "duration_s", "eps_pos",
                      "eps_vel", "velocity_constrained", "impulsive_control", "n_agents"});
        c.sim.dt_plant = get_or<double>(s, "dt_plant", c.sim.dt_plant);
        c.sim.control_hz = get_or<double>(s, "control_hz", c.sim.control_hz);
        c.sim.filter_hz = get_or<double>(s, "filter_hz", c.sim.filter_hz);
        c.sim.duration = get_or<double>(s, "duration_s", c.sim.duration);
        c.sim.eps_pos = get_or<double>(s, "eps_pos", c.sim.eps_pos);
        c.sim.eps_vel = get_or<double>(s, "eps_vel", c.sim.eps_vel);
        c.sim.velocity_constrained = get_or<bool>(s, "velocity_constrained", false);
        c.sim.impulsive_control = get_or<bool>(s, "impulsive_control", false);
        c.sim.n_agents = get_or<int>(s, "n_agents", 1);
    }
    if (j.contains("ddpg")) {
        const auto& d = j.at("ddpg");
        require_keys(d, "ddpg",
                     {"d_i", "eps_pos", "eps_vel", "velocity_constrained", "state_mode",
                      "a_bound", "dt", "max_steps", "dynamics_mode", "alpha0", "beta0", "tau",
                      "gamma", "episodes", "eps0", "eps_min", "lambda_decay", "batch_size",
                      "buffer_capacity", "hidden_width", "hidden_depth", "ou_gamma0",
                      "actor_loss_done_mask"});
        c.ddpg_env.d_i = get_or<double>(d, "d_i", c.ddpg_env.d_i);
        c.ddpg_env.eps_pos = get_or<double>(d, "eps_pos", c.ddpg_env.eps_pos);
        c.ddpg_env.eps_vel = get_or<double>(d, "eps_vel", c.ddpg_env.eps_vel);
        c.ddpg_env.velocity_constrained = get_or<bool>(d, "velocity_constrained", false);
        const std::string sm = get_or<std::string>(d, "state_mode", "position_only");
        if (sm == "position_only")
            c.ddpg_env.state_mode = DockingEnvConfig::StateMode::PositionOnly;
        else if (sm == "position_velocity")
            c.ddpg_env.state_mode = DockingEnvConfig::StateMode::PositionVelocity;
        else throw ConfigError("ddpg.state_mode must be position_only|position_velocity");
        c.ddpg_env.a_bound = get_or<double>(d, "a_bound", c.ddpg_env.a_bound);
        c.ddpg_env.dt = get_or<double>(d, "dt", c.ddpg_env.dt);
        c.ddpg_env.max_steps = get_or<int>(d, "max_steps", c.ddpg_env.max_steps);
        const std::string dm = get_or<std::string>(d, "dynamics_mode", "cw");
        if (dm == "cw") c.ddpg_env.dynamics_mode = DockingEnvConfig::DynamicsMode::Cw;
        else if (dm == "nonlinear")
            c.ddpg_env.dynamics_mode = DockingEnvConfig::DynamicsMode::Nonlinear;
        else throw ConfigError("ddpg.dynamics_mode must be cw|nonlinear");
        c.ddpg.alpha0 = get_or<double>(d, "alpha0", c.ddpg.alpha0);
        c.ddpg.beta0 = get_or<double>(d, "beta0", c.ddpg.beta0);
        c.ddpg.tau = get_or<double>(d, "tau", c.ddpg.tau);
        c.ddpg.gamma = get_or<double>(d, "gamma", c.ddpg.gamma);
        c.ddpg.episodes = get_or<int>(d, "episodes", c.ddpg.episodes);
        c.ddpg.eps0 = get_or<double>(d, "eps0", c.ddpg.eps0);
        c.ddpg.eps_min = get_or<double>(d, "eps_min", c.ddpg.eps_min);
        c.ddpg.lambda_decay = get_or<double>(d, "lambda_decay", c.ddpg.lambda_decay);
        c.ddpg.batch_size = get_or<int>(d, "batch_size", c.ddpg.batch_size);
        c.ddpg.buffer_capacity = get_or<int>(d, "buffer_capacity", c.ddpg.buffer_capacity);
        c.ddpg.hidden_width = get_or<int>(d, "hidden_width", c.ddpg.hidden_width);
        c.ddpg.hidden_depth = get_or<int>(d, "hidden_depth", c.ddpg.hidden_depth);
        c.ddpg.ou_gamma0 = get_or<double>(d, "ou_gamma0", c.ddpg.ou_gamma0);
        c.ddpg.actor_loss_done_mask =
            get_or<bool>(d, "actor_loss_done_mask", c.ddpg.actor_loss_done_mask);
    }
    if (j.contains("reward")) {
        const auto& r = j.at("reward");
        require_keys(r, "reward",
                     {"c1", "c2", "R_docked", "vel_reward_radius_factor",
                      "sparse_penalty_mode", "c3"});
        c.reward.c1 = get_or<double>(r, "c1", c.reward.c1);
        c.reward.c2 = get_or<double>(r, "c2", c.reward.c2);
        c.reward.R_docked = get_or<double>(r, "R_docked", c.reward.R_docked);
        c.reward.vel_reward_radius_factor =
            get_or<double>(r, "vel_reward_radius_factor", c.reward.vel_reward_radius_factor);
        c.reward.sparse_penalty_mode = get_or<bool>(r, "sparse_penalty_mode", false);
        c.reward.c3 = get_or<double>(r, "c3", c.reward.c3);
        if (c.reward.c1 < 0.0 || c.reward.c2 < 0.0 || c.reward.R_docked < 0.0)
            throw ConfigError("reward: c1, c2, R_docked must be >= 0");
    }
    if (j.contains("tuner")) {
        const auto& t = j.at("tuner");
        require_keys(t, "tuner", {"n_init", "n_iter", "objective", "window", "space"});
        c.tuner_n_init = get_or<int>(t, "n_init", c.tuner_n_init);
        c.tuner_n_iter = get_or<int>(t, "n_iter", c.tuner_n_iter);
        c.tuner_objective = get_or<std::string>(t, "objective", c.tuner_objective);
        if (c.tuner_objective != "final_docks" && c.tuner_objective != "validation")
            throw ConfigError("tuner.objective must be final_docks|validation");
        c.tuner_window = get_or<int>(t, "window", c.tuner_window);
        if (t.contains("space"))
            for (const auto& d : t.at("space"))
                c.tuner_space.dims.push_back(cfgdetail::parse_dim(d));
    }
    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        require_keys(s, "seeds", {"master"});
        c.master_seed = get_or<std::uint64_t>(s, "master", 0);
    }
    c.validate();
    return c;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return load_scenario(j);
}

}  // namespace proxops
