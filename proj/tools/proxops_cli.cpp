// proxops command-line interface.
//
// Subcommands: propagate, train, tune, estimate, kinematics, run, report.
// Global flags: --config <file>, --seed <u64>, --out <dir>.
// Exit codes: 0 success, 2 configuration/usage error, 1 runtime failure.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "proxops/bayesopt.hpp"
#include "proxops/ddpg.hpp"
#include "proxops/io.hpp"
#include "proxops/relative_dynamics.hpp"
#include "proxops/robot.hpp"
#include "proxops/scenario.hpp"
#include "proxops/sim_loop.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace proxops;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir = ".";
};

ScenarioConfig load_config_or_default(const GlobalArgs& g) {
    if (g.config_path.empty()) {
        ScenarioConfig c;
        c.safety.n = c.orbit.mean_motion();
        return c;
    }
    return load_scenario_file(g.config_path);
}

std::uint64_t effective_seed(const GlobalArgs& g, const ScenarioConfig& cfg) {
    return g.seed_given ? g.seed : cfg.master_seed;
}

void ensure_out(const GlobalArgs& g) {
    if (!g.out_dir.empty()) fs::create_directories(g.out_dir);
}

std::string out_path(const GlobalArgs& g, const std::string& name) {
    return (fs::path(g.out_dir) / name).string();
}

int cmd_propagate(const GlobalArgs& g) {
    ScenarioConfig cfg = load_config_or_default(g);
    ensure_out(g);

    FullState initial = circular_scenario(cfg.orbit.radius, cfg.rho0, cfg.rho_dot0,
                                          cfg.orbit.mu, cfg.orbit.inclination);
    Propagator prop(cfg.spacecraft, cfg.orbit.mu);
    const double dt = cfg.sim.dt_plant;
    const int n_steps = std::max(3, static_cast<int>(std::llround(cfg.sim.duration / dt)));
    const auto traj = prop.propagate(initial, [](double) { return ExternalInputs{}; }, dt, n_steps);

    CsvWriter csv(out_path(g, "trajectory.csv"),
                  {"t",    "rho_x",  "rho_y",  "rho_z",  "rhod_x", "rhod_y", "rhod_z",
                   "qs_1", "qs_2",   "qs_3",   "qs_4",   "wbs_x",  "wbs_y",  "wbs_z",
                   "qr_1", "qr_2",   "qr_3",   "qr_4",   "wr_x",   "wr_y",   "wr_z",
                   "rt_x", "rt_y",   "rt_z",   "vt_x",   "vt_y",   "vt_z"});
    for (const auto& row : traj) {
        const auto& s = row.state;
        csv.row({row.t,
                 s.rel.rho.x(), s.rel.rho.y(), s.rel.rho.z(),
                 s.rel.rho_dot.x(), s.rel.rho_dot.y(), s.rel.rho_dot.z(),
                 s.rot.q_s.v.x(), s.rot.q_s.v.y(), s.rot.q_s.v.z(), s.rot.q_s.s,
                 s.rot.omega_bs.x(), s.rot.omega_bs.y(), s.rot.omega_bs.z(),
                 s.rot.q_r.v.x(), s.rot.q_r.v.y(), s.rot.q_r.v.z(), s.rot.q_r.s,
                 s.rot.omega_r.x(), s.rot.omega_r.y(), s.rot.omega_r.z(),
                 s.target.r.x(), s.target.r.y(), s.target.r.z(),
                 s.target.v.x(), s.target.v.y(), s.target.v.z()});
    }
    std::cout << "propagate: wrote " << traj.size() << " rows to "
              << out_path(g, "trajectory.csv") << "\n";
    return 0;
}

json episode_record(const EpisodeMetrics& m) {
    return json{{"episode", m.episode},
                {"total_reward", m.total_reward},
                {"final_pos_norm", m.final_pos_norm},
                {"final_vel_norm", m.final_vel_norm},
                {"docked", m.docked}};
}

int cmd_train(const GlobalArgs& g) {
    ScenarioConfig cfg = load_config_or_default(g);
    ensure_out(g);
    const std::uint64_t seed = effective_seed(g, cfg);

    TrainResult result = train_ddpg(cfg.ddpg_env, cfg.ddpg, cfg.reward, seed);

    JsonlWriter episodes(out_path(g, "episodes.jsonl"));
    for (const auto& m : result.episodes) episodes.record(episode_record(m));

    std::ofstream ckpt(out_path(g, "actor.ckpt"));
    result.actor.save(ckpt);

    int final_docks = 0;
    const int window = std::min<int>(50, static_cast<int>(result.episodes.size()));
    for (std::size_t i = result.episodes.size() - static_cast<std::size_t>(window);
         i < result.episodes.size(); ++i)
        if (result.episodes[i].docked) final_docks += 1;

    json summary{{"episodes", result.episodes.size()},
                 {"docks_final_window", final_docks},
                 {"window", window},
                 {"seed", seed},
                 {"checkpoint", out_path(g, "actor.ckpt")}};
    std::ofstream(out_path(g, "summary.json")) << summary.dump(2) << "\n";
    std::cout << "train: " << final_docks << "/" << window
              << " docks in the final window; checkpoint at "
              << out_path(g, "actor.ckpt") << "\n";
    return 0;
}

// Applies named tuner dimensions onto the hyperparameter/reward structs.
void apply_tuner_values(const SearchSpace& space, const std::vector<double>& values,
                        DdpgHyperparams& hp, RewardParams& rp) {
    for (std::size_t k = 0; k < space.dims.size(); ++k) {
        const std::string& name = space.dims[k].name;
        const double v = values[k];
        if (name == "alpha0") hp.alpha0 = v;
        else if (name == "beta0") hp.beta0 = v;
        else if (name == "tau") hp.tau = v;
        else if (name == "gamma") hp.gamma = v;
        else if (name == "eps0") hp.eps0 = v;
        else if (name == "eps_min") hp.eps_min = v;
        else if (name == "lambda_decay") hp.lambda_decay = v;
        else if (name == "hidden_width") hp.hidden_width = static_cast<int>(v);
        else if (name == "hidden_depth") hp.hidden_depth = static_cast<int>(v);
        else if (name == "episodes") hp.episodes = static_cast<int>(v);
        else if (name == "batch_size") hp.batch_size = static_cast<int>(v);
        else if (name == "ou_gamma0") hp.ou_gamma0 = v;
        else if (name == "c1") rp.c1 = v;
        else if (name == "c2") rp.c2 = v;
        else if (name == "R_docked") rp.R_docked = v;
        else throw ConfigError("tuner: unknown dimension name '" + name + "'");
    }
}

SearchSpace default_tuner_space() {
    SearchSpace s;
    s.dims = {
        {"alpha0", 1e-4, 1e-2, SearchDimension::Scale::Log, SearchDimension::Kind::Continuous},
        {"beta0", 1e-4, 1e-2, SearchDimension::Scale::Log, SearchDimension::Kind::Continuous},
        {"tau", 1e-3, 0.1, SearchDimension::Scale::Log, SearchDimension::Kind::Continuous},
        {"lambda_decay", 0.01, 0.5, SearchDimension::Scale::Log,
         SearchDimension::Kind::Continuous},
        {"eps0", 0.05, 0.8, SearchDimension::Scale::Linear, SearchDimension::Kind::Continuous},
        {"hidden_width", 16, 256, SearchDimension::Scale::Log, SearchDimension::Kind::Integer},
        {"hidden_depth", 1, 3, SearchDimension::Scale::Linear, SearchDimension::Kind::Integer},
    };
    return s;
}

json tune_record(const TuneEvaluation& ev, const SearchSpace& space) {
    json config = json::object();
    for (std::size_t k = 0; k < space.dims.size(); ++k)
        config[space.dims[k].name] = ev.config[k];
    json unit = json::array();
    for (long i = 0; i < ev.unit.size(); ++i) unit.push_back(ev.unit(i));
    return json{{"iteration", ev.iteration}, {"config", config},   {"unit", unit},
                {"objective", ev.objective}, {"failed", ev.failed}, {"seed", ev.seed},
                {"duration_s", ev.duration_s}};
}

int cmd_tune(const GlobalArgs& g, bool resume) {
    ScenarioConfig cfg = load_config_or_default(g);
    ensure_out(g);
    const std::uint64_t seed = effective_seed(g, cfg);
    SearchSpace space = cfg.tuner_space.dims.empty() ? default_tuner_space() : cfg.tuner_space;

    const std::string history_path = out_path(g, "tune_history.jsonl");
    std::vector<TuneEvaluation> resume_history;
    if (resume && fs::exists(history_path)) {
        for (const auto& r : read_jsonl(history_path)) {
            TuneEvaluation ev;
            ev.iteration = r.at("iteration").get<int>();
            ev.objective = r.at("objective").get<double>();
            ev.failed = r.value("failed", false);
            ev.seed = r.at("seed").get<std::uint64_t>();
            ev.duration_s = r.value("duration_s", 0.0);
            const auto& unit = r.at("unit");
            ev.unit.resize(static_cast<long>(unit.size()));
            for (std::size_t i = 0; i < unit.size(); ++i)
                ev.unit(static_cast<long>(i)) = unit[i].get<double>();
            ev.config.clear();
            for (const auto& d : space.dims)
                ev.config.push_back(r.at("config").at(d.name).get<double>());
            resume_history.push_back(std::move(ev));
        }
        std::cout << "tune: resuming with " << resume_history.size()
                  << " recorded evaluations\n";
    }

    JsonlWriter history(history_path, /*append=*/false);
    TuneObserver observer = [&](const TuneEvaluation& ev) {
        history.record(tune_record(ev, space));
        history.flush();
    };

    TuneObjective objective = [&](const std::vector<double>& values,
                                  std::uint64_t eval_seed) {
        DdpgHyperparams hp = cfg.ddpg;
        RewardParams rp = cfg.reward;
        apply_tuner_values(space, values, hp, rp);
        TrainResult tr = train_ddpg(cfg.ddpg_env, hp, rp, eval_seed);
        if (cfg.tuner_objective == "validation") {
            EvalResult ev = evaluate_policy(tr.actor, cfg.ddpg_env, rp, 5, eval_seed + 1);
            return objective_validation_docks(ev.docked_count, 5);
        }
        return objective_final_docks(tr.episodes, cfg.tuner_window);
    };

    TuneResult result = tune(objective, space, cfg.tuner_n_init, cfg.tuner_n_iter, seed,
                             observer, resume_history);

    json best = json::object();
    for (std::size_t k = 0; k < space.dims.size(); ++k)
        best[space.dims[k].name] = result.best_config.empty() ? 0.0 : result.best_config[k];
    json summary{{"best_objective", result.best_objective},
                 {"best_config", best},
                 {"evaluations", result.history.size()},
                 {"seed", seed}};
    std::ofstream(out_path(g, "summary.json")) << summary.dump(2) << "\n";
    std::cout << "tune: best objective " << result.best_objective << " after "
              << result.history.size() << " evaluations\n";
    return 0;
}

int cmd_run(const GlobalArgs& g) {
    ScenarioConfig cfg = load_config_or_default(g);
    ensure_out(g);
    const std::uint64_t seed = effective_seed(g, cfg);

    RunMetrics m = run_closed_loop(cfg, seed);

    {
        CsvWriter csv(out_path(g, "trajectory.csv"),
                      {"t", "rho_x", "rho_y", "rho_z", "rhod_x", "rhod_y", "rhod_z",
                       "est_rho_x", "est_rho_y", "est_rho_z", "est_rhod_x", "est_rhod_y",
                       "est_rhod_z", "uref_x", "uref_y", "uref_z", "ucmd_x", "ucmd_y",
                       "ucmd_z", "reward", "qp_saturated"});
        for (const auto& r : m.controls)
            csv.row({r.t, r.rho_true.x(), r.rho_true.y(), r.rho_true.z(),
                     r.rho_dot_true.x(), r.rho_dot_true.y(), r.rho_dot_true.z(),
                     r.rho_est.x(), r.rho_est.y(), r.rho_est.z(), r.rho_dot_est.x(),
                     r.rho_dot_est.y(), r.rho_dot_est.z(), r.u_ref.x(), r.u_ref.y(),
                     r.u_ref.z(), r.u_cmd.x(), r.u_cmd.y(), r.u_cmd.z(), r.reward,
                     r.qp_saturated ? 1.0 : 0.0});
    }
    {
        std::vector<std::string> cols{"t"};
        for (int i = 0; i < 12; ++i) cols.push_back("m_" + std::to_string(i));
        for (int i = 0; i < 12; ++i) cols.push_back("p_" + std::to_string(i));
        cols.insert(cols.end(), {"cam0", "cam1", "e_t", "e_q", "e_p"});
        CsvWriter csv(out_path(g, "estimates.csv"), cols);
        for (const auto& r : m.estimates) {
            std::vector<double> row{r.t};
            for (int i = 0; i < 12; ++i) row.push_back(r.mean(i));
            for (int i = 0; i < 12; ++i) row.push_back(r.p_diag(i));
            row.push_back(r.cam_available[0] ? 1.0 : 0.0);
            row.push_back(r.cam_available[1] ? 1.0 : 0.0);
            row.insert(row.end(), {r.e_t, r.e_q, r.e_p});
            csv.row(row);
        }
    }
    {
        CsvWriter csv(out_path(g, "barriers.csv"), {"t", "h1", "h2", "h3", "h4", "h5"});
        for (const auto& r : m.controls) csv.row({r.t, r.h1, r.h2, r.h3, r.h4, r.h5});
    }
    {
        CsvWriter csv(out_path(g, "measurements.csv"),
                      {"sensor_id", "t_meas", "t_available", "z_x", "z_y", "z_z", "q_1",
                       "q_2", "q_3", "q_4"});
        for (const auto& meas : m.delivered_measurements)
            csv.row({static_cast<double>(meas.sensor_id), meas.t_meas, meas.t_available,
                     meas.translation.x(), meas.translation.y(), meas.translation.z(),
                     meas.rotation.v.x(), meas.rotation.v.y(), meas.rotation.v.z(),
                     meas.rotation.s});
    }
    if (!m.joints.empty()) {
        std::vector<std::string> cols{"t_lab"};
        for (int i = 1; i <= 6; ++i) cols.push_back("q" + std::to_string(i));
        for (int i = 1; i <= 6; ++i) cols.push_back("qd" + std::to_string(i));
        cols.insert(cols.end(), {"ee_x", "ee_y", "ee_z"});
        CsvWriter csv(out_path(g, "joints.csv"), cols);
        for (const auto& r : m.joints) {
            std::vector<double> row{r.t_lab};
            for (int i = 0; i < 6; ++i) row.push_back(r.q(i));
            for (int i = 0; i < 6; ++i) row.push_back(r.q_dot(i));
            row.insert(row.end(), {r.ee_position.x(), r.ee_position.y(), r.ee_position.z()});
            csv.row(row);
        }
    }

    json summary{{"docked", m.docked},
                 {"dock_time", m.dock_time},
                 {"total_reward", m.total_reward},
                 {"min_barrier", m.min_barrier},
                 {"E_t", m.E_t},
                 {"E_q", m.E_q},
                 {"E_p", m.E_p},
                 {"stale_measurements_dropped", m.stale_measurements_dropped},
                 {"control_steps", m.controls.size()},
                 {"seed", seed},
                 {"failure", m.failure}};
    std::ofstream(out_path(g, "summary.json")) << summary.dump(2) << "\n";

    if (!m.failure.empty()) {
        std::cerr << "run: failed: " << m.failure << "\n";
        return 1;
    }
    std::cout << "run: " << (m.docked ? "docked at t=" + std::to_string(m.dock_time)
                                      : "did not dock")
              << ", outputs in " << g.out_dir << "\n";
    return 0;
}

int cmd_estimate(const GlobalArgs& g, const std::string& measurements_path) {
    ScenarioConfig cfg = load_config_or_default(g);
    ensure_out(g);

    std::ifstream in(measurements_path);
    if (!in) throw ConfigError("estimate: cannot open " + measurements_path);
    std::string line;
    std::getline(in, line);  // header
    struct Row {
        int sensor_id;
        PoseMeasurement m;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> v;
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() != 10) throw ConfigError("estimate: bad measurement row");
        Row r;
        r.sensor_id = static_cast<int>(v[0]);
        r.m.sensor_id = r.sensor_id;
        r.m.t_meas = v[1];
        r.m.t_available = v[2];
        r.m.translation = Vec3(v[3], v[4], v[5]);
        r.m.rotation.v = Vec3(v[6], v[7], v[8]);
        r.m.rotation.s = v[9];
        rows.push_back(r);
    }
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.m.t_available < b.m.t_available; });

    loopdetail::AgentFilters F(cfg, cfg.rho0, cfg.rho_dot0);
    const auto h = loopdetail::position_measurement();
    const auto f = F.dynamics();
    const double Tf = 1.0 / cfg.sim.filter_hz;

    std::vector<std::string> cols{"t"};
    for (int i = 0; i < 12; ++i) cols.push_back("m_" + std::to_string(i));
    for (int i = 0; i < 12; ++i) cols.push_back("p_" + std::to_string(i));
    cols.insert(cols.end(), {"cam0", "cam1"});
    CsvWriter csv(out_path(g, "estimates.csv"), cols);

    std::size_t next = 0;
    int dropped = 0;
    for (double t = Tf; t <= cfg.sim.duration + 1e-9; t += Tf) {
        std::vector<PoseMeasurement> arrived[2];
        while (next < rows.size() && rows[next].m.t_available <= t + 1e-12) {
            const int cam = rows[next].sensor_id % 2;
            arrived[cam].push_back(rows[next].m);
            ++next;
        }
        bool avail[2] = {!arrived[0].empty(), !arrived[1].empty()};
        for (int fi = 0; fi < 3; ++fi) {
            GaussianBelief& b = F.beliefs[static_cast<std::size_t>(fi)];
            GaussianBelief predicted = (t > b.t) ? ukf_predict(b, f, F.config, t - b.t) : b;
            bool corrected = false;
            auto consume = [&](const PoseMeasurement& m) {
                try {
                    predicted = ukf_update_delayed(predicted, VecX(m.translation), m.t_meas,
                                                   F.histories[static_cast<std::size_t>(fi)],
                                                   h, f, F.R_single, F.config);
                    corrected = true;
                } catch (const StaleMeasurement&) {
                    dropped += 1;
                }
            };
            if (fi < 2) {
                for (const auto& m : arrived[fi]) consume(m);
            } else {
                for (const auto& m : arrived[0]) consume(m);
                for (const auto& m : arrived[1]) consume(m);
            }
            b = predicted;
            F.histories[static_cast<std::size_t>(fi)].push(b, corrected);
        }
        F.fused = owa_fuse({F.beliefs[0], F.beliefs[1], F.beliefs[2]});
        std::vector<double> row{t};
        for (int i = 0; i < 12; ++i) row.push_back(F.fused.m(i));
        for (int i = 0; i < 12; ++i) row.push_back(F.fused.P(i, i));
        row.push_back(avail[0] ? 1.0 : 0.0);
        row.push_back(avail[1] ? 1.0 : 0.0);
        csv.row(row);
        if (next >= rows.size() && t > rows.back().m.t_available + 2.0) break;
    }
    std::cout << "estimate: replayed " << rows.size() << " measurements (" << dropped
              << " dropped as stale) to " << out_path(g, "estimates.csv") << "\n";
    return 0;
}

Vec6 parse_vec6(const std::string& csl, const std::string& what) {
    std::stringstream ss(csl);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 6) throw ConfigError(what + ": expected 6 comma-separated values");
    Vec6 out;
    for (int i = 0; i < 6; ++i) out(i) = v[static_cast<std::size_t>(i)];
    return out;
}

int cmd_kinematics(const GlobalArgs& g, const std::string& q_str,
                   const std::string& twist_str) {
    ScenarioConfig cfg = load_config_or_default(g);
    const Vec6 q = q_str.empty() ? Vec6(Vec6::Zero()) : parse_vec6(q_str, "--q");

    const EndEffectorPose pose = forward_kinematics(cfg.lab.dh, q);
    const Mat6 J = jacobian(cfg.lab.dh, q);

    json out;
    out["q"] = std::vector<double>(q.data(), q.data() + 6);
    out["position_mm"] = {pose.position.x(), pose.position.y(), pose.position.z()};
    json R = json::array();
    for (int r = 0; r < 3; ++r)
        R.push_back({pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)});
    out["rotation"] = R;
    out["condition_number"] = jacobian_condition_number(J);

    if (!twist_str.empty()) {
        const Vec6 twist = parse_vec6(twist_str, "--twist");
        const Vec6 qd = damp_joint_rates(joint_rates_from_twist(J, twist), J, cfg.lab.damping);
        out["q_dot"] = std::vector<double>(qd.data(), qd.data() + 6);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_report(const GlobalArgs& g, const std::string& input) {
    ensure_out(g);
    const auto records = read_jsonl(input);
    if (records.empty()) throw ConfigError("report: no records in " + input);

    if (records.front().contains("episode")) {
        // Training log: dock ratio per 10 episodes plus aggregates.
        CsvWriter csv(out_path(g, "dock_ratio.csv"), {"episode_bin_end", "dock_ratio"});
        int in_bin = 0, docked_in_bin = 0, total_docks = 0;
        double mean_final_pos = 0.0;
        std::vector<bool> docked_series;
        for (const auto& r : records) {
            const bool docked = r.at("docked").get<bool>();
            docked_series.push_back(docked);
            total_docks += docked ? 1 : 0;
            mean_final_pos += r.at("final_pos_norm").get<double>();
            in_bin += 1;
            docked_in_bin += docked ? 1 : 0;
            if (in_bin == 10) {
                csv.row({static_cast<double>(r.at("episode").get<int>()),
                         static_cast<double>(docked_in_bin) / 10.0});
                in_bin = 0;
                docked_in_bin = 0;
            }
        }
        int final_docks = 0;
        const int window = std::min<int>(50, static_cast<int>(docked_series.size()));
        for (std::size_t i = docked_series.size() - static_cast<std::size_t>(window);
             i < docked_series.size(); ++i)
            if (docked_series[i]) final_docks += 1;
        json summary{{"episodes", records.size()},
                     {"total_docks", total_docks},
                     {"docks_final_window", final_docks},
                     {"window", window},
                     {"mean_final_pos_norm", mean_final_pos / records.size()}};
        std::ofstream(out_path(g, "summary.json")) << summary.dump(2) << "\n";
        std::cout << "report: " << total_docks << "/" << records.size() << " docks, "
                  << final_docks << "/" << window << " in the final window\n";
    } else if (records.front().contains("iteration")) {
        // Tuning history: best-so-far trace.
        CsvWriter csv(out_path(g, "tune_best.csv"), {"iteration", "objective", "best_so_far"});
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& r : records) {
            const double obj = r.at("objective").get<double>();
            best = std::max(best, obj);
            csv.row({static_cast<double>(r.at("iteration").get<int>()), obj, best});
        }
        json summary{{"evaluations", records.size()}, {"best_objective", best}};
        std::ofstream(out_path(g, "summary.json")) << summary.dump(2) << "\n";
        std::cout << "report: best objective " << best << " over " << records.size()
                  << " evaluations\n";
    } else {
        throw ConfigError("report: unrecognized record schema in " + input);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rendezvous and docking GNC simulation stack"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "Scenario configuration file (JSON)");
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed (overrides config)");
    app.add_option("--out", g.out_dir, "Output directory");

    auto* sub_propagate = app.add_subcommand("propagate", "Propagate the relative dynamics");
    auto* sub_train = app.add_subcommand("train", "Train the DDPG guidance policy");
    auto* sub_tune = app.add_subcommand("tune", "Bayesian-optimization hyperparameter tuning");
    bool resume = false;
    sub_tune->add_flag("--resume", resume, "Continue from an existing tune_history.jsonl");
    auto* sub_estimate = app.add_subcommand("estimate", "Replay recorded measurements through the UKF stack");
    std::string measurements_path = "measurements.csv";
    sub_estimate->add_option("--measurements", measurements_path, "Input measurement CSV");
    auto* sub_kin = app.add_subcommand("kinematics", "Forward kinematics / rate queries");
    std::string q_str, twist_str;
    sub_kin->add_option("--q", q_str, "Joint angles, 6 comma-separated radians");
    sub_kin->add_option("--twist", twist_str, "End-effector twist (mm/s x3, rad/s x3)");
    auto* sub_run = app.add_subcommand("run", "Run the closed sense-estimate-guide-act loop");
    auto* sub_report = app.add_subcommand("report", "Aggregate JSONL logs into summary tables");
    std::string report_input = "episodes.jsonl";
    sub_report->add_option("--input", report_input, "episodes.jsonl or tune_history.jsonl");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        if (sub_propagate->parsed()) return cmd_propagate(g);
        if (sub_train->parsed()) return cmd_train(g);
        if (sub_tune->parsed()) return cmd_tune(g, resume);
        if (sub_estimate->parsed()) return cmd_estimate(g, measurements_path);
        if (sub_kin->parsed()) return cmd_kinematics(g, q_str, twist_str);
        if (sub_run->parsed()) return cmd_run(g);
        if (sub_report->parsed()) return cmd_report(g, report_input);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
