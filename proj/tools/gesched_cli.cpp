// Command-line runner: calibration, simulation, sweeps, analytic bounds and
// index verification for downlink scheduling over two-state Markov channels
// with ARQ-feedback CSI.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gesched/bounds.hpp"
#include "gesched/calibration.hpp"
#include "gesched/config.hpp"
#include "gesched/csv.hpp"
#include "gesched/index_oracle.hpp"
#include "gesched/parallel.hpp"
#include "gesched/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gesched;

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
    bool trace = false;
};

ExperimentConfig load_config(const CliOverrides& o) {
    ExperimentConfig cfg = ExperimentConfig::load(o.config_path);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.seed_set) cfg.master_seed = o.seed;
    if (o.jobs > 0) cfg.jobs = o.jobs;
    if (o.trace) cfg.trace = true;
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    return cfg;
}

int effective_jobs(const ExperimentConfig& cfg) {
    return cfg.jobs > 0 ? cfg.jobs : default_jobs();
}

std::string key_name(const BeliefState& b) {
    if (b.last_obs == Obs::NEVER) return "STAT";
    return (b.last_obs == Obs::OFF ? "OFF:" : "ON:") + std::to_string(b.age);
}

json calibration_to_json(const CalibrationResult& c) {
    json j;
    j["omega_tau"] = c.omega_tau;
    j["rho_tau"] = c.rho_tau;
    j["marginal_user"] = c.marginal_user;
    j["tx_time"] = c.tx_time;
    j["total_time"] = c.total_time;
    j["tau"] = c.tau;
    j["budget"] = c.budget;
    j["degenerate"] = c.degenerate;
    json ms = json::array();
    for (const auto& e : c.marginal_set) {
        json je;
        je["user"] = e.user;
        je["key"] = e.plateau ? std::string("PLATEAU") : ("OFF:" + std::to_string(e.off_age));
        ms.push_back(je);
    }
    j["marginal_set"] = ms;
    return j;
}

int cmd_calibrate(const ExperimentConfig& cfg) {
    const auto models = cfg.make_models();
    const auto weights = cfg.make_weights();
    const CalibrationResult c = calibrate(models, weights, cfg.tau, cfg.effective_budget());

    std::ofstream jf(fs::path(cfg.out_dir) / "calibration.json");
    json out = calibration_to_json(c);
    out["config"] = cfg.resolved_json();
    jf << out.dump(2) << "\n";

    CsvWriter csv((fs::path(cfg.out_dir) / "calibration.csv").string(), cfg.resolved_json(),
                  cfg.master_seed);
    csv.header("user,p01,p11,weight,tx_time");
    for (size_t u = 0; u < models.size(); ++u)
        csv.row(u, models[u].p01, models[u].p11, weights[u], c.tx_time[u]);
    std::printf("omega_tau=%.12g rho_tau=%.12g marginal_user=%d total_time=%.12g\n", c.omega_tau,
                c.rho_tau, c.marginal_user, c.total_time);
    return 0;
}

void write_summary_csv(const std::string& path, const ExperimentConfig& cfg,
                       const ExperimentResult& res) {
    CsvWriter csv(path, cfg.resolved_json(), cfg.master_seed);
    csv.header("row,rep_id,thr_belief_weighted,thr_realized_weighted,thr_belief_total,"
               "thr_realized_total,mean_active,mean_candidates,broadcast_fraction,"
               "frac_candidates_ge_m,total_queue_mean,window_q1,window_q2,window_q3,window_q4,"
               "mean_frame_drift_last_half");
    for (const auto& r : res.records)
        csv.row("rep", r.rep_id, r.thr_belief_weighted, r.thr_realized_weighted,
                r.thr_belief_total, r.thr_realized_total, r.mean_active, r.mean_candidates,
                r.broadcast_fraction, r.frac_candidates_ge_m, r.total_queue_mean,
                r.window_total_queue[0], r.window_total_queue[1], r.window_total_queue[2],
                r.window_total_queue[3], r.mean_frame_drift_last_half);
    const auto& s = res.summary;
    csv.row("mean", "", s.thr_belief_weighted.mean, s.thr_realized_weighted.mean,
            s.thr_belief_total.mean, s.thr_realized_total.mean, s.mean_active.mean, "",
            s.broadcast_fraction.mean, s.frac_candidates_ge_m.mean, s.total_queue_mean.mean, "",
            "", "", "", "");
    csv.row("sd", "", s.thr_belief_weighted.sd, s.thr_realized_weighted.sd, s.thr_belief_total.sd,
            s.thr_realized_total.sd, s.mean_active.sd, "", s.broadcast_fraction.sd,
            s.frac_candidates_ge_m.sd, s.total_queue_mean.sd, "", "", "", "", "");
    csv.row("ci95", "", s.thr_belief_weighted.ci95, s.thr_realized_weighted.ci95,
            s.thr_belief_total.ci95, s.thr_realized_total.ci95, s.mean_active.ci95, "",
            s.broadcast_fraction.ci95, s.frac_candidates_ge_m.ci95, s.total_queue_mean.ci95, "",
            "", "", "", "");
}

int cmd_simulate(const ExperimentConfig& cfg) {
    const auto models = cfg.make_models();
    const auto arrivals = cfg.make_arrivals();
    const auto weights = cfg.make_weights();
    const PolicyParams policy = cfg.make_policy();
    SimFlags flags;
    flags.saturated = cfg.saturated;

    const ExperimentResult res =
        run_experiment(models, arrivals, policy, weights, cfg.horizon, cfg.effective_warmup(),
                       cfg.replications, cfg.master_seed, flags, effective_jobs(cfg));

    write_summary_csv((fs::path(cfg.out_dir) / "summary.csv").string(), cfg, res);

    if (policy.kind == PolicyKind::FRAME) {
        CsvWriter csv((fs::path(cfg.out_dir) / "frames.csv").string(), cfg.resolved_json(),
                      cfg.master_seed);
        csv.header("rep_id,frame,t,lyapunov,drift_per_slot");
        for (const auto& r : res.records) {
            for (size_t k = 0; k + 1 < r.frame_lyapunov.size(); ++k) {
                const double drift =
                    (r.frame_lyapunov[k + 1] - r.frame_lyapunov[k]) / double(policy.T);
                csv.row(r.rep_id, k, k * long(policy.T), r.frame_lyapunov[k], drift);
            }
        }
    }

    if (cfg.trace) {
        CsvWriter csv((fs::path(cfg.out_dir) / "trace.csv").string(), cfg.resolved_json(),
                      cfg.master_seed);
        csv.header("t,mode,num_candidates,num_scheduled,served_users");
        SlotObserver obs = [&](const SlotObservation& o) {
            std::string served;
            for (size_t u = 0; u < o.decision->scheduled.size(); ++u)
                if (o.decision->scheduled[u] && (*o.channel_states)[u]) {
                    if (!served.empty()) served += ';';
                    served += std::to_string(u);
                }
            const char* mode = o.decision->mode == SlotMode::TRANSMIT    ? "TRANSMIT"
                               : o.decision->mode == SlotMode::BROADCAST ? "BROADCAST"
                                                                         : "IDLE";
            csv.row(o.t, mode, o.decision->num_candidates, o.decision->num_scheduled, served);
        };
        run_replication(models, arrivals, policy, weights, cfg.horizon, cfg.effective_warmup(),
                        cfg.master_seed, 0, flags, obs);
    }

    std::printf("replications=%d thr_belief_weighted=%.6g +-%.3g mean_active=%.6g +-%.3g "
                "broadcast_fraction=%.6g\n",
                res.summary.replications, res.summary.thr_belief_weighted.mean,
                res.summary.thr_belief_weighted.ci95, res.summary.mean_active.mean,
                res.summary.mean_active.ci95, res.summary.broadcast_fraction.mean);
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
    if (cfg.sweep_axis.empty())
        throw std::invalid_argument("config.sweep: required for the sweep command");

    CsvWriter csv((fs::path(cfg.out_dir) / "sweep.csv").string(), cfg.resolved_json(),
                  cfg.master_seed);
    csv.header("axis,value,status,thr_belief_weighted,thr_bw_ci95,thr_realized_weighted,"
               "mean_active,active_ci95,broadcast_fraction,total_queue_mean,queue_ci95");

    int failed_points = 0;
    for (const double v : cfg.sweep_values) {
        ExperimentConfig point = cfg;
        point.sweep_axis.clear();
        point.sweep_values.clear();
        if (cfg.sweep_axis == "M") {
            point.M = static_cast<int>(v);
        } else if (cfg.sweep_axis == "K") {
            point.K = static_cast<int>(v);
        } else if (cfg.sweep_axis == "T") {
            point.T = static_cast<int>(v);
        } else { // lambda_scale
            if (point.lambdas.empty())
                throw std::invalid_argument("config.lambda: required for a lambda_scale sweep");
            for (double& l : point.lambdas) l *= v;
        }
        try {
            point.validate();
            const ExperimentResult res = run_experiment(
                point.make_models(), point.make_arrivals(), point.make_policy(),
                point.make_weights(), point.horizon, point.effective_warmup(),
                point.replications, point.master_seed,
                SimFlags{point.saturated, true, 2048}, effective_jobs(point));
            const auto& s = res.summary;
            csv.row(cfg.sweep_axis, v, "ok", s.thr_belief_weighted.mean,
                    s.thr_belief_weighted.ci95, s.thr_realized_weighted.mean, s.mean_active.mean,
                    s.mean_active.ci95, s.broadcast_fraction.mean, s.total_queue_mean.mean,
                    s.total_queue_mean.ci95);
        } catch (const std::exception& e) {
            std::string msg = e.what();
            for (char& ch : msg)
                if (ch == ',' || ch == '\n') ch = ';';
            csv.row(cfg.sweep_axis, v, std::string("error: ") + msg, "", "", "", "", "", "", "",
                    "");
            std::fprintf(stderr, "sweep point %s=%g failed: %s\n", cfg.sweep_axis.c_str(), v,
                         e.what());
            ++failed_points;
        }
    }
    return failed_points > 0 ? 1 : 0;
}

int cmd_bounds(const ExperimentConfig& cfg) {
    const auto models = cfg.make_models();
    const BoundReport r =
        bound_report(models, cfg.tau, cfg.M, cfg.effective_budget(), cfg.delta);
    json j;
    j["f_per_user"] = r.f_per_user;
    j["f_total"] = r.f_total;
    j["tau0"] = cfg.tau0_log_base > 0.0 ? tau0(cfg.delta, cfg.tau0_log_base) : r.tau0_value;
    j["mu"] = r.mu_value;
    j["loss"] = r.loss_value;
    j["chernoff"] = r.chernoff;
    j["t_star"] = r.t_star;
    j["eta_star"] = r.eta_star;
    j["params"] = {{"tau", r.tau}, {"M", r.M}, {"K", r.K}, {"delta", r.delta}};
    j["config"] = cfg.resolved_json();
    std::ofstream out(fs::path(cfg.out_dir) / "bounds.json");
    out << j.dump(2) << "\n";
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_verify_index(const ExperimentConfig& cfg, int truncation, double tolerance) {
    const auto models = cfg.make_models();
    const auto weights = cfg.make_weights();

    CsvWriter csv((fs::path(cfg.out_dir) / "verify_index.csv").string(), cfg.resolved_json(),
                  cfg.master_seed);
    csv.header("user,belief_key,closed_form,oracle,abs_err");

    const int max_age = std::min(cfg.tau, 20);
    double worst = 0.0;

    std::vector<std::vector<std::string>> rows(models.size());
    parallel_for(static_cast<int>(models.size()), effective_jobs(cfg), [&](int u) {
        if (weights[u] <= 0.0) return; // zero-weight users never hold an index slot
        IndexOracle oracle(models[u], OracleOptions{truncation, 1e-10, 1000000, 30, 0.0});
        std::vector<BeliefState> keys;
        for (int l = 1; l <= max_age; ++l) keys.push_back(BeliefState{Obs::OFF, l});
        keys.push_back(BeliefState::stationary());
        for (int l = max_age; l >= 1; --l) keys.push_back(BeliefState{Obs::ON, l});
        for (const auto& k : keys) {
            const double cf = whittle_index_value(models[u], k);
            const double oc = oracle.index_at(k, tolerance);
            char buf[160];
            std::snprintf(buf, sizeof buf, "%d,%s,%.12g,%.12g,%.3e", u, key_name(k).c_str(), cf,
                          oc, std::fabs(cf - oc));
            rows[u].push_back(buf);
        }
    });
    for (size_t u = 0; u < rows.size(); ++u)
        for (const auto& line : rows[u]) {
            csv.raw(line);
            const double err = std::stod(line.substr(line.rfind(',') + 1));
            worst = std::max(worst, err);
        }
    std::printf("verify-index: %zu users, worst |closed_form - oracle| = %.3e\n", models.size(),
                worst);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scheduling policies and Monte Carlo experiments for downlink transmission "
                 "over two-state Markov channels with ARQ-feedback CSI"};
    app.require_subcommand(1);

    CliOverrides o;
    int truncation = 200;
    double tolerance = 1e-5;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "Experiment config (.json or .toml)")
            ->required();
        sub->add_option("--out", o.out_dir, "Output directory (overrides config)");
        sub->add_option("--seed", o.seed, "Master seed (overrides config)")
            ->each([&](const std::string&) { o.seed_set = true; });
        sub->add_option("--jobs", o.jobs, "Worker threads (default: available parallelism)");
        sub->add_flag("--trace", o.trace, "Emit a per-slot trace CSV");
    };

    CLI::App* calib = app.add_subcommand("calibrate", "Compute the index-policy threshold pair");
    add_common(calib);
    CLI::App* sim = app.add_subcommand("simulate", "Run replicated slot-level simulations");
    add_common(sim);
    CLI::App* sweep = app.add_subcommand("sweep", "Run an experiment over a parameter axis");
    add_common(sweep);
    CLI::App* bounds = app.add_subcommand("bounds", "Evaluate the analytic bound quantities");
    add_common(bounds);
    CLI::App* verify = app.add_subcommand("verify-index",
                                          "Compare the closed-form index with the subsidy oracle");
    add_common(verify);
    verify->add_option("--truncation", truncation, "Oracle belief-space truncation");
    verify->add_option("--tolerance", tolerance, "Oracle bisection tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = load_config(o);
        if (calib->parsed()) return cmd_calibrate(cfg);
        if (sim->parsed()) return cmd_simulate(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (bounds->parsed()) return cmd_bounds(cfg);
        if (verify->parsed()) return cmd_verify_index(cfg, truncation, tolerance);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
