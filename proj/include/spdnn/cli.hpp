#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "checkpoint.hpp"
#include "config.hpp"
#include "selfcheck.hpp"
#include "sweep.hpp"

namespace spdnn {

namespace clidetail {

inline nlohmann::json schedule_to_json(const SweepConfig& cfg, std::uint64_t n,
                                       const Schedule& sch) {
    nlohmann::json j;
    j["n"] = n;
    j["structure"] = dependence_name(cfg.structure.kind);
    if (cfg.structure.rho > 0.0) j["rho"] = cfg.structure.rho;
    j["phi_n"] = sch.phi;
    j["depth_L"] = sch.depth;
    j["width_N"] = sch.width;
    j["sparsity_S"] = sch.sparsity;
    j["weight_bound_B"] = sch.weight_bound;
    j["output_bound_F"] = sch.output_bound;
    if (lipschitz_constant(cfg.loss)) {
        SpTuning t = sp_tuning(cfg.theory, sch, cfg.structure, n);
        j["lambda_n"] = t.lambda;
        j["log_tau_max"] = t.log_tau_max;
    }
    RatePrediction rate =
        predicted_rate(cfg.theory.kappa, cfg.smoothness, cfg.model.input_dim(), cfg.structure);
    j["rate_exponent"] = rate.n_exponent;
    j["rate_log_power"] = rate.log_power;
    return j;
}

inline void print_schedule_block(std::ostream& os, const nlohmann::json& j) {
    const char* order[] = {"n",          "structure",      "rho",        "phi_n",
                           "depth_L",    "width_N",        "sparsity_S", "weight_bound_B",
                           "output_bound_F", "lambda_n",   "log_tau_max", "rate_exponent",
                           "rate_log_power"};
    for (const char* key : order) {
        if (!j.contains(key)) continue;
        os << key << ": ";
        const auto& v = j.at(key);
        if (v.is_string())
            os << v.get<std::string>();
        else if (v.is_number_unsigned())
            os << v.get<std::uint64_t>();
        else {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.12g", v.get<double>());
            os << buf;
        }
        os << "\n";
    }
}

inline void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw runtime_failure("cannot create output directory " + out);
}

struct CellSeeds {
    std::uint64_t data, train, eval;
};

/// Seed derivation shared with the sweep (this is sweep cell 0).
inline CellSeeds single_run_seeds(std::uint64_t master) {
    std::uint64_t cell = derive_seed(master, 0);
    return {derive_seed(cell, 0), derive_seed(cell, 1), derive_seed(cell, 2)};
}

inline int cmd_schedule(const std::string& config_path, std::uint64_t n, bool as_json,
                        const std::string& out) {
    SweepConfig cfg = load_config(config_path);
    Schedule sch = schedule_for(cfg, n);
    nlohmann::json j = schedule_to_json(cfg, n, sch);
    if (as_json)
        std::cout << j.dump(2) << "\n";
    else
        print_schedule_block(std::cout, j);
    if (!out.empty()) {
        ensure_out_dir(out);
        std::ofstream os(out + "/schedule.json");
        if (!os) throw runtime_failure("cannot write schedule.json");
        os << j.dump(2) << "\n";
    }
    return 0;
}

inline int cmd_simulate(const std::string& config_path, std::uint64_t n, const std::string& out,
                        std::uint64_t seed_override, bool have_seed) {
    SweepConfig cfg = load_config(config_path);
    if (have_seed) cfg.master_seed = seed_override;
    ensure_out_dir(out);
    CellSeeds seeds = single_run_seeds(cfg.master_seed);
    Dataset data = cfg.model.simulate(n, seeds.data);
    dump_dataset_csv(out + "/dataset.csv", data);
    std::cout << "wrote " << out << "/dataset.csv (" << data.size() << " records, "
              << (data.empty() ? 0 : data.front().x.size()) << " features)\n";
    return 0;
}

inline int cmd_train(const std::string& config_path, std::uint64_t n, const std::string& out,
                     std::uint64_t seed_override, bool have_seed) {
    SweepConfig cfg = load_config(config_path);
    if (have_seed) cfg.master_seed = seed_override;
    ensure_out_dir(out);
    CellSeeds seeds = single_run_seeds(cfg.master_seed);

    Dataset data = cfg.model.simulate(n, seeds.data);
    Schedule sch = schedule_for(cfg, n);
    TrainConfig tc = cfg.train;
    tc.seed = seeds.train;

    FitResult fit;
    nlohmann::json meta;
    meta["loss"] = loss_name(cfg.loss.kind);
    if (cfg.loss.kind == LossKind::huber) meta["delta"] = cfg.loss.delta;
    meta["n"] = n;
    meta["seed"] = cfg.master_seed;
    if (cfg.estimator == EstimatorKind::npdnn) {
        meta["estimator"] = "npdnn";
        fit = train_npdnn(data, sch, cfg.loss, tc);
    } else {
        meta["estimator"] = "spdnn";
        SpTuning tuning = sp_tuning(cfg.theory, sch, cfg.structure, n);
        std::vector<std::string> warnings;
        PenaltyConfig pen = penalty_from_tuning(tuning, &warnings, cfg.penalty_kind);
        pen.lambda *= cfg.lambda_scale;
        meta["lambda"] = pen.lambda;
        meta["tau"] = pen.tau;
        fit = train_spdnn(data, sch, cfg.loss, pen, tc);
        fit.warnings.insert(fit.warnings.end(), warnings.begin(), warnings.end());
    }
    meta["epochs_run"] = fit.objective.size() - 1;
    meta["final_risk"] = fit.final_risk;

    Checkpoint ck;
    ck.params = fit.params;
    ck.constraints = ClassConstraints{sch.width, sch.weight_bound, sch.output_bound,
                                      cfg.estimator == EstimatorKind::npdnn
                                          ? std::optional<std::size_t>(sch.sparsity)
                                          : std::nullopt};
    ck.metadata = meta.dump();
    save_checkpoint(out + "/model.ckpt", ck);

    ExcessRisk er = estimate_excess_risk(fit.params, cfg.model, cfg.loss, cfg.mc_size,
                                         seeds.eval, sch.output_bound);

    nlohmann::json metrics;
    metrics["n"] = n;
    metrics["phi_n"] = sch.phi;
    metrics["schedule"] = schedule_to_json(cfg, n, sch);
    metrics["final_risk"] = fit.final_risk;
    metrics["final_penalty"] = fit.final_penalty;
    metrics["final_objective"] = fit.final_objective;
    metrics["respects_bound"] = fit.flags.respects_bound;
    metrics["respects_sparsity"] = fit.flags.respects_sparsity;
    metrics["output_clamped"] = fit.flags.output_clamped;
    metrics["train_seconds"] = fit.seconds;
    metrics["excess_risk"] = er.estimate;
    metrics["excess_risk_se"] = er.se;
    metrics["warnings"] = fit.warnings;
    {
        std::ofstream os(out + "/metrics.json");
        if (!os) throw runtime_failure("cannot write metrics.json");
        os << metrics.dump(2) << "\n";
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "final_risk=%.6g excess=%.6g (se %.2g) in %.2fs\n",
                  fit.final_risk, er.estimate, er.se, fit.seconds);
    std::cout << "wrote " << out << "/model.ckpt and metrics.json\n" << buf;
    return 0;
}

inline int cmd_sweep(const std::string& config_path, const std::string& out, std::size_t threads,
                     bool have_threads, std::uint64_t seed_override, bool have_seed,
                     bool synthetic) {
    SweepConfig cfg = load_config(config_path);
    if (have_seed) cfg.master_seed = seed_override;
    if (have_threads) cfg.threads = threads;
    if (synthetic) cfg.synthetic = true;
    ensure_out_dir(out);
    SweepResult res = run_sweep(cfg);
    write_sweep_csv(out + "/sweep.csv", res, cfg.record_timing);
    write_sweep_summary(out + "/summary.txt", cfg, res);
    write_sweep_summary(std::cout, cfg, res);
    std::cout << "wrote " << out << "/sweep.csv and summary.txt\n";
    return 0;
}

inline int cmd_validate(bool quick) {
    CheckResult checks[] = {
        run_gradient_check(quick ? 25 : 100),
        run_penalty_check(quick ? 25 : 100),
        run_prox_check(quick ? 1000 : 10000),
    };
    bool all = true;
    for (const auto& c : checks) {
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << " ("
                  << c.cases << " cases)\n";
        all = all && c.pass;
    }
    return all ? 0 : 2;
}

} // namespace clidetail

/// Entry point behind the binary; returns the process exit code.
/// 0 success, 1 usage or configuration error, 2 runtime failure.
inline int cli_run(std::vector<std::string> args) {
    CLI::App app{"Sparse-penalized deep network estimators with dependence-aware schedules"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t n = 0, seed = 0;
    std::size_t threads = 1;
    bool as_json = false, synthetic = false, quick = false;

    auto* sc_schedule = app.add_subcommand("schedule", "Print the architecture schedule and predicted rate at n");
    sc_schedule->add_option("--config", config_path, "configuration file")->required();
    sc_schedule->add_option("--n", n, "sample size")->required();
    sc_schedule->add_flag("--json", as_json, "print JSON instead of the text block");
    sc_schedule->add_option("--out", out_dir, "directory for schedule.json");

    auto* sc_simulate = app.add_subcommand("simulate", "Simulate a dataset and write dataset.csv");
    sc_simulate->add_option("--config", config_path, "configuration file")->required();
    sc_simulate->add_option("--n", n, "sample size")->required();
    sc_simulate->add_option("--out", out_dir, "output directory")->required();
    auto* sim_seed = sc_simulate->add_option("--seed", seed, "master seed override");

    auto* sc_train = app.add_subcommand("train", "Fit one model at n; write model.ckpt and metrics.json");
    sc_train->add_option("--config", config_path, "configuration file")->required();
    sc_train->add_option("--n", n, "sample size")->required();
    sc_train->add_option("--out", out_dir, "output directory")->required();
    auto* train_seed = sc_train->add_option("--seed", seed, "master seed override");

    auto* sc_sweep = app.add_subcommand("sweep", "Run the Monte-Carlo rate sweep; write sweep.csv and summary.txt");
    sc_sweep->add_option("--config", config_path, "configuration file")->required();
    sc_sweep->add_option("--out", out_dir, "output directory")->required();
    auto* sweep_threads = sc_sweep->add_option("--threads", threads, "worker threads");
    auto* sweep_seed = sc_sweep->add_option("--seed", seed, "master seed override");
    sc_sweep->add_flag("--synthetic", synthetic, "exact n^{-0.8} cells, no training");

    auto* sc_validate = app.add_subcommand("validate", "Run the gradient, penalty and prox property suites");
    sc_validate->add_flag("--quick", quick, "reduced case counts");

    std::vector<const char*> argv;
    argv.push_back("spdnn");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (sc_schedule->parsed())
            return clidetail::cmd_schedule(config_path, n, as_json, out_dir);
        if (sc_simulate->parsed())
            return clidetail::cmd_simulate(config_path, n, out_dir, seed, sim_seed->count() > 0);
        if (sc_train->parsed())
            return clidetail::cmd_train(config_path, n, out_dir, seed, train_seed->count() > 0);
        if (sc_sweep->parsed())
            return clidetail::cmd_sweep(config_path, out_dir, threads, sweep_threads->count() > 0,
                                        seed, sweep_seed->count() > 0, synthetic);
        if (sc_validate->parsed()) return clidetail::cmd_validate(quick);
    } catch (const invalid_argument_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}

} // namespace spdnn
