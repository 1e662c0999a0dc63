#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "datagen.hpp"
#include "errors.hpp"
#include "theory.hpp"
#include "train.hpp"

namespace spdnn {

// ---------- generative models ----------

enum class ModelKind { arx, iid_regression, classification };

/**
 * Generative model used for training data and for fresh evaluation draws.
 * target_value is the regression function the excess risk is measured
 * against: f for the autoregressive model, the target function for iid
 * regression, the logit for classification.
 */
struct DataModel {
    ModelKind kind = ModelKind::iid_regression;
    ArxModel arx;
    std::size_t burn_in = 1000;
    TargetSpec target;
    NoiseSpec noise = NoiseSpec::gaussian(1.0);

    std::size_t input_dim() const {
        return kind == ModelKind::arx ? arx.feature_dim() : target.dim();
    }

    Dataset simulate(std::size_t n, std::uint64_t seed) const {
        switch (kind) {
            case ModelKind::arx: return simulate_arx(arx, n, burn_in, seed);
            case ModelKind::iid_regression: return simulate_iid(target, noise, n, seed);
            case ModelKind::classification: return simulate_classification(target, n, seed);
        }
        throw invalid_argument_error("DataModel: bad kind");
    }

    double target_value(const std::vector<double>& x) const {
        if (kind == ModelKind::arx) {
            std::vector<double> y(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(arx.p));
            std::vector<double> z(x.begin() + static_cast<std::ptrdiff_t>(arx.p), x.end());
            return arx.f ? arx.f(y, z) : 0.0;
        }
        return target.fn(x);
    }
};

// ---------- excess-risk estimator ----------

struct ExcessRisk {
    double estimate = 0.0;
    double se = 0.0;
};

/**
 * Monte-Carlo excess risk against the model's regression function on M
 * fresh draws, evaluated pairwise on common draws so the difference is
 * exactly zero when the network realizes the target.  The standard error
 * comes from the paired differences.
 */
inline ExcessRisk estimate_excess_risk(const NetworkParams& params, const DataModel& model,
                                       const LossSpec& loss, std::size_t M, std::uint64_t seed,
                                       std::optional<double> clamp = std::nullopt) {
    if (M < 2) throw invalid_argument_error("estimate_excess_risk: M must be >= 2");
    Dataset eval = model.simulate(M, seed);
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (const auto& s : eval) {
        double dh = loss_eval(loss, forward(params, s.x, clamp), s.y);
        double dstar = loss_eval(loss, model.target_value(s.x), s.y);
        double d = dh - dstar;
        ++k;
        double delta = d - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (d - mean);
    }
    ExcessRisk out;
    out.estimate = mean;
    out.se = std::sqrt(m2 / static_cast<double>(M - 1) / static_cast<double>(M));
    return out;
}

// ---------- log-log slope ----------

enum class SlopeMode { raw_n, phi_n };

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double se = 0.0;
    std::size_t floored = 0;
};

/**
 * OLS of log(risk) on log(n) or log(phi(n)).  Needs at least 3 points.
 * Nonpositive risks are floored at their standard error when `ses` is
 * given (counted in the result); otherwise they are an error.
 */
inline SlopeFit fit_slope(const std::vector<std::uint64_t>& ns, std::vector<double> risks,
                          SlopeMode mode,
                          const DependenceStructure& st = DependenceStructure::iid(),
                          const std::vector<double>* ses = nullptr) {
    if (ns.size() != risks.size())
        throw invalid_argument_error("fit_slope: ns/risks length mismatch");
    if (ns.size() < 3) throw invalid_argument_error("fit_slope: need at least 3 points");
    SlopeFit fit;
    for (std::size_t i = 0; i < risks.size(); ++i) {
        if (risks[i] <= 0.0) {
            if (ses && i < ses->size() && (*ses)[i] > 0.0) {
                risks[i] = (*ses)[i];
                ++fit.floored;
            } else {
                throw invalid_argument_error("fit_slope: nonpositive risk without a positive SE");
            }
        }
    }
    std::size_t m = ns.size();
    std::vector<double> xs(m), ys(m);
    for (std::size_t i = 0; i < m; ++i) {
        double base = mode == SlopeMode::raw_n ? static_cast<double>(ns[i]) : phi_of_n(st, ns[i]);
        xs[i] = std::log(base);
        ys[i] = std::log(risks[i]);
    }
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= static_cast<double>(m);
    ybar /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    if (sxx == 0.0) throw invalid_argument_error("fit_slope: degenerate design (equal n)");
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        rss += r * r;
    }
    fit.se = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
    return fit;
}

// ---------- sweep ----------

enum class EstimatorKind { npdnn, spdnn };

/**
 * Monte-Carlo rate sweep: for each n in the grid and each replication,
 * simulate training data, build the architecture schedule, fit, and
 * estimate the excess risk on fresh draws.  All randomness derives from
 * (master_seed, cell index), so results do not depend on thread count.
 */
struct SweepConfig {
    DependenceStructure structure;
    DataModel model;
    LossSpec loss = LossSpec::huber(1.0);
    EstimatorKind estimator = EstimatorKind::npdnn;
    TheoryConfig theory;
    SmoothnessSpec smoothness = HolderSpec{1.0, 1.0};
    std::vector<std::uint64_t> grid;
    std::size_t replications = 1;
    std::size_t mc_size = 10000;
    std::uint64_t master_seed = 1;
    TrainConfig train;
    PenaltyKind penalty_kind = PenaltyKind::clipped_l1;
    double lambda_scale = 1.0; // multiplier on lambda_n for penalty-path studies
    bool record_timing = false;
    bool synthetic = false;     // excess risk replaced by n^{-0.8} exactly, no training
    SlopeMode slope_mode = SlopeMode::raw_n;
    std::size_t threads = 1;

    void validate() const {
        structure.validate();
        theory.validate();
        train.validate();
        if (grid.empty()) throw invalid_argument_error("sweep: empty n grid");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < 32) throw invalid_argument_error("sweep: grid entries must be >= 32");
            if (i > 0 && grid[i] <= grid[i - 1])
                throw invalid_argument_error("sweep: grid must be strictly increasing");
        }
        if (replications == 0) throw invalid_argument_error("sweep: replications must be >= 1");
        if (mc_size < 1000) throw invalid_argument_error("sweep: mc_size must be >= 1000");
        if (threads == 0) throw invalid_argument_error("sweep: threads must be >= 1");
        if (!(lambda_scale >= 0.0)) throw invalid_argument_error("sweep: lambda_scale must be >= 0");
    }
};

struct CellResult {
    std::uint64_t n = 0;
    double phi = 0.0;
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    double excess = 0.0;
    double se = 0.0;
    bool floored = false;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct Aggregate {
    std::uint64_t n = 0;
    std::size_t count = 0;
    double median = 0.0, iqr_lo = 0.0, iqr_hi = 0.0;
};

struct SweepResult {
    std::vector<CellResult> cells; // ordered by (n index, replication)
    std::vector<Aggregate> aggregates;
    std::optional<SlopeFit> slope;
    std::size_t failures = 0;
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw invalid_argument_error("quantile: empty sample");
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = static_cast<std::size_t>(std::ceil(pos));
    double w = pos - std::floor(pos);
    return (1.0 - w) * v[lo] + w * v[hi];
}

} // namespace detail

/// Builds the architecture schedule for the configured smoothness class.
inline Schedule schedule_for(const SweepConfig& cfg, std::uint64_t n) {
    if (std::holds_alternative<HolderSpec>(cfg.smoothness)) {
        const auto& h = std::get<HolderSpec>(cfg.smoothness);
        return npdnn_schedule_holder(cfg.theory, h.s, cfg.model.input_dim(), cfg.structure, n);
    }
    return npdnn_schedule_composition(cfg.theory, std::get<CompositionSpec>(cfg.smoothness),
                                      cfg.structure, n);
}

inline CellResult run_cell(const SweepConfig& cfg, std::size_t grid_index, std::size_t rep) {
    std::size_t cell_index = grid_index * cfg.replications + rep;
    std::uint64_t cell_seed = derive_seed(cfg.master_seed, cell_index);
    std::uint64_t n = cfg.grid[grid_index];

    CellResult cell;
    cell.n = n;
    cell.rep = rep;
    cell.seed = cell_seed;
    cell.phi = phi_of_n(cfg.structure, n);

    if (cfg.synthetic) {
        cell.excess = std::pow(static_cast<double>(n), -0.8);
        cell.se = 0.0;
        return cell;
    }

    try {
        Dataset data = cfg.model.simulate(n, derive_seed(cell_seed, 0));
        Schedule sch = schedule_for(cfg, n);
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(cell_seed, 1);

        FitResult fit;
        if (cfg.estimator == EstimatorKind::npdnn) {
            fit = train_npdnn(data, sch, cfg.loss, tc);
        } else {
            SpTuning tuning = sp_tuning(cfg.theory, sch, cfg.structure, n);
            std::vector<std::string> warnings;
            PenaltyConfig pen = penalty_from_tuning(tuning, &warnings, cfg.penalty_kind);
            pen.lambda *= cfg.lambda_scale;
            fit = train_spdnn(data, sch, cfg.loss, pen, tc);
        }
        cell.seconds = fit.seconds;

        ExcessRisk er = estimate_excess_risk(fit.params, cfg.model, cfg.loss, cfg.mc_size,
                                             derive_seed(cell_seed, 2), sch.output_bound);
        cell.excess = er.estimate;
        cell.se = er.se;
        if (cell.excess <= 0.0) {
            cell.floored = true;
            if (cell.se > 0.0) cell.excess = cell.se;
        }
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
    }
    return cell;
}

inline SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::size_t total = cfg.grid.size() * cfg.replications;
    SweepResult res;
    res.cells.resize(total);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= total) return;
            res.cells[c] = run_cell(cfg, c / cfg.replications, c % cfg.replications);
        }
    };
    std::size_t nthreads = std::min(cfg.threads, total);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const auto& c : res.cells)
        if (c.failed) ++res.failures;
    if (static_cast<double>(res.failures) > 0.2 * static_cast<double>(total))
        throw runtime_failure("sweep: more than 20% of cells failed (" +
                              std::to_string(res.failures) + "/" + std::to_string(total) + ")");

    std::vector<std::uint64_t> ns_with_data;
    std::vector<double> medians;
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        std::vector<double> vals;
        for (std::size_t r = 0; r < cfg.replications; ++r) {
            const auto& c = res.cells[i * cfg.replications + r];
            if (!c.failed) vals.push_back(c.excess);
        }
        if (vals.empty()) continue;
        Aggregate a;
        a.n = cfg.grid[i];
        a.count = vals.size();
        a.median = detail::quantile(vals, 0.5);
        a.iqr_lo = detail::quantile(vals, 0.25);
        a.iqr_hi = detail::quantile(vals, 0.75);
        res.aggregates.push_back(a);
        if (a.median > 0.0) {
            ns_with_data.push_back(a.n);
            medians.push_back(a.median);
        }
    }
    if (ns_with_data.size() >= 3)
        res.slope = fit_slope(ns_with_data, medians, cfg.slope_mode, cfg.structure);
    return res;
}

// ---------- report writers ----------

/// Exact schema: n,phi_n,rep,seed,excess_risk,se,floored,train_seconds.
/// Failed cells are not written.  The timing column is 0.000 unless
/// record_timing was set (wall-clock is not reproducible byte for byte).
inline void write_sweep_csv(std::ostream& os, const SweepResult& res, bool record_timing) {
    os << "n,phi_n,rep,seed,excess_risk,se,floored,train_seconds\n";
    char buf[160];
    for (const auto& c : res.cells) {
        if (c.failed) continue;
        std::snprintf(buf, sizeof buf, "%llu,%.12g,%zu,%llu,%.12g,%.12g,%d,%.3f\n",
                      static_cast<unsigned long long>(c.n), c.phi, c.rep,
                      static_cast<unsigned long long>(c.seed), c.excess, c.se,
                      c.floored ? 1 : 0, record_timing ? c.seconds : 0.0);
        os << buf;
    }
}

inline void write_sweep_csv(const std::string& path, const SweepResult& res, bool record_timing) {
    std::ofstream os(path);
    if (!os) throw runtime_failure("cannot open " + path + " for writing");
    write_sweep_csv(os, res, record_timing);
}

/// Human-readable aggregates plus the slope block and the predicted rate.
inline void write_sweep_summary(std::ostream& os, const SweepConfig& cfg, const SweepResult& res) {
    char buf[256];
    os << "estimator: " << (cfg.estimator == EstimatorKind::npdnn ? "npdnn" : "spdnn") << "\n";
    os << "structure: " << dependence_name(cfg.structure.kind);
    if (cfg.structure.rho > 0.0) os << " rho=" << cfg.structure.rho;
    os << "\n";
    os << "loss: " << loss_name(cfg.loss.kind) << "\n";
    os << "cells: " << res.cells.size() << " failures: " << res.failures << "\n";
    if (cfg.synthetic) os << "synthetic: true\n";
    os << "\nper-n aggregates\n";
    for (const auto& a : res.aggregates) {
        std::snprintf(buf, sizeof buf,
                      "n=%llu count=%zu median=%.6g iqr=[%.6g, %.6g]\n",
                      static_cast<unsigned long long>(a.n), a.count, a.median, a.iqr_lo, a.iqr_hi);
        os << buf;
    }
    os << "\nslope block\n";
    if (res.slope) {
        std::snprintf(buf, sizeof buf, "slope=%.9g se=%.6g intercept=%.6g mode=%s floored=%zu\n",
                      res.slope->slope, res.slope->se, res.slope->intercept,
                      cfg.slope_mode == SlopeMode::raw_n ? "raw_n" : "phi_n", res.slope->floored);
        os << buf;
    } else {
        os << "slope: not fitted (need >= 3 n values with positive medians)\n";
    }
    RatePrediction rate = predicted_rate(cfg.theory.kappa, cfg.smoothness, cfg.model.input_dim(),
                                         cfg.structure);
    std::snprintf(buf, sizeof buf, "predicted: n_exponent=%.9g log_power=%.4g\n", rate.n_exponent,
                  rate.log_power);
    os << buf;
    if (cfg.record_timing) {
        double total = 0.0;
        for (const auto& c : res.cells) total += c.seconds;
        std::snprintf(buf, sizeof buf, "train_seconds_total=%.3f\n", total);
        os << buf;
    }
}

inline void write_sweep_summary(const std::string& path, const SweepConfig& cfg,
                                const SweepResult& res) {
    std::ofstream os(path);
    if (!os) throw runtime_failure("cannot open " + path + " for writing");
    write_sweep_summary(os, cfg, res);
}

} // namespace spdnn
