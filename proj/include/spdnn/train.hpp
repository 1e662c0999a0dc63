#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "datagen.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "penalty.hpp"
#include "rng.hpp"
#include "theory.hpp"

namespace spdnn {

struct TrainConfig {
    std::size_t max_epochs = 200;
    std::size_t step_budget = 0;        // when nonzero, derive the epoch count from a
                                        // total gradient-step budget per restart so
                                        // optimization effort does not scale with n
    std::size_t batch_size = 64;
    double step_size = 0.05;
    double shrink = 0.5;                // backtracking factor, in (0,1)
    std::size_t projection_cadence = 1; // project every k minibatch steps
    double prune_warmup = 0.2;          // fraction of epochs before any sparsity projection
    double prune_taper = 0.4;           // fraction of epochs annealing the budget down to S
    double init_scale = 0.0;            // 0 selects per-layer 1/sqrt(fan_in)
    double tol = 0.0;                   // stop when the epoch improvement drops below; 0 disables
    std::size_t restarts = 1;           // best-of-R independent starts
    std::uint64_t seed = 0;

    void validate() const {
        if (max_epochs == 0) throw invalid_argument_error("train: max_epochs must be >= 1");
        if (batch_size == 0) throw invalid_argument_error("train: batch_size must be >= 1");
        if (!(step_size > 0.0)) throw invalid_argument_error("train: step_size must be > 0");
        if (!(shrink > 0.0 && shrink < 1.0))
            throw invalid_argument_error("train: shrink must be in (0,1)");
        if (projection_cadence == 0)
            throw invalid_argument_error("train: projection_cadence must be >= 1");
        if (restarts == 0) throw invalid_argument_error("train: restarts must be >= 1");
        if (init_scale < 0.0) throw invalid_argument_error("train: init_scale must be >= 0");
        if (tol < 0.0) throw invalid_argument_error("train: tol must be >= 0");
        if (!(prune_warmup >= 0.0 && prune_warmup < 1.0))
            throw invalid_argument_error("train: prune_warmup must be in [0,1)");
        if (!(prune_taper >= 0.0) || prune_warmup + prune_taper >= 1.0)
            throw invalid_argument_error("train: prune_warmup + prune_taper must be < 1");
    }
};

struct FitFlags {
    bool respects_bound = true;    // sup |theta_j| <= B
    bool respects_sparsity = true; // nonzero count <= S (always true when S absent)
    bool output_clamped = true;    // evaluations truncate to [-F, F]
};

struct FitResult {
    NetworkParams params;
    std::vector<double> objective;      // per epoch, current iterate
    std::vector<double> best_objective; // per epoch, best seen so far
    double final_objective = 0.0;       // risk for the constrained fit, composite for the penalized one
    double final_risk = 0.0;
    double final_penalty = 0.0;
    FitFlags flags;
    double seconds = 0.0;
    std::vector<std::string> warnings;
};

inline double empirical_risk(const NetworkParams& params, const Dataset& data,
                             const LossSpec& loss, std::optional<double> clamp = std::nullopt) {
    if (data.empty()) throw invalid_argument_error("empirical_risk: empty dataset");
    double total = 0.0;
    for (const auto& s : data) total += loss_eval(loss, forward(params, s.x, clamp), s.y);
    return total / static_cast<double>(data.size());
}

/// Uniform init on [-a_j, a_j] per layer, a_j = init_scale or 1/sqrt(fan_in).
inline std::vector<double> init_theta(const Architecture& arch, std::mt19937_64& g,
                                      double init_scale) {
    std::vector<double> theta(arch.params());
    std::size_t pos = 0;
    for (std::size_t j = 1; j < arch.widths.size(); ++j) {
        double a = init_scale > 0.0
                       ? init_scale
                       : 1.0 / std::sqrt(static_cast<double>(arch.widths[j - 1]));
        std::size_t block = arch.widths[j] * (arch.widths[j - 1] + 1);
        for (std::size_t k = 0; k < block; ++k) theta[pos++] = uniform_in(g, -a, a);
    }
    return theta;
}

/// Materializes the penalty at a tuning point.  When the tau ceiling
/// underflows double precision it is clamped to the smallest positive
/// normal and a warning is recorded.
inline PenaltyConfig penalty_from_tuning(const SpTuning& tuning,
                                         std::vector<std::string>* warnings,
                                         PenaltyKind kind = PenaltyKind::clipped_l1) {
    PenaltyConfig pen;
    pen.kind = kind;
    pen.lambda = tuning.lambda;
    double log_min = std::log(std::numeric_limits<double>::min());
    if (tuning.log_tau_max < log_min) {
        pen.tau = std::numeric_limits<double>::min();
        if (warnings)
            warnings->push_back("tau ceiling underflows double precision; clamped to smallest normal");
    } else {
        pen.tau = std::exp(tuning.log_tau_max);
    }
    return pen;
}

namespace detail {

inline std::size_t epochs_for(const TrainConfig& cfg, std::size_t n) {
    if (cfg.step_budget == 0) return cfg.max_epochs;
    std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    std::size_t e = (cfg.step_budget + per_epoch - 1) / per_epoch;
    return std::max<std::size_t>(1, e);
}

struct Batcher {
    std::vector<std::size_t> order;
    explicit Batcher(std::size_t n) : order(n) { std::iota(order.begin(), order.end(), std::size_t{0}); }
    void shuffle(std::mt19937_64& g) { std::shuffle(order.begin(), order.end(), g); }
};

inline void gather(const Dataset& data, const std::vector<std::size_t>& order, std::size_t from,
                   std::size_t to, std::vector<std::vector<double>>& xs, std::vector<double>& ys) {
    xs.clear();
    ys.clear();
    for (std::size_t i = from; i < to; ++i) {
        xs.push_back(data[order[i]].x);
        ys.push_back(data[order[i]].y);
    }
}

} // namespace detail

/**
 * Constrained estimator: projected minibatch gradient descent with an
 * annealed sparsity budget.  Gradient steps on the empirical risk;
 * hard-thresholding projection every projection_cadence steps, onto a
 * budget that stays at the full parameter count for a warmup fraction of
 * the epochs, then tapers cubically down to S, then stays at S.  One-shot
 * thresholding of either a random initialization or a trained dense
 * iterate freezes the network (dead units under a kinked activation), so
 * the taper is what lets mass migrate onto a support of size S that can
 * then be fine-tuned.  The epoch-end probe always projects fully; the best
 * feasible probe is returned.  With multiple restarts the best final
 * objective wins.
 */
inline FitResult train_npdnn(const Dataset& data, const Schedule& sch, const LossSpec& loss,
                             const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw invalid_argument_error("train_npdnn: empty dataset");
    auto t_start = std::chrono::steady_clock::now();

    Architecture arch = make_architecture(data.front().x.size(), sch.depth, sch.width);
    ClassConstraints constraints{sch.width, sch.weight_bound, sch.output_bound, sch.sparsity};
    std::optional<double> clamp = sch.output_bound;

    std::size_t P = arch.params();
    std::size_t S = sch.sparsity;
    std::size_t n_epochs = detail::epochs_for(cfg, data.size());
    auto warm = static_cast<std::size_t>(cfg.prune_warmup * static_cast<double>(n_epochs));
    auto taper = static_cast<std::size_t>(cfg.prune_taper * static_cast<double>(n_epochs));
    auto budget_at = [&](std::size_t epoch) -> std::optional<std::size_t> {
        if (S >= P) return S;
        if (epoch < warm) return std::nullopt;
        if (taper == 0 || epoch >= warm + taper) return S;
        double t = static_cast<double>(epoch - warm + 1) / static_cast<double>(taper);
        double keep = static_cast<double>(S) +
                      (static_cast<double>(P) - static_cast<double>(S)) * std::pow(1.0 - t, 3);
        auto k = static_cast<std::size_t>(std::llround(keep));
        return std::min(P, std::max(S, k));
    };

    FitResult best_run;
    bool have_run = false;

    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        std::mt19937_64 g = make_stream(cfg.seed, r);
        NetworkParams params(arch, init_theta(arch, g, cfg.init_scale));
        for (double& v : params.theta) v = std::clamp(v, -sch.weight_bound, sch.weight_bound);

        FitResult fit;
        NetworkParams best = project_class(params, constraints);
        double obj = empirical_risk(best, data, loss, clamp);
        double initial = obj;
        double best_obj = obj;
        fit.objective.push_back(obj);
        fit.best_objective.push_back(best_obj);

        detail::Batcher batcher(data.size());
        std::vector<std::vector<double>> xs;
        std::vector<double> ys;
        std::size_t steps = 0;

        for (std::size_t epoch = 0; epoch < n_epochs; ++epoch) {
            ClassConstraints step_set{sch.width, sch.weight_bound, sch.output_bound,
                                      budget_at(epoch)};
            batcher.shuffle(g);
            for (std::size_t from = 0; from < data.size(); from += cfg.batch_size) {
                std::size_t to = std::min(from + cfg.batch_size, data.size());
                detail::gather(data, batcher.order, from, to, xs, ys);
                std::vector<double> gr = grad(params, xs, ys, loss, clamp);
                for (std::size_t k = 0; k < params.theta.size(); ++k)
                    params.theta[k] -= cfg.step_size * gr[k];
                if (++steps % cfg.projection_cadence == 0)
                    params = project_class(params, step_set);
            }
            NetworkParams probe = project_class(params, constraints);
            double prev = obj;
            obj = empirical_risk(probe, data, loss, clamp);
            if (initial > 0.0 && obj > 1e6 * initial)
                throw divergence_error("train_npdnn: objective exceeded 1e6 x initial value",
                                       fit.objective);
            if (obj < best_obj) {
                best_obj = obj;
                best = probe;
            }
            fit.objective.push_back(obj);
            fit.best_objective.push_back(best_obj);
            if (cfg.tol > 0.0 && std::fabs(prev - obj) <= cfg.tol) break;
        }

        fit.params = std::move(best);
        fit.final_objective = best_obj;
        fit.final_risk = best_obj;
        fit.final_penalty = 0.0;
        if (!have_run || fit.final_objective < best_run.final_objective) {
            best_run = std::move(fit);
            have_run = true;
        }
    }

    best_run.flags.respects_bound = sup_norm(best_run.params.theta) <= sch.weight_bound;
    best_run.flags.respects_sparsity = count_nonzero(best_run.params.theta) <= sch.sparsity;
    best_run.flags.output_clamped = true;
    best_run.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return best_run;
}

/**
 * Penalized estimator: full-batch proximal gradient.  Each iteration takes
 * a gradient step on the empirical risk and the coordinatewise penalty
 * prox, with the step size backtracked (factor `shrink`) until the
 * composite objective does not increase; more than 60 reductions in one
 * iteration is an error.  The trajectory is non-increasing up to 1e-12.
 */
inline FitResult train_spdnn(const Dataset& data, const Schedule& sch, const LossSpec& loss,
                             const PenaltyConfig& pen, const TrainConfig& cfg) {
    cfg.validate();
    pen.validate();
    if (data.empty()) throw invalid_argument_error("train_spdnn: empty dataset");
    auto t_start = std::chrono::steady_clock::now();

    Architecture arch = make_architecture(data.front().x.size(), sch.depth, sch.width);
    std::optional<double> clamp = sch.output_bound;

    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    xs.reserve(data.size());
    ys.reserve(data.size());
    for (const auto& s : data) {
        xs.push_back(s.x);
        ys.push_back(s.y);
    }

    auto composite = [&](const NetworkParams& p) {
        return empirical_risk(p, data, loss, clamp) + penalty_total(pen, p.theta);
    };
    std::size_t n_iters = cfg.step_budget > 0 ? cfg.step_budget : cfg.max_epochs;

    FitResult best_run;
    bool have_run = false;

    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        std::mt19937_64 g = make_stream(cfg.seed, r);
        NetworkParams params(arch, init_theta(arch, g, cfg.init_scale));
        for (double& v : params.theta) v = std::clamp(v, -sch.weight_bound, sch.weight_bound);

        FitResult fit;
        double obj = composite(params);
        double initial = obj;
        double best_obj = obj;
        fit.objective.push_back(obj);
        fit.best_objective.push_back(best_obj);
        double eta = cfg.step_size;

        for (std::size_t epoch = 0; epoch < n_iters; ++epoch) {
            std::vector<double> gr = grad(params, xs, ys, loss, clamp);
            NetworkParams cand = params;
            double cand_obj = 0.0;
            std::size_t reductions = 0;
            for (;;) {
                for (std::size_t k = 0; k < params.theta.size(); ++k)
                    cand.theta[k] = std::clamp(prox(pen, eta, params.theta[k] - eta * gr[k]),
                                               -sch.weight_bound, sch.weight_bound);
                cand_obj = composite(cand);
                if (cand_obj <= obj + 1e-12) break;
                eta *= cfg.shrink;
                if (++reductions > 60)
                    throw runtime_failure("train_spdnn: backtracking exhausted after 60 reductions");
            }
            double prev = obj;
            params = std::move(cand);
            obj = cand_obj;
            if (initial > 0.0 && obj > 1e6 * initial)
                throw divergence_error("train_spdnn: objective exceeded 1e6 x initial value",
                                       fit.objective);
            best_obj = std::min(best_obj, obj);
            fit.objective.push_back(obj);
            fit.best_objective.push_back(best_obj);
            if (cfg.tol > 0.0 && prev - obj <= cfg.tol) break;
        }

        fit.params = std::move(params);
        fit.final_objective = obj;
        fit.final_risk = empirical_risk(fit.params, data, loss, clamp);
        fit.final_penalty = penalty_total(pen, fit.params.theta);
        if (!have_run || fit.final_objective < best_run.final_objective) {
            best_run = std::move(fit);
            have_run = true;
        }
    }

    best_run.flags.respects_bound = sup_norm(best_run.params.theta) <= sch.weight_bound;
    best_run.flags.respects_sparsity = true;
    best_run.flags.output_clamped = true;
    best_run.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return best_run;
}

} // namespace spdnn
