#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "network.hpp"
#include "penalty.hpp"
#include "rng.hpp"

namespace spdnn {

struct CheckResult {
    std::string name;
    bool pass = true;
    double worst = 0.0; // worst deviation observed
    std::size_t cases = 0;
    std::string detail;
};

/**
 * Backprop against central finite differences on random small networks
 * (up to 3 hidden layers, width up to 8), cycling relu/tanh/sigmoid.
 * For relu instances the draw is repeated until every preactivation is at
 * least 1e-2 from the kink so the difference quotient is valid.
 * Deviation per coordinate: |fd - bp| / max(1, |fd|, |bp|).
 */
inline CheckResult run_gradient_check(std::size_t instances = 100, std::uint64_t seed = 42) {
    CheckResult res{"gradient", true, 0.0, instances, ""};
    const char* acts[] = {"relu", "tanh", "sigmoid"};
    std::mt19937_64 g = make_stream(seed, 0);
    for (std::size_t inst = 0; inst < instances; ++inst) {
        std::string act = acts[inst % 3];
        for (int attempt = 0;; ++attempt) {
            auto d = static_cast<std::size_t>(1 + uniform01(g) * 3.999);
            auto depth = static_cast<std::size_t>(uniform01(g) * 3.999);
            auto width = static_cast<std::size_t>(1 + uniform01(g) * 7.999);
            Architecture arch = make_architecture(d, depth, width, act);
            std::vector<double> theta(arch.params());
            for (double& v : theta) v = uniform_in(g, -0.6, 0.6);
            NetworkParams params(arch, theta);

            std::size_t batch = 4 + (inst % 5);
            std::vector<std::vector<double>> xs(batch, std::vector<double>(d));
            std::vector<double> ys(batch);
            for (auto& x : xs)
                for (double& v : x) v = uniform_in(g, -1.0, 1.0);
            for (double& y : ys) y = uniform_in(g, -1.5, 1.5);

            if (act == std::string("relu")) {
                LayerParams lp = devectorize(params.theta, arch.widths);
                double closest = 1.0;
                for (const auto& x : xs) {
                    std::vector<double> a = x;
                    for (std::size_t j = 0; j + 1 < arch.widths.size(); ++j) {
                        std::vector<double> z = lp.biases[j];
                        for (std::size_t c = 0; c < lp.weights[j].cols; ++c)
                            for (std::size_t r = 0; r < lp.weights[j].rows; ++r)
                                z[r] += lp.weights[j](r, c) * a[c];
                        for (double v : z) closest = std::min(closest, std::fabs(v));
                        a = z;
                        if (j + 2 < arch.widths.size())
                            for (double& v : a) v = v > 0.0 ? v : 0.0;
                    }
                }
                if (closest < 1e-2 && attempt < 200) continue;
            }

            LossSpec loss = inst % 2 == 0 ? LossSpec::squared() : LossSpec::huber(1.0);
            std::vector<double> bp = grad(params, xs, ys, loss);
            double h = 1e-6;
            for (std::size_t k = 0; k < params.theta.size(); ++k) {
                NetworkParams pp = params, pm = params;
                pp.theta[k] += h;
                pm.theta[k] -= h;
                double up = 0.0, dn = 0.0;
                for (std::size_t i = 0; i < batch; ++i) {
                    up += loss_eval(loss, forward(pp, xs[i]), ys[i]);
                    dn += loss_eval(loss, forward(pm, xs[i]), ys[i]);
                }
                double fd = (up - dn) / (2.0 * h) / static_cast<double>(batch);
                double dev = std::fabs(fd - bp[k]) / std::max({1.0, std::fabs(fd), std::fabs(bp[k])});
                res.worst = std::max(res.worst, dev);
            }
            break;
        }
    }
    res.pass = res.worst < 1e-4;
    char buf[64];
    std::snprintf(buf, sizeof buf, "max deviation %.3g", res.worst);
    res.detail = buf;
    return res;
}

/// Conditions (i)-(ii) for every registered penalty kind on random (lambda, tau).
inline CheckResult run_penalty_check(std::size_t draws = 100, std::size_t grid = 1000,
                                     std::uint64_t seed = 43) {
    CheckResult res{"penalty", true, 0.0, 0, ""};
    PenaltyKind kinds[] = {PenaltyKind::clipped_l1, PenaltyKind::scad, PenaltyKind::mcp,
                           PenaltyKind::sel0};
    std::mt19937_64 g = make_stream(seed, 0);
    for (std::size_t i = 0; i < draws; ++i) {
        double lambda = uniform_in(g, 0.0, 5.0);
        double tau = uniform_in(g, 1e-3, 2.0);
        for (PenaltyKind k : kinds) {
            PenaltyConfig cfg;
            cfg.kind = k;
            cfg.lambda = lambda;
            cfg.tau = tau;
            ++res.cases;
            PenaltyReport rep = validate_penalty(cfg, grid);
            if (!rep.pass) {
                res.pass = false;
                res.detail = std::string(penalty_name(k)) + " failed: " + rep.message;
                return res;
            }
        }
    }
    res.detail = "all kinds satisfy (i)-(ii)";
    return res;
}

/**
 * Closed-form clipped-L1 prox against an independent grid search: a
 * 1e-3 coarse pass over the full bracket, then 1e-6 refinement windows
 * around the best five coarse points.  Reports the worst objective gap.
 */
inline CheckResult run_prox_check(std::size_t tuples = 10000, std::uint64_t seed = 44) {
    CheckResult res{"prox", true, 0.0, tuples, ""};
    std::mt19937_64 g = make_stream(seed, 0);
    for (std::size_t i = 0; i < tuples; ++i) {
        PenaltyConfig cfg;
        cfg.lambda = uniform_in(g, 0.0, 2.0);
        cfg.tau = uniform_in(g, 1e-3, 1.5);
        double eta = uniform_in(g, 1e-3, 1.0);
        double z = uniform_in(g, -2.0, 2.0);

        double x = prox(cfg, eta, z);
        double R = std::fabs(z) + cfg.tau + 1.0;

        // coarse pass, keeping the best few well-separated points
        const std::size_t keep = 5;
        double coarse = 1e-3;
        double cand[keep];
        double cand_obj[keep];
        std::size_t filled = 0;
        auto n_steps = static_cast<std::size_t>(std::floor(2.0 * R / coarse)) + 1;
        for (std::size_t s = 0; s <= n_steps; ++s) {
            double xx = -R + static_cast<double>(s) * coarse;
            double obj = prox_objective(cfg, eta, z, xx);
            if (filled < keep) {
                cand[filled] = xx;
                cand_obj[filled] = obj;
                ++filled;
            } else {
                std::size_t worst = 0;
                for (std::size_t kk = 1; kk < keep; ++kk)
                    if (cand_obj[kk] > cand_obj[worst]) worst = kk;
                if (obj < cand_obj[worst]) {
                    cand[worst] = xx;
                    cand_obj[worst] = obj;
                }
            }
        }
        double best_obj = cand_obj[0];
        for (std::size_t kk = 0; kk < filled; ++kk) {
            double lo = cand[kk] - 2.0 * coarse, hi = cand[kk] + 2.0 * coarse;
            double fine = prox_grid(cfg, eta, z, lo, hi, 1e-6);
            best_obj = std::min(best_obj, prox_objective(cfg, eta, z, fine));
        }

        double gap = prox_objective(cfg, eta, z, x) - best_obj;
        res.worst = std::max(res.worst, gap);
        if (gap >= 1e-9) {
            res.pass = false;
            char buf[96];
            std::snprintf(buf, sizeof buf, "objective gap %.3g at tuple %zu", gap, i);
            res.detail = buf;
            return res;
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max objective gap %.3g", res.worst);
    res.detail = buf;
    return res;
}

} // namespace spdnn
