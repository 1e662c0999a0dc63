#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace spdnn {

enum class PenaltyKind { clipped_l1, scad, mcp, sel0 };

/**
 * Coordinatewise penalty pi on |theta_j| satisfying
 *   (i)  pi(0) = 0 and pi non-decreasing on [0, inf),
 *   (ii) pi(x) = lambda exactly for x > tau.
 *
 * clipped_l1 is lambda * min(x/tau, 1).  The scad/mcp profiles are the
 * standard ones with the saturation knot placed at tau and the saturated
 * value normalized to lambda; sel0 saturates only asymptotically and is
 * capped at lambda from tau on.  All four pass validate_penalty.
 */
struct PenaltyConfig {
    PenaltyKind kind = PenaltyKind::clipped_l1;
    double lambda = 0.0; // >= 0
    double tau = 1.0;    // > 0
    double scad_a = 3.7; // > 2
    double mcp_gamma = 3.0; // > 1
    double sel0_shape = 0.1; // > 0, scale of the log form relative to tau

    void validate() const {
        if (!(lambda >= 0.0)) throw invalid_argument_error("penalty: lambda must be >= 0");
        if (!(tau > 0.0)) throw invalid_argument_error("penalty: tau must be > 0");
        if (kind == PenaltyKind::scad && !(scad_a > 2.0))
            throw invalid_argument_error("penalty: scad shape must be > 2");
        if (kind == PenaltyKind::mcp && !(mcp_gamma > 1.0))
            throw invalid_argument_error("penalty: mcp shape must be > 1");
        if (kind == PenaltyKind::sel0 && !(sel0_shape > 0.0))
            throw invalid_argument_error("penalty: sel0 shape must be > 0");
    }
};

inline const char* penalty_name(PenaltyKind k) {
    switch (k) {
        case PenaltyKind::clipped_l1: return "clipped_l1";
        case PenaltyKind::scad: return "scad";
        case PenaltyKind::mcp: return "mcp";
        case PenaltyKind::sel0: return "sel0";
    }
    return "?";
}

inline PenaltyKind penalty_by_name(const std::string& name) {
    if (name == "clipped_l1") return PenaltyKind::clipped_l1;
    if (name == "scad") return PenaltyKind::scad;
    if (name == "mcp") return PenaltyKind::mcp;
    if (name == "sel0") return PenaltyKind::sel0;
    throw invalid_argument_error("unknown penalty: " + name);
}

/// pi(x) for x >= 0; negative x is an error (callers pass |theta_j|).
inline double pi_eval(const PenaltyConfig& cfg, double x) {
    cfg.validate();
    if (x < 0.0) throw invalid_argument_error("pi_eval: argument must be >= 0");
    if (x >= cfg.tau) return cfg.lambda;
    switch (cfg.kind) {
        case PenaltyKind::clipped_l1:
            return cfg.lambda * x / cfg.tau;
        case PenaltyKind::scad: {
            // standard profile with knots (l0, a*l0), a*l0 = tau, value at tau = l0^2 (a+1)/2
            double a = cfg.scad_a, l0 = cfg.tau / a;
            double cap = l0 * l0 * (a + 1.0) / 2.0;
            double v = x <= l0 ? l0 * x : (2.0 * a * l0 * x - x * x - l0 * l0) / (2.0 * (a - 1.0));
            return cfg.lambda * v / cap;
        }
        case PenaltyKind::mcp: {
            double g = cfg.mcp_gamma, l0 = cfg.tau / g;
            double cap = g * l0 * l0 / 2.0;
            double v = l0 * x - x * x / (2.0 * g);
            return cfg.lambda * v / cap;
        }
        case PenaltyKind::sel0: {
            double s = cfg.sel0_shape * cfg.tau;
            auto form = [s](double t) { return std::log1p(t / (t + s)); };
            return cfg.lambda * std::min(form(x) / form(cfg.tau), 1.0);
        }
    }
    throw invalid_argument_error("pi_eval: bad kind");
}

/// J(theta) = sum_j pi(|theta_j|)
inline double penalty_total(const PenaltyConfig& cfg, const std::vector<double>& theta) {
    double total = 0.0;
    for (double v : theta) total += pi_eval(cfg, std::fabs(v));
    return total;
}

struct PenaltyReport {
    bool pass = true;
    bool zero_at_origin = true;  // condition (i), pi(0) = 0
    bool non_decreasing = true;  // condition (i)
    bool constant_beyond_tau = true; // condition (ii)
    std::string message;
};

/**
 * Checks conditions (i)-(ii) for an arbitrary penalty function on an evenly
 * spaced grid over [0, 4*tau].  Saturation beyond tau is checked to
 * 1e-12 * max(1, lambda).
 */
template <typename Fn>
PenaltyReport validate_penalty_fn(Fn&& fn, double lambda, double tau,
                                  std::size_t grid_size = 1000) {
    if (!(tau > 0.0)) throw invalid_argument_error("validate_penalty: tau must be > 0");
    if (grid_size < 8) throw invalid_argument_error("validate_penalty: grid too small");
    PenaltyReport rep;
    double tol = 1e-12 * std::max(1.0, std::fabs(lambda));
    if (std::fabs(fn(0.0)) > tol) {
        rep.zero_at_origin = false;
        rep.message += "pi(0) != 0; ";
    }
    double prev = fn(0.0);
    for (std::size_t i = 1; i < grid_size; ++i) {
        double x = 4.0 * tau * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        double v = fn(x);
        if (v < prev - tol) {
            rep.non_decreasing = false;
            rep.message += "decreasing near x=" + std::to_string(x) + "; ";
            break;
        }
        prev = v;
    }
    for (std::size_t i = 0; i < grid_size; ++i) {
        double x = tau * (1.0 + 1e-9) +
                   3.0 * tau * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        if (std::fabs(fn(x) - lambda) > tol) {
            rep.constant_beyond_tau = false;
            rep.message += "pi(x) != lambda at x=" + std::to_string(x) + "; ";
            break;
        }
    }
    rep.pass = rep.zero_at_origin && rep.non_decreasing && rep.constant_beyond_tau;
    if (rep.pass) rep.message = "ok";
    return rep;
}

inline PenaltyReport validate_penalty(const PenaltyConfig& cfg, std::size_t grid_size = 1000) {
    cfg.validate();
    return validate_penalty_fn([&cfg](double x) { return pi_eval(cfg, x); }, cfg.lambda,
                               cfg.tau, grid_size);
}

/// (x - z)^2 / (2 eta) + pi(|x|)
inline double prox_objective(const PenaltyConfig& cfg, double eta, double z, double x) {
    double d = x - z;
    return d * d / (2.0 * eta) + pi_eval(cfg, std::fabs(x));
}

/**
 * prox_{eta pi}(z) = argmin_x (x-z)^2/(2 eta) + pi(|x|), closed form for
 * clipped_l1.  Candidates: the soft threshold by eta*lambda/tau clamped to
 * [-tau, tau], z itself when |z| > tau, and the boundary sign(z)*tau; the
 * objective minimizer wins, ties toward smaller |x|.  Other kinds have no
 * closed form here and throw; see prox_grid.
 */
inline double prox(const PenaltyConfig& cfg, double eta, double z) {
    cfg.validate();
    if (!(eta > 0.0)) throw invalid_argument_error("prox: eta must be > 0");
    if (cfg.kind != PenaltyKind::clipped_l1)
        throw invalid_argument_error("prox: closed form available only for clipped_l1");

    double sgn = z < 0.0 ? -1.0 : 1.0;
    double az = std::fabs(z);
    double shift = eta * cfg.lambda / cfg.tau;
    double soft = std::max(az - shift, 0.0);
    std::vector<double> cands;
    cands.push_back(sgn * std::min(soft, cfg.tau));
    if (az > cfg.tau) cands.push_back(z);
    cands.push_back(sgn * cfg.tau);

    double best = cands.front();
    double best_obj = prox_objective(cfg, eta, z, best);
    for (std::size_t i = 1; i < cands.size(); ++i) {
        double obj = prox_objective(cfg, eta, z, cands[i]);
        if (obj < best_obj ||
            (obj == best_obj && std::fabs(cands[i]) < std::fabs(best))) {
            best = cands[i];
            best_obj = obj;
        }
    }
    return best;
}

/// Brute-force prox over an evenly stepped grid; works for every kind.
inline double prox_grid(const PenaltyConfig& cfg, double eta, double z, double lo, double hi,
                        double step) {
    if (!(step > 0.0) || !(hi > lo)) throw invalid_argument_error("prox_grid: bad grid");
    auto n = static_cast<std::size_t>(std::floor((hi - lo) / step)) + 1;
    double best = lo, best_obj = prox_objective(cfg, eta, z, lo);
    for (std::size_t i = 1; i < n; ++i) {
        double x = lo + static_cast<double>(i) * step;
        double obj = prox_objective(cfg, eta, z, x);
        if (obj < best_obj || (obj == best_obj && std::fabs(x) < std::fabs(best))) {
            best = x;
            best_obj = obj;
        }
    }
    return best;
}

} // namespace spdnn
