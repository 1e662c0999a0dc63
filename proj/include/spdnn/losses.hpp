#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "errors.hpp"

namespace spdnn {

enum class LossKind { squared, l1, huber, logistic };

/**
 * Loss on (prediction, response) pairs, ell(yhat, y).
 *
 *   squared   (yhat - y)^2                         not Lipschitz
 *   l1        |yhat - y|                           K = 1
 *   huber     u^2/2 for |u| <= delta,              K = delta
 *             delta|u| - delta^2/2 beyond
 *   logistic  log(1 + exp(-y yhat)), y in {-1,+1}  K = 1
 *
 * Lipschitz constants are in the prediction argument, uniformly over y.
 */
struct LossSpec {
    LossKind kind = LossKind::squared;
    double delta = 1.0; // huber threshold, > 0

    static LossSpec squared() { return {LossKind::squared, 1.0}; }
    static LossSpec l1() { return {LossKind::l1, 1.0}; }
    static LossSpec huber(double delta) {
        if (!(delta > 0.0)) throw invalid_argument_error("huber delta must be > 0");
        return {LossKind::huber, delta};
    }
    static LossSpec logistic() { return {LossKind::logistic, 1.0}; }
};

inline const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::squared: return "squared";
        case LossKind::l1: return "l1";
        case LossKind::huber: return "huber";
        case LossKind::logistic: return "logistic";
    }
    return "?";
}

inline LossSpec loss_by_name(const std::string& name, double delta = 1.0) {
    if (name == "squared") return LossSpec::squared();
    if (name == "l1") return LossSpec::l1();
    if (name == "huber") return LossSpec::huber(delta);
    if (name == "logistic") return LossSpec::logistic();
    throw invalid_argument_error("unknown loss: " + name);
}

inline void check_logistic_label(double y) {
    if (y != 1.0 && y != -1.0)
        throw invalid_argument_error("logistic loss requires labels in {-1,+1}");
}

inline double loss_eval(const LossSpec& spec, double y_pred, double y) {
    switch (spec.kind) {
        case LossKind::squared: {
            double u = y_pred - y;
            return u * u;
        }
        case LossKind::l1:
            return std::fabs(y_pred - y);
        case LossKind::huber: {
            double u = y_pred - y, a = std::fabs(u), d = spec.delta;
            return a <= d ? 0.5 * u * u : d * a - 0.5 * d * d;
        }
        case LossKind::logistic: {
            check_logistic_label(y);
            double u = y * y_pred;
            // log(1+exp(-u)) without overflow for large |u|
            return u > 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
        }
    }
    throw invalid_argument_error("loss_eval: bad kind");
}

/// d loss / d y_pred.  Kinks: l1 uses 0 at u = 0; huber is C1 so the branches agree.
inline double loss_grad(const LossSpec& spec, double y_pred, double y) {
    switch (spec.kind) {
        case LossKind::squared:
            return 2.0 * (y_pred - y);
        case LossKind::l1: {
            double u = y_pred - y;
            return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
        }
        case LossKind::huber: {
            double u = y_pred - y, d = spec.delta;
            if (std::fabs(u) <= d) return u;
            return u > 0.0 ? d : -d;
        }
        case LossKind::logistic: {
            check_logistic_label(y);
            double u = y * y_pred;
            // -y * sigmoid(-u), computed stably
            return u > 0.0 ? -y * std::exp(-u) / (1.0 + std::exp(-u))
                           : -y / (1.0 + std::exp(u));
        }
    }
    throw invalid_argument_error("loss_grad: bad kind");
}

/// Lipschitz constant in the prediction argument; empty for the squared loss.
inline std::optional<double> lipschitz_constant(const LossSpec& spec) {
    switch (spec.kind) {
        case LossKind::squared: return std::nullopt;
        case LossKind::l1: return 1.0;
        case LossKind::huber: return spec.delta;
        case LossKind::logistic: return 1.0;
    }
    return std::nullopt;
}

} // namespace spdnn
