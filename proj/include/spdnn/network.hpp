#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "activation.hpp"
#include "errors.hpp"
#include "losses.hpp"

namespace spdnn {

/// Dense matrix, column-major: entry (i,j) at data[i + j*rows].
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i + j * rows]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i + j * rows]; }
};

/// Layer widths p_0..p_{L+1} (input, L hidden, output).
using Widths = std::vector<std::size_t>;

/// Total parameter count: sum over layers of p_j * (p_{j-1} + 1).
inline std::size_t param_count(const Widths& widths) {
    if (widths.size() < 2)
        throw invalid_argument_error("param_count: need at least input and output widths");
    std::size_t total = 0;
    for (std::size_t j = 1; j < widths.size(); ++j) {
        if (widths[j] == 0 || widths[j - 1] == 0)
            throw invalid_argument_error("param_count: zero layer width");
        total += widths[j] * (widths[j - 1] + 1);
    }
    return total;
}

/**
 * Feedforward architecture for the estimator classes: input dimension
 * widths[0], depth() hidden layers, scalar output (widths.back() == 1).
 */
struct Architecture {
    Widths widths;
    std::string activation = "relu";

    Architecture() = default;
    Architecture(Widths w, std::string act = "relu")
        : widths(std::move(w)), activation(std::move(act)) {
        validate();
    }

    std::size_t depth() const { return widths.size() - 2; }
    std::size_t input_dim() const { return widths.front(); }
    std::size_t params() const { return param_count(widths); }

    void validate() const {
        if (widths.size() < 2)
            throw invalid_argument_error("architecture: need at least 2 widths");
        for (std::size_t w : widths)
            if (w == 0) throw invalid_argument_error("architecture: zero width layer");
        if (widths.back() != 1)
            throw invalid_argument_error("architecture: output width must be 1");
        activation_by_id(activation);
    }
};

/// Uniform architecture (d, N, ..., N, 1) with `depth` hidden layers of width N.
inline Architecture make_architecture(std::size_t input_dim, std::size_t depth,
                                      std::size_t width, std::string activation = "relu") {
    Widths w;
    w.push_back(input_dim);
    for (std::size_t i = 0; i < depth; ++i) w.push_back(width);
    w.push_back(1);
    return Architecture(std::move(w), std::move(activation));
}

/**
 * Flattens (W_1, b_1, ..., W_{L+1}, b_{L+1}) into a single vector,
 * each weight matrix in column-major order followed by its bias.
 */
inline std::vector<double> vectorize(const std::vector<Matrix>& weights,
                                     const std::vector<std::vector<double>>& biases) {
    if (weights.size() != biases.size())
        throw invalid_argument_error("vectorize: weight/bias layer count mismatch");
    std::vector<double> theta;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (biases[j].size() != weights[j].rows)
            throw invalid_argument_error("vectorize: bias length != matrix rows");
        theta.insert(theta.end(), weights[j].data.begin(), weights[j].data.end());
        theta.insert(theta.end(), biases[j].begin(), biases[j].end());
    }
    return theta;
}

struct LayerParams {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

/// Inverse of vectorize for the given layer widths.
inline LayerParams devectorize(const std::vector<double>& theta, const Widths& widths) {
    if (theta.size() != param_count(widths))
        throw invalid_argument_error("devectorize: theta length does not match widths");
    LayerParams out;
    std::size_t pos = 0;
    for (std::size_t j = 1; j < widths.size(); ++j) {
        Matrix W(widths[j], widths[j - 1]);
        std::copy(theta.begin() + pos, theta.begin() + pos + W.data.size(), W.data.begin());
        pos += W.data.size();
        std::vector<double> b(theta.begin() + pos, theta.begin() + pos + widths[j]);
        pos += widths[j];
        out.weights.push_back(std::move(W));
        out.biases.push_back(std::move(b));
    }
    return out;
}

/// Architecture plus its parameter vector in vectorization order.
struct NetworkParams {
    Architecture arch;
    std::vector<double> theta;

    NetworkParams() = default;
    NetworkParams(Architecture a, std::vector<double> t)
        : arch(std::move(a)), theta(std::move(t)) {
        if (theta.size() != arch.params())
            throw invalid_argument_error("network params: theta length does not match architecture");
    }
};

/// Membership constraints of the estimator class.
struct ClassConstraints {
    std::size_t max_width = 0;           // N, max hidden width
    double weight_bound = 1.0;           // B, sup norm bound on theta
    double output_bound = 1.0;           // F, output clamp
    std::optional<std::size_t> sparsity; // S, max nonzero count; empty = unconstrained
};

namespace detail {

inline void check_finite(const std::vector<double>& v, std::size_t layer) {
    for (double x : v)
        if (!std::isfinite(x))
            throw runtime_failure("non-finite value at layer " + std::to_string(layer));
}

/// z = W a + b
inline std::vector<double> affine(const Matrix& W, const std::vector<double>& b,
                                  const std::vector<double>& a) {
    std::vector<double> z(b);
    for (std::size_t j = 0; j < W.cols; ++j) {
        double aj = a[j];
        const double* col = W.data.data() + j * W.rows;
        for (std::size_t i = 0; i < W.rows; ++i) z[i] += col[i] * aj;
    }
    return z;
}

} // namespace detail

/**
 * Evaluates the network at x.  When clamp is given the output is truncated
 * to [-clamp, clamp].  Throws on dimension mismatch and on non-finite
 * intermediates (message names the layer).
 */
inline double forward(const NetworkParams& params, const std::vector<double>& x,
                      std::optional<double> clamp = std::nullopt) {
    const Widths& w = params.arch.widths;
    if (x.size() != w.front())
        throw invalid_argument_error("forward: input dimension mismatch");
    Activation act = activation_by_id(params.arch.activation);
    LayerParams lp = devectorize(params.theta, w);
    std::vector<double> a = x;
    std::size_t layers = w.size() - 1;
    for (std::size_t j = 0; j < layers; ++j) {
        std::vector<double> z = detail::affine(lp.weights[j], lp.biases[j], a);
        detail::check_finite(z, j + 1);
        if (j + 1 < layers)
            for (double& v : z) v = act.fn(v);
        a = std::move(z);
    }
    double out = a[0];
    if (clamp) out = std::clamp(out, -*clamp, *clamp);
    return out;
}

/**
 * Batch-averaged gradient of (1/m) sum_i ell(h(x_i), y_i) with respect to
 * theta, in vectorization order.  The clamp contributes gradient 0 where
 * the raw output falls outside [-clamp, clamp].
 */
inline std::vector<double> grad(const NetworkParams& params,
                                const std::vector<std::vector<double>>& xs,
                                const std::vector<double>& ys, const LossSpec& loss,
                                std::optional<double> clamp = std::nullopt) {
    if (xs.size() != ys.size())
        throw invalid_argument_error("grad: batch size mismatch");
    if (xs.empty()) throw invalid_argument_error("grad: empty batch");
    const Widths& w = params.arch.widths;
    Activation act = activation_by_id(params.arch.activation);
    LayerParams lp = devectorize(params.theta, w);
    std::size_t layers = w.size() - 1;

    // offsets of (W_j, b_j) blocks inside theta
    std::vector<std::size_t> w_off(layers), b_off(layers);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < layers; ++j) {
        w_off[j] = pos;
        pos += w[j + 1] * w[j];
        b_off[j] = pos;
        pos += w[j + 1];
    }

    std::vector<double> g(params.theta.size(), 0.0);
    std::vector<std::vector<double>> a(layers + 1), z(layers);

    for (std::size_t s = 0; s < xs.size(); ++s) {
        if (xs[s].size() != w.front())
            throw invalid_argument_error("grad: input dimension mismatch");
        a[0] = xs[s];
        for (std::size_t j = 0; j < layers; ++j) {
            z[j] = detail::affine(lp.weights[j], lp.biases[j], a[j]);
            detail::check_finite(z[j], j + 1);
            a[j + 1] = z[j];
            if (j + 1 < layers)
                for (double& v : a[j + 1]) v = act.fn(v);
        }
        double raw = z[layers - 1][0];
        double out = clamp ? std::clamp(raw, -*clamp, *clamp) : raw;
        double dl = loss_grad(loss, out, ys[s]);
        if (clamp && std::fabs(raw) > *clamp) dl = 0.0;

        std::vector<double> delta{dl};
        for (std::size_t jj = layers; jj-- > 0;) {
            const Matrix& W = lp.weights[jj];
            for (std::size_t i = 0; i < W.rows; ++i) {
                g[b_off[jj] + i] += delta[i];
                for (std::size_t k = 0; k < W.cols; ++k)
                    g[w_off[jj] + i + k * W.rows] += delta[i] * a[jj][k];
            }
            if (jj == 0) break;
            std::vector<double> prev(W.cols, 0.0);
            for (std::size_t k = 0; k < W.cols; ++k) {
                double acc = 0.0;
                for (std::size_t i = 0; i < W.rows; ++i) acc += W(i, k) * delta[i];
                prev[k] = acc * act.deriv(z[jj - 1][k]);
            }
            delta = std::move(prev);
        }
    }
    double inv = 1.0 / static_cast<double>(xs.size());
    for (double& v : g) v *= inv;
    return g;
}

/**
 * Projects theta onto the constraint set: entries clipped to
 * [-weight_bound, weight_bound], then all but the sparsity largest
 * magnitudes zeroed (ties keep the lowest index).  Idempotent.
 */
inline NetworkParams project_class(const NetworkParams& params, const ClassConstraints& c) {
    const Widths& w = params.arch.widths;
    for (std::size_t j = 1; j + 1 < w.size(); ++j)
        if (w[j] > c.max_width)
            throw invalid_argument_error("project_class: hidden width exceeds constraint");
    NetworkParams out = params;
    for (double& v : out.theta) v = std::clamp(v, -c.weight_bound, c.weight_bound);
    if (c.sparsity && *c.sparsity < out.theta.size()) {
        std::vector<std::size_t> idx(out.theta.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t p, std::size_t q) {
            return std::fabs(out.theta[p]) > std::fabs(out.theta[q]);
        });
        std::vector<double> kept(out.theta.size(), 0.0);
        for (std::size_t r = 0; r < *c.sparsity; ++r) kept[idx[r]] = out.theta[idx[r]];
        out.theta = std::move(kept);
    }
    return out;
}

inline std::size_t count_nonzero(const std::vector<double>& theta, double threshold = 0.0) {
    std::size_t n = 0;
    for (double v : theta)
        if (std::fabs(v) > threshold) ++n;
    return n;
}

inline double sup_norm(const std::vector<double>& theta) {
    double m = 0.0;
    for (double v : theta) m = std::max(m, std::fabs(v));
    return m;
}

} // namespace spdnn
