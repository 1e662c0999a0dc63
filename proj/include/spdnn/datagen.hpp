#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "theory.hpp"

namespace spdnn {

// ---------- noise ----------

enum class NoiseKind { gaussian, laplace, student_t };

/// Centered symmetric innovation distribution.  scale is the standard
/// deviation for gaussian, the classical scale parameter for laplace, and a
/// multiplier on a standard t draw for student_t (df > 2).
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double scale = 1.0;
    double df = 5.0;

    static NoiseSpec gaussian(double scale) { return checked({NoiseKind::gaussian, scale, 5.0}); }
    static NoiseSpec laplace(double scale) { return checked({NoiseKind::laplace, scale, 5.0}); }
    static NoiseSpec student_t(double scale, double df) {
        return checked({NoiseKind::student_t, scale, df});
    }

    void validate() const {
        if (!(scale > 0.0)) throw invalid_argument_error("noise: scale must be > 0");
        if (kind == NoiseKind::student_t && !(df > 2.0))
            throw invalid_argument_error("noise: student_t requires df > 2");
    }

private:
    static NoiseSpec checked(NoiseSpec s) {
        s.validate();
        return s;
    }
};

inline const char* noise_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::laplace: return "laplace";
        case NoiseKind::student_t: return "student_t";
    }
    return "?";
}

inline double draw_noise(const NoiseSpec& spec, std::mt19937_64& g) {
    switch (spec.kind) {
        case NoiseKind::gaussian:
            return std::normal_distribution<double>(0.0, spec.scale)(g);
        case NoiseKind::laplace: {
            double u = uniform01(g) - 0.5;
            double s = u < 0.0 ? -1.0 : 1.0;
            return -spec.scale * s * std::log(1.0 - 2.0 * std::fabs(u));
        }
        case NoiseKind::student_t:
            return spec.scale * std::student_t_distribution<double>(spec.df)(g);
    }
    throw invalid_argument_error("draw_noise: bad kind");
}

// ---------- samples ----------

struct Sample {
    std::vector<double> x;
    double y = 0.0;
};

using Dataset = std::vector<Sample>;

/// Writes `t,X_1,...,X_k,Y` rows, one per record, full double precision.
inline void dump_dataset_csv(std::ostream& os, const Dataset& data) {
    std::size_t k = data.empty() ? 0 : data.front().x.size();
    os << "t";
    for (std::size_t j = 1; j <= k; ++j) os << ",X_" << j;
    os << ",Y\n";
    char buf[32];
    for (std::size_t t = 0; t < data.size(); ++t) {
        if (data[t].x.size() != k)
            throw invalid_argument_error("dump_dataset_csv: ragged dataset");
        os << (t + 1);
        for (double v : data[t].x) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", data[t].y);
        os << ',' << buf << '\n';
    }
}

inline void dump_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream os(path);
    if (!os) throw runtime_failure("cannot open " + path + " for writing");
    dump_dataset_csv(os, data);
}

// ---------- autoregressive model with exogenous covariates ----------

/**
 * Y_t = f(Y_{t-1..t-p}; Z_{t-1..t-q}) + eps_t, with the covariate process
 * Z_t = g(Z_{t-1..t-q}) + eta_t.  The regression feature vector at time t
 * is X_t = (Y_{t-1..t-p}, Z_{t-1..t-q}) and the regression function of
 * Y_t on X_t is f itself.
 *
 * lip_f_y / lip_f_x / lip_g declare per-lag Lipschitz coefficients of f
 * and g; stationarity requires sum(lip_f_y) < 1 and sum(lip_g) < 1.
 */
struct ArxModel {
    std::size_t p = 1, q = 0;
    std::function<double(const std::vector<double>&, const std::vector<double>&)> f;
    std::function<double(const std::vector<double>&)> g;
    std::vector<double> lip_f_y, lip_f_x, lip_g;
    NoiseSpec eps = NoiseSpec::gaussian(1.0);
    NoiseSpec eta = NoiseSpec::gaussian(1.0);

    std::size_t feature_dim() const { return p + q; }

    void validate() const {
        if ((p > 0 || q > 0) && !f) throw invalid_argument_error("arx: f is required");
        if (q > 0 && !g) throw invalid_argument_error("arx: g is required when q > 0");
        if (lip_f_y.size() != p || lip_f_x.size() != q || lip_g.size() != q)
            throw invalid_argument_error("arx: Lipschitz coefficient lengths mismatch lag orders");
        eps.validate();
        eta.validate();
    }
};

struct ContractionReport {
    bool pass = true;
    double margin_f = 1.0; // 1 - sum lip_f_y
    double margin_g = 1.0; // 1 - sum lip_g
};

inline ContractionReport check_contraction(const ArxModel& m) {
    m.validate();
    double sf = 0.0, sg = 0.0;
    for (double v : m.lip_f_y) sf += std::fabs(v);
    for (double v : m.lip_g) sg += std::fabs(v);
    ContractionReport rep;
    rep.margin_f = 1.0 - sf;
    rep.margin_g = 1.0 - sg;
    rep.pass = rep.margin_f > 0.0 && rep.margin_g > 0.0;
    return rep;
}

/**
 * Simulates n records after discarding burn_in steps.  Lag states start at
 * zero; each step draws eps then eta.  Throws if the declared contraction
 * condition fails.  Bit-deterministic for fixed (model, n, burn_in, seed)
 * within one build.
 */
inline Dataset simulate_arx(const ArxModel& m, std::size_t n, std::size_t burn_in,
                            std::uint64_t seed) {
    auto rep = check_contraction(m);
    if (!rep.pass) throw invalid_argument_error("simulate_arx: contraction condition fails");
    std::mt19937_64 g = make_stream(seed, 0);
    std::deque<double> ylags(m.p, 0.0), zlags(m.q, 0.0);
    Dataset out;
    out.reserve(n);
    std::vector<double> yv, zv;
    for (std::size_t t = 0; t < burn_in + n; ++t) {
        yv.assign(ylags.begin(), ylags.end());
        zv.assign(zlags.begin(), zlags.end());
        double e = draw_noise(m.eps, g);
        double y = (m.f ? m.f(yv, zv) : 0.0) + e;
        double z = 0.0;
        if (m.q > 0) z = m.g(zv) + draw_noise(m.eta, g);
        if (!std::isfinite(y) || !std::isfinite(z))
            throw runtime_failure("simulate_arx: non-finite state at t=" + std::to_string(t));
        if (t >= burn_in) {
            Sample s;
            s.x = yv;
            s.x.insert(s.x.end(), zv.begin(), zv.end());
            s.y = y;
            out.push_back(std::move(s));
        }
        if (m.p > 0) {
            ylags.push_front(y);
            ylags.pop_back();
        }
        if (m.q > 0) {
            zlags.push_front(z);
            zlags.pop_back();
        }
    }
    return out;
}

/// Linear ARX family: f = sum a_j y_j + sum b_j z_j, g = sum c_j z_j.
inline ArxModel linear_arx(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                           NoiseSpec eps, NoiseSpec eta) {
    ArxModel m;
    m.p = a.size();
    m.q = b.size();
    if (c.size() != b.size())
        throw invalid_argument_error("linear_arx: g coefficient count must equal q");
    m.lip_f_y.assign(a.begin(), a.end());
    m.lip_f_x.assign(b.begin(), b.end());
    m.lip_g.assign(c.begin(), c.end());
    for (double& v : m.lip_f_y) v = std::fabs(v);
    for (double& v : m.lip_f_x) v = std::fabs(v);
    for (double& v : m.lip_g) v = std::fabs(v);
    m.f = [a, b](const std::vector<double>& y, const std::vector<double>& z) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * y[j];
        for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * z[j];
        return s;
    };
    m.g = [c](const std::vector<double>& z) {
        double s = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * z[j];
        return s;
    };
    m.eps = eps;
    m.eta = eta;
    return m;
}

/// Bounded-derivative nonlinear family: f = sum a_j tanh(y_j) + sum b_j tanh(z_j).
inline ArxModel tanh_arx(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                         NoiseSpec eps, NoiseSpec eta) {
    ArxModel m = linear_arx(a, b, c, eps, eta);
    m.f = [a, b](const std::vector<double>& y, const std::vector<double>& z) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * std::tanh(y[j]);
        for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * std::tanh(z[j]);
        return s;
    };
    m.g = [c](const std::vector<double>& z) {
        double s = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * std::tanh(z[j]);
        return s;
    };
    return m;
}

// ---------- regression targets ----------

using Domain = std::vector<std::pair<double, double>>; // per-dimension [lo, hi]

inline Domain unit_cube(std::size_t d) { return Domain(d, {0.0, 1.0}); }

/// Named target function with its declared smoothness class and domain.
struct TargetSpec {
    std::string id;
    std::function<double(const std::vector<double>&)> fn;
    SmoothnessSpec smoothness = HolderSpec{1.0, 1.0};
    Domain domain = unit_cube(1);

    std::size_t dim() const { return domain.size(); }
};

/// X uniform on the domain, Y = f(X) + eps.  Draws per record: the d
/// coordinates in order, then the innovation.
inline Dataset simulate_iid(const TargetSpec& target, const NoiseSpec& noise, std::size_t n,
                            std::uint64_t seed) {
    noise.validate();
    std::mt19937_64 g = make_stream(seed, 0);
    Dataset out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.x.resize(target.dim());
        for (std::size_t j = 0; j < target.dim(); ++j)
            s.x[j] = uniform_in(g, target.domain[j].first, target.domain[j].second);
        s.y = target.fn(s.x) + draw_noise(noise, g);
        out.push_back(std::move(s));
    }
    return out;
}

/// X uniform on the domain, Y in {-1,+1} with P(Y=1|X) = logistic(f(X)).
inline Dataset simulate_classification(const TargetSpec& target, std::size_t n,
                                       std::uint64_t seed) {
    std::mt19937_64 g = make_stream(seed, 0);
    Dataset out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.x.resize(target.dim());
        for (std::size_t j = 0; j < target.dim(); ++j)
            s.x[j] = uniform_in(g, target.domain[j].first, target.domain[j].second);
        double prob = 1.0 / (1.0 + std::exp(-target.fn(s.x)));
        s.y = uniform01(g) < prob ? 1.0 : -1.0;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------- smoothness probe ----------

/// Largest integer strictly smaller than x (so 2 -> 1, 2.5 -> 2, 0.5 -> 0).
inline double floor_strict(double x) {
    double f = std::floor(x);
    return f == x ? f - 1.0 : f;
}

struct ProbeResult {
    double sup_sum = 0.0;      // sum over |alpha| < s of sampled sup |d^alpha f|
    double quotient_max = 0.0; // max sampled quotient at order floor_strict(s)
    double total = 0.0;
};

namespace detail {

inline double fd_partial(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double>& x, const std::vector<std::size_t>& alpha,
                         double h) {
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] == 0) continue;
        std::vector<std::size_t> lower = alpha;
        --lower[i];
        double xi = x[i];
        x[i] = xi + h;
        double hi = fd_partial(f, x, lower, h);
        x[i] = xi - h;
        double lo = fd_partial(f, x, lower, h);
        x[i] = xi;
        return (hi - lo) / (2.0 * h);
    }
    return f(x);
}

inline void enumerate_multi_indices(std::size_t d, std::size_t order_cap,
                                    std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> cur(d, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
        if (pos == d) {
            out.push_back(cur);
            return;
        }
        for (std::size_t k = 0; k <= left; ++k) {
            cur[pos] = k;
            rec(pos + 1, left - k);
        }
        cur[pos] = 0;
    };
    rec(0, order_cap);
}

} // namespace detail

/**
 * Sampled lower bound on the Hoelder-ball norm of f with exponent s:
 * sum of gridded sup norms of the finite-difference partials of order
 * below s, plus the max quotient |d^m f(x) - d^m f(y)| / |x-y|^{s-m} at
 * m = floor_strict(s), over axis-adjacent grid pairs and n_pairs random
 * pairs.  A declared radius K is plausible when the returned total is <= K.
 */
inline ProbeResult holder_quotient_probe(const std::function<double(const std::vector<double>&)>& f,
                                         double s, const Domain& domain,
                                         std::size_t grid_per_dim = 101,
                                         std::size_t n_pairs = 2000, std::uint64_t seed = 17) {
    if (!(s > 0.0)) throw invalid_argument_error("probe: s must be > 0");
    if (domain.empty()) throw invalid_argument_error("probe: empty domain");
    if (grid_per_dim < 3) throw invalid_argument_error("probe: grid too small");
    for (auto& [lo, hi] : domain)
        if (!(hi > lo)) throw invalid_argument_error("probe: degenerate domain interval");

    std::size_t d = domain.size();
    auto m = static_cast<std::size_t>(floor_strict(s));
    double h = 1e-4;

    std::vector<std::vector<std::size_t>> alphas;
    detail::enumerate_multi_indices(d, m, alphas);

    // grid points with enough margin for the deepest stencil of each order
    auto grid_points = [&](std::size_t order) {
        std::vector<std::vector<double>> pts;
        double margin = static_cast<double>(order) * h * 1.0001;
        std::vector<std::size_t> idx(d, 0);
        bool done = false;
        while (!done) {
            std::vector<double> x(d);
            for (std::size_t i = 0; i < d; ++i) {
                double lo = domain[i].first + margin, hi = domain[i].second - margin;
                x[i] = lo + (hi - lo) * static_cast<double>(idx[i]) /
                                 static_cast<double>(grid_per_dim - 1);
            }
            pts.push_back(std::move(x));
            for (std::size_t i = 0;; ++i) {
                if (i == d) {
                    done = true;
                    break;
                }
                if (++idx[i] < grid_per_dim) break;
                idx[i] = 0;
            }
        }
        return pts;
    };

    ProbeResult res;
    std::vector<std::vector<double>> top_vals; // order-m partials per grid point
    std::vector<std::vector<double>> top_grid;
    for (const auto& alpha : alphas) {
        std::size_t order = 0;
        for (std::size_t a : alpha) order += a;
        auto pts = grid_points(order);
        double sup = 0.0;
        std::vector<double> vals;
        vals.reserve(pts.size());
        for (auto& ptc : pts) {
            std::vector<double> pt = ptc;
            double v = detail::fd_partial(f, pt, alpha, h);
            sup = std::max(sup, std::fabs(v));
            if (order == m) vals.push_back(v);
        }
        res.sup_sum += sup;
        if (order == m) {
            top_vals.push_back(std::move(vals));
            if (top_grid.empty()) top_grid = grid_points(order);
        }
    }

    double expo = s - static_cast<double>(m);
    auto quotient = [&](std::size_t a, std::size_t b) {
        double dist2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double dd = top_grid[a][i] - top_grid[b][i];
            dist2 += dd * dd;
        }
        if (dist2 == 0.0) return;
        double dist = std::pow(std::sqrt(dist2), expo);
        for (const auto& vals : top_vals)
            res.quotient_max = std::max(res.quotient_max, std::fabs(vals[a] - vals[b]) / dist);
    };

    // axis-adjacent pairs
    std::size_t total_pts = top_grid.size();
    std::size_t stride = 1;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t a = 0; a < total_pts; ++a) {
            std::size_t along = (a / stride) % grid_per_dim;
            if (along + 1 < grid_per_dim) quotient(a, a + stride);
        }
        stride *= grid_per_dim;
    }
    // random pairs
    std::mt19937_64 g = make_stream(seed, 0);
    for (std::size_t k = 0; k < n_pairs; ++k) {
        auto a = static_cast<std::size_t>(uniform01(g) * static_cast<double>(total_pts));
        auto b = static_cast<std::size_t>(uniform01(g) * static_cast<double>(total_pts));
        if (a >= total_pts || b >= total_pts || a == b) continue;
        quotient(a, b);
    }

    res.total = res.sup_sum + res.quotient_max;
    return res;
}

// ---------- composition builder ----------

/// One component of a composition level: reads the listed coordinates of
/// the previous level's output.
struct Component {
    std::vector<std::size_t> coords;
    std::function<double(const std::vector<double>&)> fn;
};

/**
 * Assembles g_q o ... o g_0 from per-level component lists and returns a
 * TargetSpec carrying the CompositionSpec.  Level i must supply dims[i+1]
 * components, each reading at most arity[i] coordinates, all within
 * [0, dims[i]).
 */
inline TargetSpec build_composition_target(const std::string& id, const CompositionSpec& comp,
                                           const std::vector<std::vector<Component>>& levels,
                                           Domain domain = {}) {
    comp.validate();
    if (levels.size() != comp.beta.size())
        throw invalid_argument_error("composition target: level count must be q+1");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i].size() != comp.dims[i + 1])
            throw invalid_argument_error("composition target: level " + std::to_string(i) +
                                         " must have d_{i+1} components");
        for (const auto& c : levels[i]) {
            if (c.coords.size() > comp.arity[i])
                throw invalid_argument_error("composition target: component reads more than t_i coordinates");
            if (!c.fn) throw invalid_argument_error("composition target: missing component function");
            for (std::size_t idx : c.coords)
                if (idx >= comp.dims[i])
                    throw invalid_argument_error("composition target: coordinate index out of range");
        }
    }
    if (domain.empty()) domain = unit_cube(comp.dims.front());
    if (domain.size() != comp.dims.front())
        throw invalid_argument_error("composition target: domain dimension mismatch");

    TargetSpec t;
    t.id = id;
    t.smoothness = comp;
    t.domain = std::move(domain);
    t.fn = [comp, levels](const std::vector<double>& x0) {
        std::vector<double> cur = x0, next;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            next.assign(levels[i].size(), 0.0);
            for (std::size_t j = 0; j < levels[i].size(); ++j) {
                const auto& c = levels[i][j];
                std::vector<double> args(c.coords.size());
                for (std::size_t k = 0; k < c.coords.size(); ++k) args[k] = cur[c.coords[k]];
                next[j] = c.fn(args);
            }
            cur = next;
        }
        return cur[0];
    };
    return t;
}

// ---------- curated registry ----------

/// Curated targets with hand-verified smoothness declarations;
/// holder_quotient_probe stays at or below the declared radius for each.
inline std::vector<TargetSpec> target_registry() {
    std::vector<TargetSpec> reg;

    reg.push_back({"const_half", [](const std::vector<double>&) { return 0.5; },
                   HolderSpec{2.0, 1.0}, unit_cube(1)});

    reg.push_back({"ramp_1d", [](const std::vector<double>& x) { return x[0]; },
                   HolderSpec{1.5, 2.5}, unit_cube(1)});

    reg.push_back({"sine_1d", [](const std::vector<double>& x) { return std::sin(2.0 * M_PI * x[0]); },
                   HolderSpec{2.0, 50.0}, unit_cube(1)});

    reg.push_back({"bump_2d",
                   [](const std::vector<double>& x) {
                       double r2 = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
                       return std::exp(-4.0 * r2);
                   },
                   HolderSpec{2.0, 100.0}, unit_cube(2)});

    {
        CompositionSpec comp;
        comp.dims = {2, 1, 1};
        comp.arity = {2, 1};
        comp.beta = {2.0, 2.0};
        comp.A = 60.0;
        std::vector<std::vector<Component>> levels(2);
        levels[0].push_back({{0, 1}, [](const std::vector<double>& v) {
                                 return 0.5 * (v[0] * v[0] + v[1] * v[1]);
                             }});
        levels[1].push_back({{0}, [](const std::vector<double>& v) {
                                 return std::sin(M_PI * v[0]);
                             }});
        reg.push_back(build_composition_target("radial_sine_2d", comp, levels));
    }

    return reg;
}

inline TargetSpec target_by_id(const std::string& id) {
    for (auto& t : target_registry())
        if (t.id == id) return t;
    throw invalid_argument_error("unknown target id: " + id);
}

} // namespace spdnn
