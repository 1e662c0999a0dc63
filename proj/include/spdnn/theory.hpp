#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "losses.hpp"

namespace spdnn {

// ---------- dependence structures ----------

enum class DependenceKind { iid, phi_mixing, alpha_exp, alpha_subexp, cmix_geo, cmix_poly };

/**
 * Dependence regime of the observations, indexing the effective sample
 * size phi(n) and the risk-rate table.  rho parameterizes the decay where
 * the regime has one (subexponential alpha-mixing, geometric and
 * polynomial C-mixing); it is ignored elsewhere.
 */
struct DependenceStructure {
    DependenceKind kind = DependenceKind::iid;
    double rho = 0.0;

    static DependenceStructure iid() { return {DependenceKind::iid, 0.0}; }
    static DependenceStructure phi_mixing() { return {DependenceKind::phi_mixing, 0.0}; }
    static DependenceStructure alpha_exp() { return {DependenceKind::alpha_exp, 0.0}; }
    static DependenceStructure alpha_subexp(double rho) {
        DependenceStructure s{DependenceKind::alpha_subexp, rho};
        s.validate();
        return s;
    }
    static DependenceStructure cmix_geo(double rho) {
        DependenceStructure s{DependenceKind::cmix_geo, rho};
        s.validate();
        return s;
    }
    static DependenceStructure cmix_poly(double rho) {
        DependenceStructure s{DependenceKind::cmix_poly, rho};
        s.validate();
        return s;
    }

    void validate() const {
        if (kind == DependenceKind::alpha_subexp && !(rho > 0.0))
            throw invalid_argument_error("alpha_subexp requires rho > 0");
        if (kind == DependenceKind::cmix_geo && !(rho > 0.0))
            throw invalid_argument_error("cmix_geo requires rho > 0");
        if (kind == DependenceKind::cmix_poly && !(rho > 2.0))
            throw invalid_argument_error("cmix_poly requires rho > 2");
    }
};

inline const char* dependence_name(DependenceKind k) {
    switch (k) {
        case DependenceKind::iid: return "iid";
        case DependenceKind::phi_mixing: return "phi_mixing";
        case DependenceKind::alpha_exp: return "alpha_exp";
        case DependenceKind::alpha_subexp: return "alpha_subexp";
        case DependenceKind::cmix_geo: return "cmix_geo";
        case DependenceKind::cmix_poly: return "cmix_poly";
    }
    return "?";
}

inline DependenceStructure dependence_by_name(const std::string& name, double rho = 0.0) {
    if (name == "iid") return DependenceStructure::iid();
    if (name == "phi_mixing") return DependenceStructure::phi_mixing();
    if (name == "alpha_exp") return DependenceStructure::alpha_exp();
    if (name == "alpha_subexp") return DependenceStructure::alpha_subexp(rho);
    if (name == "cmix_geo") return DependenceStructure::cmix_geo(rho);
    if (name == "cmix_poly") return DependenceStructure::cmix_poly(rho);
    throw invalid_argument_error("unknown dependence structure: " + name);
}

/**
 * Effective sample size phi(n), natural logs, clamped below at 1:
 *
 *   iid, phi_mixing    n
 *   alpha_exp          n / (ln n)^2
 *   alpha_subexp(rho)  n^{rho/(rho+1)}
 *   cmix_geo(rho)      n / (ln n)^{2/rho}
 *   cmix_poly(rho>2)   n^{(rho-2)/(rho+1)}
 *
 * Requires n >= 2.  Non-decreasing in n and <= n on the clamped scale
 * for the usual parameter ranges (cmix_geo with rho just below 1 dips
 * slightly for single-digit n before the trend takes over).
 */
inline double phi_of_n(const DependenceStructure& st, std::uint64_t n) {
    st.validate();
    if (n < 2) throw invalid_argument_error("phi_of_n: n must be >= 2");
    double nd = static_cast<double>(n), ln = std::log(nd), v = nd;
    switch (st.kind) {
        case DependenceKind::iid:
        case DependenceKind::phi_mixing: v = nd; break;
        case DependenceKind::alpha_exp: v = nd / (ln * ln); break;
        case DependenceKind::alpha_subexp: v = std::pow(nd, st.rho / (st.rho + 1.0)); break;
        case DependenceKind::cmix_geo: v = nd / std::pow(ln, 2.0 / st.rho); break;
        case DependenceKind::cmix_poly: v = std::pow(nd, (st.rho - 2.0) / (st.rho + 1.0)); break;
    }
    return std::max(1.0, v);
}

// ---------- smoothness classes ----------

/// Ball of Hoelder-smooth functions: exponent s > 0, radius K > 0.
struct HolderSpec {
    double s = 1.0;
    double K = 1.0;

    void validate() const {
        if (!(s > 0.0)) throw invalid_argument_error("holder: s must be > 0");
        if (!(K > 0.0)) throw invalid_argument_error("holder: K must be > 0");
    }
};

/**
 * Composition class g_q o ... o g_0 with level dimensions d_0..d_{q+1}
 * (output d_{q+1} = 1), effective arities t_0..t_q (component i of level j
 * reads at most t_j coordinates) and smoothness exponents beta_0..beta_q.
 * A bounds the component Hoelder norms.
 */
struct CompositionSpec {
    std::vector<std::size_t> dims;  // d_0 .. d_{q+1}
    std::vector<std::size_t> arity; // t_0 .. t_q
    std::vector<double> beta;       // beta_0 .. beta_q
    double A = 1.0;

    std::size_t q() const { return beta.size() - 1; }

    void validate() const {
        if (beta.empty()) throw invalid_argument_error("composition: empty beta");
        if (dims.size() != beta.size() + 1 || arity.size() != beta.size())
            throw invalid_argument_error("composition: dims/arity/beta sizes inconsistent");
        if (dims.back() != 1)
            throw invalid_argument_error("composition: output dimension must be 1");
        for (std::size_t i = 0; i < beta.size(); ++i) {
            if (dims[i] == 0) throw invalid_argument_error("composition: zero dimension");
            if (arity[i] == 0 || arity[i] > dims[i])
                throw invalid_argument_error("composition: arity must be in [1, d_i]");
            if (!(beta[i] > 0.0)) throw invalid_argument_error("composition: beta must be > 0");
        }
        if (!(A > 0.0)) throw invalid_argument_error("composition: A must be > 0");
    }
};

using SmoothnessSpec = std::variant<HolderSpec, CompositionSpec>;

/// beta_i^* = beta_i * prod_{j > i} min(beta_j, 1)
inline double beta_star(const std::vector<double>& beta, std::size_t i) {
    if (i >= beta.size()) throw invalid_argument_error("beta_star: index out of range");
    double v = beta[i];
    for (std::size_t j = i + 1; j < beta.size(); ++j) v *= std::min(beta[j], 1.0);
    return v;
}

/// Dominant approximation scale max_i phi^{-2 beta_i^* / (2 beta_i^* + t_i)}.
inline double phi_n_phi(const CompositionSpec& comp, double phi) {
    comp.validate();
    if (!(phi >= 1.0)) throw invalid_argument_error("phi_n_phi: phi must be >= 1");
    double best = 0.0;
    for (std::size_t i = 0; i < comp.beta.size(); ++i) {
        double bs = beta_star(comp.beta, i);
        double e = -2.0 * bs / (2.0 * bs + static_cast<double>(comp.arity[i]));
        best = std::max(best, std::pow(phi, e));
    }
    return best;
}

/// Exponent e^* = -min_i 2 beta_i^*/(2 beta_i^* + t_i), in (-1, 0).
inline double composition_rate_exponent(const CompositionSpec& comp) {
    comp.validate();
    double worst = 0.0;
    for (std::size_t i = 0; i < comp.beta.size(); ++i) {
        double bs = beta_star(comp.beta, i);
        double e = 2.0 * bs / (2.0 * bs + static_cast<double>(comp.arity[i]));
        worst = (i == 0) ? e : std::min(worst, e);
    }
    return -worst;
}

// ---------- schedules and tuning ----------

/**
 * Constants of the theory maps.  kappa >= 1 is the local risk exponent;
 * nu > 3 and nu3 > 2 are the free log exponents; L0/N0/S0/B0 scale the
 * architecture schedule and F is the output clamp level.
 */
struct TheoryConfig {
    double kappa = 1.0;
    LossSpec loss = LossSpec::l1();
    double L0 = 1.0, N0 = 1.0, S0 = 1.0, B0 = 1.0, F = 1.0;
    double nu = 3.5;
    double nu3 = 3.0;

    void validate() const {
        if (!(kappa >= 1.0)) throw invalid_argument_error("theory: kappa must be >= 1");
        if (!(L0 > 0.0 && N0 > 0.0 && S0 > 0.0 && B0 > 0.0 && F > 0.0))
            throw invalid_argument_error("theory: schedule constants must be > 0");
        if (!(nu > 3.0)) throw invalid_argument_error("theory: nu must be > 3");
        if (!(nu3 > 2.0)) throw invalid_argument_error("theory: nu3 must be > 2");
    }
};

/// Architecture and class bounds at a given sample size.
struct Schedule {
    std::size_t depth = 1;    // L_n, hidden layers
    std::size_t width = 1;    // N_n, max hidden width
    std::size_t sparsity = 1; // S_n, nonzero budget
    double weight_bound = 1.0; // B_n
    double output_bound = 1.0; // F_n
    double phi = 1.0;          // phi(n) used to build it
};

namespace detail {
inline std::size_t ceil_at_least_1(double v) {
    double c = std::ceil(v);
    return c < 1.0 ? 1 : static_cast<std::size_t>(c);
}
} // namespace detail

inline double holder_rate_exponent(double kappa, double s, std::size_t d) {
    return kappa * s / (kappa * s + static_cast<double>(d));
}

inline double holder_width_exponent(double kappa, double s, std::size_t d) {
    return static_cast<double>(d) / (kappa * s + static_cast<double>(d));
}

inline double holder_bound_exponent(double kappa, double s, std::size_t d) {
    return 4.0 * (static_cast<double>(d) + s) / (kappa * s + static_cast<double>(d));
}

/**
 * Architecture schedule for a Hoelder target on [0,1]^d:
 *
 *   L_n = ceil( s L0 / (kappa s + d) * ln phi(n) )
 *   N_n = ceil( N0 phi(n)^{d/(kappa s + d)} )
 *   S_n = ceil( s S0 / (kappa s + d) * phi(n)^{d/(kappa s + d)} ln phi(n) )
 *   B_n = B0 phi(n)^{4(d+s)/(kappa s + d)}
 *   F_n = F
 *
 * Integer fields are ceiled and floored at 1.
 */
inline Schedule npdnn_schedule_holder(const TheoryConfig& cfg, double s, std::size_t d,
                                      const DependenceStructure& st, std::uint64_t n) {
    cfg.validate();
    HolderSpec{s, 1.0}.validate();
    if (d == 0) throw invalid_argument_error("schedule: input dimension must be >= 1");
    double phi = phi_of_n(st, n), lphi = std::log(phi);
    double denom = cfg.kappa * s + static_cast<double>(d);
    Schedule sch;
    sch.depth = detail::ceil_at_least_1(s * cfg.L0 / denom * lphi);
    sch.width = detail::ceil_at_least_1(cfg.N0 * std::pow(phi, holder_width_exponent(cfg.kappa, s, d)));
    sch.sparsity = detail::ceil_at_least_1(s * cfg.S0 / denom *
                                           std::pow(phi, holder_width_exponent(cfg.kappa, s, d)) * lphi);
    sch.weight_bound = cfg.B0 * std::pow(phi, holder_bound_exponent(cfg.kappa, s, d));
    sch.output_bound = cfg.F;
    sch.phi = phi;
    return sch;
}

/**
 * Architecture schedule for a composition target:
 *
 *   L_n = ceil( L0 ln phi(n) ),  N_n = ceil( N0 phi(n) phi_{n,phi} ),
 *   S_n = ceil( S0 phi(n) phi_{n,phi} ln phi(n) ),
 *   B_n = max(B0, 1),  F_n = F.
 */
inline Schedule npdnn_schedule_composition(const TheoryConfig& cfg, const CompositionSpec& comp,
                                           const DependenceStructure& st, std::uint64_t n) {
    cfg.validate();
    comp.validate();
    double phi = phi_of_n(st, n), lphi = std::log(phi);
    double scale = phi * phi_n_phi(comp, phi);
    Schedule sch;
    sch.depth = detail::ceil_at_least_1(cfg.L0 * lphi);
    sch.width = detail::ceil_at_least_1(cfg.N0 * scale);
    sch.sparsity = detail::ceil_at_least_1(cfg.S0 * scale * lphi);
    sch.weight_bound = std::max(cfg.B0, 1.0);
    sch.output_bound = cfg.F;
    sch.phi = phi;
    return sch;
}

/// Penalty tuning at sample size n: lambda_n and the admissible log tau ceiling.
struct SpTuning {
    double lambda = 0.0;
    double log_tau_max = 0.0;
};

/**
 * lambda_n = (ln phi(n))^{nu3} / phi(n), and
 * tau_n <= 1 / (16 K_l (L_n+1) ((N_n+1) B_n)^{L_n+1} phi(n)), returned as
 * log tau_max to stay meaningful when the bound underflows.  Requires a
 * Lipschitz loss (K_l finite); the squared loss is rejected.
 */
inline SpTuning sp_tuning(const TheoryConfig& cfg, const Schedule& sch,
                          const DependenceStructure& st, std::uint64_t n) {
    cfg.validate();
    auto K = lipschitz_constant(cfg.loss);
    if (!K)
        throw invalid_argument_error("sp_tuning: loss has no finite Lipschitz constant");
    double phi = phi_of_n(st, n), lphi = std::log(phi);
    SpTuning t;
    t.lambda = std::pow(lphi, cfg.nu3) / phi;
    double Lp1 = static_cast<double>(sch.depth) + 1.0;
    t.log_tau_max = -std::log(16.0 * *K * Lp1) -
                    Lp1 * std::log((static_cast<double>(sch.width) + 1.0) * sch.weight_bound) -
                    lphi;
    return t;
}

// ---------- predicted risk rates ----------

/// Predicted excess-risk scaling n^{n_exponent} (ln n)^{log_power}.
struct RatePrediction {
    double n_exponent = 0.0;
    double log_power = 0.0;
};

inline RatePrediction predicted_rate_holder(double kappa, double s, std::size_t d,
                                            const DependenceStructure& st) {
    st.validate();
    HolderSpec{s, 1.0}.validate();
    if (!(kappa >= 1.0)) throw invalid_argument_error("predicted_rate: kappa must be >= 1");
    double e = holder_rate_exponent(kappa, s, d);
    switch (st.kind) {
        case DependenceKind::iid:
        case DependenceKind::phi_mixing: return {-e, 3.0};
        case DependenceKind::alpha_exp: return {-e, 5.0};
        case DependenceKind::alpha_subexp: return {-e * st.rho / (st.rho + 1.0), 3.0};
        case DependenceKind::cmix_geo: return {-e, 3.0 + 2.0 / st.rho};
        case DependenceKind::cmix_poly: return {-e * (st.rho - 2.0) / (st.rho + 1.0), 3.0};
    }
    throw invalid_argument_error("predicted_rate: bad structure");
}

inline RatePrediction predicted_rate_composition(double kappa, const CompositionSpec& comp,
                                                 const DependenceStructure& st) {
    st.validate();
    if (!(kappa >= 1.0)) throw invalid_argument_error("predicted_rate: kappa must be >= 1");
    // phi_{n,phi}^{kappa/2} v phi_{n,phi} resolves to the exponent closer to 0
    double base = composition_rate_exponent(comp) * std::min(kappa / 2.0, 1.0);
    switch (st.kind) {
        case DependenceKind::iid:
        case DependenceKind::phi_mixing: return {base, 3.0};
        case DependenceKind::alpha_exp: return {base, 3.0 + std::max(2.0, kappa)};
        case DependenceKind::alpha_subexp: return {base * st.rho / (st.rho + 1.0), 3.0};
        case DependenceKind::cmix_geo: return {base, 3.0 + std::max(2.0 / st.rho, kappa)};
        case DependenceKind::cmix_poly: return {base * (st.rho - 2.0) / (st.rho + 1.0), 3.0};
    }
    throw invalid_argument_error("predicted_rate: bad structure");
}

inline RatePrediction predicted_rate(double kappa, const SmoothnessSpec& sm, std::size_t input_dim,
                                     const DependenceStructure& st) {
    if (std::holds_alternative<HolderSpec>(sm)) {
        const auto& h = std::get<HolderSpec>(sm);
        return predicted_rate_holder(kappa, h.s, input_dim, st);
    }
    return predicted_rate_composition(kappa, std::get<CompositionSpec>(sm), st);
}

/**
 * Metric entropy bound of the constrained network class:
 * log N(eps) <= 2 L (S+1) log( C_sigma L (N+1) max(B,1) / eps ), clamped at 0.
 */
inline double covering_log_bound(double L, double N, double B, double S, double c_sigma,
                                 double eps) {
    if (!(L > 0.0 && N > 0.0 && B > 0.0 && S > 0.0 && c_sigma > 0.0 && eps > 0.0))
        throw invalid_argument_error("covering_log_bound: all arguments must be positive");
    double v = 2.0 * L * (S + 1.0) * std::log(c_sigma * L * (N + 1.0) * std::max(B, 1.0) / eps);
    return std::max(0.0, v);
}

} // namespace spdnn
