#pragma once

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "sweep.hpp"

namespace spdnn {

/**
 * Sweep configuration file: JSON with nested sections.  Sections:
 * structure, model, loss, estimator, theory (with smoothness), sweep,
 * train, penalty.  Unknown keys anywhere are errors; malformed JSON is
 * reported with line and column.
 */

namespace cfgdetail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw invalid_argument_error("config: expected an object at " + path);
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!ok.count(it.key()))
            throw invalid_argument_error("config: unknown key '" + it.key() + "' at " + path);
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key))
        throw invalid_argument_error("config: missing key '" + std::string(key) + "' at " + path);
    return obj.at(key);
}

inline double num(const json& obj, const std::string& path, const char* key) {
    const json& v = require(obj, path, key);
    if (!v.is_number())
        throw invalid_argument_error("config: '" + std::string(key) + "' at " + path +
                                     " must be a number");
    return v.get<double>();
}

inline double num_or(const json& obj, const std::string& path, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    return num(obj, path, key);
}

inline std::uint64_t uint(const json& obj, const std::string& path, const char* key) {
    const json& v = require(obj, path, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw invalid_argument_error("config: '" + std::string(key) + "' at " + path +
                                     " must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline std::uint64_t uint_or(const json& obj, const std::string& path, const char* key,
                             std::uint64_t dflt) {
    if (!obj.contains(key)) return dflt;
    return uint(obj, path, key);
}

inline std::string str(const json& obj, const std::string& path, const char* key) {
    const json& v = require(obj, path, key);
    if (!v.is_string())
        throw invalid_argument_error("config: '" + std::string(key) + "' at " + path +
                                     " must be a string");
    return v.get<std::string>();
}

inline std::string str_or(const json& obj, const std::string& path, const char* key,
                          const std::string& dflt) {
    if (!obj.contains(key)) return dflt;
    return str(obj, path, key);
}

inline bool flag_or(const json& obj, const std::string& path, const char* key, bool dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_boolean())
        throw invalid_argument_error("config: '" + std::string(key) + "' at " + path +
                                     " must be a boolean");
    return v.get<bool>();
}

inline std::vector<double> num_list(const json& obj, const std::string& path, const char* key) {
    const json& v = require(obj, path, key);
    if (!v.is_array())
        throw invalid_argument_error("config: '" + std::string(key) + "' at " + path +
                                     " must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number())
            throw invalid_argument_error("config: '" + std::string(key) + "' at " + path +
                                         " must contain numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline NoiseSpec parse_noise(const json& obj, const std::string& path) {
    reject_unknown(obj, path, {"kind", "scale", "df"});
    std::string kind = str(obj, path, "kind");
    double scale = num(obj, path, "scale");
    if (kind == "gaussian") return NoiseSpec::gaussian(scale);
    if (kind == "laplace") return NoiseSpec::laplace(scale);
    if (kind == "student_t") return NoiseSpec::student_t(scale, num(obj, path, "df"));
    throw invalid_argument_error("config: unknown noise kind '" + kind + "' at " + path);
}

inline SmoothnessSpec parse_smoothness(const json& obj, const std::string& path) {
    std::string cls = str(obj, path, "class");
    if (cls == "holder") {
        reject_unknown(obj, path, {"class", "s", "K"});
        HolderSpec h{num(obj, path, "s"), num(obj, path, "K")};
        h.validate();
        return h;
    }
    if (cls == "composition") {
        reject_unknown(obj, path, {"class", "dims", "arity", "beta", "A"});
        CompositionSpec c;
        for (double v : num_list(obj, path, "dims")) c.dims.push_back(static_cast<std::size_t>(v));
        for (double v : num_list(obj, path, "arity")) c.arity.push_back(static_cast<std::size_t>(v));
        c.beta = num_list(obj, path, "beta");
        c.A = num_or(obj, path, "A", 1.0);
        c.validate();
        return c;
    }
    throw invalid_argument_error("config: unknown smoothness class '" + cls + "' at " + path);
}

} // namespace cfgdetail

inline SweepConfig parse_config_json(const nlohmann::json& root) {
    using namespace cfgdetail;
    reject_unknown(root, "/", {"structure", "model", "loss", "estimator", "penalty", "theory",
                               "sweep", "train"});
    SweepConfig cfg;

    {
        const json& st = require(root, "/", "structure");
        reject_unknown(st, "/structure", {"kind", "rho"});
        cfg.structure = dependence_by_name(str(st, "/structure", "kind"),
                                           num_or(st, "/structure", "rho", 0.0));
    }

    {
        const json& lo = require(root, "/", "loss");
        reject_unknown(lo, "/loss", {"kind", "delta"});
        cfg.loss = loss_by_name(str(lo, "/loss", "kind"), num_or(lo, "/loss", "delta", 1.0));
    }

    {
        std::string est = str(root, "/", "estimator");
        if (est == "npdnn")
            cfg.estimator = EstimatorKind::npdnn;
        else if (est == "spdnn")
            cfg.estimator = EstimatorKind::spdnn;
        else
            throw invalid_argument_error("config: estimator must be 'npdnn' or 'spdnn'");
    }

    if (root.contains("penalty")) {
        const json& pe = root.at("penalty");
        reject_unknown(pe, "/penalty", {"kind", "lambda_scale"});
        cfg.penalty_kind = penalty_by_name(str_or(pe, "/penalty", "kind", "clipped_l1"));
        cfg.lambda_scale = num_or(pe, "/penalty", "lambda_scale", 1.0);
    }

    bool smoothness_given = false;
    {
        const json& th = require(root, "/", "theory");
        reject_unknown(th, "/theory",
                       {"kappa", "L0", "N0", "S0", "B0", "F", "nu", "nu3", "smoothness"});
        cfg.theory.kappa = num_or(th, "/theory", "kappa", 1.0);
        cfg.theory.L0 = num_or(th, "/theory", "L0", 1.0);
        cfg.theory.N0 = num_or(th, "/theory", "N0", 1.0);
        cfg.theory.S0 = num_or(th, "/theory", "S0", 1.0);
        cfg.theory.B0 = num_or(th, "/theory", "B0", 1.0);
        cfg.theory.F = num_or(th, "/theory", "F", 1.0);
        cfg.theory.nu = num_or(th, "/theory", "nu", 3.5);
        cfg.theory.nu3 = num_or(th, "/theory", "nu3", 3.0);
        cfg.theory.loss = cfg.loss;
        cfg.theory.validate();
        if (th.contains("smoothness")) {
            cfg.smoothness = parse_smoothness(th.at("smoothness"), "/theory/smoothness");
            smoothness_given = true;
        }
    }

    {
        const json& mo = require(root, "/", "model");
        reject_unknown(mo, "/model", {"type", "target", "noise", "arx"});
        std::string type = str(mo, "/model", "type");
        if (type == "iid_regression" || type == "classification") {
            cfg.model.kind =
                type == "classification" ? ModelKind::classification : ModelKind::iid_regression;
            cfg.model.target = target_by_id(str(mo, "/model", "target"));
            if (!smoothness_given) cfg.smoothness = cfg.model.target.smoothness;
            if (cfg.model.kind == ModelKind::iid_regression)
                cfg.model.noise = parse_noise(require(mo, "/model", "noise"), "/model/noise");
        } else if (type == "arx") {
            cfg.model.kind = ModelKind::arx;
            const json& ax = require(mo, "/model", "arx");
            reject_unknown(ax, "/model/arx", {"family", "a", "b", "c", "eps", "eta", "burn_in"});
            std::string family = str_or(ax, "/model/arx", "family", "linear");
            std::vector<double> a = num_list(ax, "/model/arx", "a");
            std::vector<double> b =
                ax.contains("b") ? num_list(ax, "/model/arx", "b") : std::vector<double>{};
            std::vector<double> c =
                ax.contains("c") ? num_list(ax, "/model/arx", "c") : std::vector<double>{};
            NoiseSpec eps = parse_noise(require(ax, "/model/arx", "eps"), "/model/arx/eps");
            NoiseSpec eta = ax.contains("eta")
                                ? parse_noise(ax.at("eta"), "/model/arx/eta")
                                : eps;
            if (family == "linear")
                cfg.model.arx = linear_arx(a, b, c, eps, eta);
            else if (family == "tanh")
                cfg.model.arx = tanh_arx(a, b, c, eps, eta);
            else
                throw invalid_argument_error("config: unknown arx family '" + family + "'");
            cfg.model.burn_in =
                static_cast<std::size_t>(uint_or(ax, "/model/arx", "burn_in", 1000));
            if (!smoothness_given)
                throw invalid_argument_error(
                    "config: theory.smoothness is required for arx models");
        } else {
            throw invalid_argument_error("config: unknown model type '" + type + "'");
        }
    }

    {
        const json& sw = require(root, "/", "sweep");
        reject_unknown(sw, "/sweep",
                       {"grid", "replications", "mc_size", "master_seed", "slope_mode",
                        "record_timing"});
        for (double v : num_list(sw, "/sweep", "grid"))
            cfg.grid.push_back(static_cast<std::uint64_t>(v));
        cfg.replications = static_cast<std::size_t>(uint_or(sw, "/sweep", "replications", 1));
        cfg.mc_size = static_cast<std::size_t>(uint_or(sw, "/sweep", "mc_size", 10000));
        cfg.master_seed = uint_or(sw, "/sweep", "master_seed", 1);
        std::string mode = str_or(sw, "/sweep", "slope_mode", "raw_n");
        if (mode == "raw_n")
            cfg.slope_mode = SlopeMode::raw_n;
        else if (mode == "phi_n")
            cfg.slope_mode = SlopeMode::phi_n;
        else
            throw invalid_argument_error("config: slope_mode must be 'raw_n' or 'phi_n'");
        cfg.record_timing = flag_or(sw, "/sweep", "record_timing", false);
    }

    if (root.contains("train")) {
        const json& tr = root.at("train");
        reject_unknown(tr, "/train",
                       {"max_epochs", "step_budget", "batch_size", "step_size", "shrink", "projection_cadence",
                        "prune_warmup", "prune_taper", "init_scale", "tol", "restarts"});
        cfg.train.max_epochs = static_cast<std::size_t>(uint_or(tr, "/train", "max_epochs", 200));
        cfg.train.step_budget = static_cast<std::size_t>(uint_or(tr, "/train", "step_budget", 0));
        cfg.train.batch_size = static_cast<std::size_t>(uint_or(tr, "/train", "batch_size", 64));
        cfg.train.step_size = num_or(tr, "/train", "step_size", 0.05);
        cfg.train.shrink = num_or(tr, "/train", "shrink", 0.5);
        cfg.train.projection_cadence =
            static_cast<std::size_t>(uint_or(tr, "/train", "projection_cadence", 1));
        cfg.train.prune_warmup = num_or(tr, "/train", "prune_warmup", 0.2);
        cfg.train.prune_taper = num_or(tr, "/train", "prune_taper", 0.4);
        cfg.train.init_scale = num_or(tr, "/train", "init_scale", 0.0);
        cfg.train.tol = num_or(tr, "/train", "tol", 0.0);
        cfg.train.restarts = static_cast<std::size_t>(uint_or(tr, "/train", "restarts", 1));
        cfg.train.validate();
    }

    cfg.validate();
    return cfg;
}

/// Maps a byte offset from a parse error to line:column (1-based).
inline std::pair<std::size_t, std::size_t> offset_to_line_col(const std::string& text,
                                                              std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline SweepConfig parse_config_text(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        auto [line, col] = offset_to_line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw invalid_argument_error("config: malformed JSON at line " + std::to_string(line) +
                                     ", column " + std::to_string(col) + ": " + e.what());
    }
    return parse_config_json(root);
}

inline SweepConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw invalid_argument_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace spdnn
