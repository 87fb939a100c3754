#pragma once

// JSON experiment configs. Every field has a default; the fully resolved
// config is what gets hashed and echoed into the run manifest.

#include "esn_rmt/experiments.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

namespace esn_rmt {

using json = nlohmann::json;

/// Config or usage problem (maps to exit code 2).
class ConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline ExperimentKind parse_experiment_kind(const std::string& s) {
    if (s == "double-descent") return ExperimentKind::DoubleDescent;
    if (s == "memory-grid") return ExperimentKind::MemoryGrid;
    if (s == "lambda-sweep") return ExperimentKind::LambdaSweep;
    throw ConfigError("unknown experiment '" + s + "'");
}

inline ModelTag parse_model(const std::string& s) {
    if (s == "ridge") return ModelTag::Ridge;
    if (s == "esn") return ModelTag::Esn;
    throw ConfigError("unknown model '" + s + "'");
}

inline ReservoirKind parse_reservoir_kind(const std::string& s) {
    if (s == "orthogonal") return ReservoirKind::ScaledOrthogonal;
    if (s == "gaussian") return ReservoirKind::ScaledGaussian;
    throw ConfigError("unknown reservoir kind '" + s + "' (orthogonal | gaussian)");
}

inline const char* reservoir_kind_name(ReservoirKind k) {
    return k == ReservoirKind::ScaledGaussian ? "gaussian" : "orthogonal";
}

inline json covariance_to_json(const CovarianceSpec& cov) {
    struct V {
        json operator()(const Isotropic&) const { return {{"kind", "isotropic"}}; }
        json operator()(const ToeplitzAR1& a) const { return {{"kind", "ar1"}, {"c", a.c}}; }
        json operator()(const DiagonalPowerLaw& p) const { return {{"kind", "power-law"}, {"exponent", p.exponent}}; }
        json operator()(const Explicit& e) const {
            json rows = json::array();
            for (Index i = 0; i < e.matrix.rows(); ++i) {
                json r = json::array();
                for (Index j = 0; j < e.matrix.cols(); ++j) r.push_back(e.matrix(i, j));
                rows.push_back(r);
            }
            return {{"kind", "explicit"}, {"matrix", rows}};
        }
    };
    return std::visit(V{}, cov.kind());
}

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename V>
void read(const json& obj, const char* key, V& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<V>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline std::vector<double> read_grid(const json& v, const char* key) {
    if (v.is_array()) return v.get<std::vector<double>>();
    if (v.is_object()) {
        reject_unknown(v, {"min", "max", "count"}, key);
        if (!v.contains("min") || !v.contains("max") || !v.contains("count"))
            throw ConfigError(std::string(key) + " log grid needs min, max and count");
        const double lo = v.at("min").get<double>(), hi = v.at("max").get<double>();
        if (!(lo > 0.0 && hi > 0.0)) throw ConfigError(std::string(key) + " log grid bounds must be > 0");
        return logspace(std::log10(lo), std::log10(hi), v.at("count").get<int>());
    }
    throw ConfigError(std::string(key) + " must be an array or {min, max, count}");
}

}  // namespace detail

inline CovarianceSpec covariance_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("covariance needs a 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    try {
        if (kind == "isotropic") {
            detail::reject_unknown(j, {"kind"}, "covariance");
            return CovarianceSpec::isotropic(1);
        }
        if (kind == "ar1") {
            detail::reject_unknown(j, {"kind", "c"}, "covariance");
            return CovarianceSpec::ar1(j.value("c", 0.5), 1);
        }
        if (kind == "power-law") {
            detail::reject_unknown(j, {"kind", "exponent"}, "covariance");
            return CovarianceSpec::power_law(j.value("exponent", 1.0), 1);
        }
        if (kind == "explicit") {
            detail::reject_unknown(j, {"kind", "matrix"}, "covariance");
            const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
            Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows.size()) throw ConfigError("explicit covariance must be square");
                for (std::size_t k = 0; k < rows.size(); ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
            }
            auto spec = CovarianceSpec::explicit_matrix(std::move(m));
            materialize_covariance(spec);  // symmetry / PSD check now, not mid-sweep
            return spec;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("covariance: ") + e.what());
    }
    throw ConfigError("unknown covariance kind '" + kind + "' (isotropic | ar1 | power-law | explicit)");
}

/// Config from JSON; absent keys take the per-experiment defaults.
inline ExperimentConfig config_from_json(const json& j) {
    detail::reject_unknown(j, {"experiment", "seed", "workers", "covariance", "teacher", "models", "esn",
                               "double_descent", "memory_grid", "lambda_sweep", "monte_carlo"},
                           "config");
    if (!j.contains("experiment")) throw ConfigError("config needs an 'experiment'");
    ExperimentConfig cfg;
    cfg.experiment = parse_experiment_kind(j.at("experiment").get<std::string>());
    switch (cfg.experiment) {
        case ExperimentKind::DoubleDescent: cfg.lambda = 1e-4; break;
        case ExperimentKind::MemoryGrid:
            cfg.lambda = 0.1;
            cfg.T = 100;
            break;
        case ExperimentKind::LambdaSweep:
            cfg.models = {ModelTag::Ridge};
            cfg.T = 100;
            cfg.N = 200;
            break;
    }

    try {
        detail::read(j, "seed", cfg.seed);
        detail::read(j, "workers", cfg.workers);
        if (j.contains("covariance")) cfg.cov = covariance_from_json(j.at("covariance"));
        if (j.contains("teacher")) {
            const auto& t = j.at("teacher");
            detail::reject_unknown(t, {"sigma2", "theta_norm", "rho"}, "teacher");
            detail::read(t, "sigma2", cfg.sigma2);
            detail::read(t, "theta_norm", cfg.theta_norm);
            detail::read(t, "rho", cfg.rho);
        }
        if (j.contains("models")) {
            cfg.models.clear();
            for (const auto& m : j.at("models")) {
                const ModelTag tag = parse_model(m.get<std::string>());
                if (std::find(cfg.models.begin(), cfg.models.end(), tag) != cfg.models.end())
                    throw ConfigError("model listed twice");
                cfg.models.push_back(tag);
            }
        }
        if (j.contains("esn")) {
            const auto& e = j.at("esn");
            detail::reject_unknown(e, {"phi", "grid_phi", "reservoir", "reservoir_factor", "resample"}, "esn");
            detail::read(e, "phi", cfg.phi);
            if (e.contains("grid_phi") && !e.at("grid_phi").is_null()) cfg.grid_phi = e.at("grid_phi").get<double>();
            if (e.contains("reservoir")) cfg.reservoir = parse_reservoir_kind(e.at("reservoir").get<std::string>());
            detail::read(e, "reservoir_factor", cfg.reservoir_factor);
            detail::read(e, "resample", cfg.resample_reservoir);
        }
        if (j.contains("double_descent")) {
            const auto& d = j.at("double_descent");
            detail::reject_unknown(d, {"gammas", "panel_rhos", "fixed_size", "axis", "lambda"}, "double_descent");
            if (d.contains("gammas")) cfg.gammas = detail::read_grid(d.at("gammas"), "gammas");
            detail::read(d, "panel_rhos", cfg.panel_rhos);
            detail::read(d, "fixed_size", cfg.fixed_size);
            if (d.contains("axis")) {
                const auto a = d.at("axis").get<std::string>();
                if (a == "vary-T") cfg.axis = GammaAxis::VaryT;
                else if (a == "vary-N") cfg.axis = GammaAxis::VaryN;
                else throw ConfigError("axis must be vary-T or vary-N");
            }
            if (cfg.experiment == ExperimentKind::DoubleDescent) detail::read(d, "lambda", cfg.lambda);
        }
        if (j.contains("memory_grid")) {
            const auto& m = j.at("memory_grid");
            detail::reject_unknown(m, {"T", "Ns", "rhos", "lambda", "lambda_policy"}, "memory_grid");
            if (cfg.experiment == ExperimentKind::MemoryGrid) {
                detail::read(m, "T", cfg.T);
                detail::read(m, "lambda", cfg.lambda);
            }
            detail::read(m, "Ns", cfg.Ns);
            detail::read(m, "rhos", cfg.rhos);
            if (m.contains("lambda_policy")) {
                const auto p = m.at("lambda_policy").get<std::string>();
                if (p == "shared") cfg.lambda_policy = LambdaPolicy::Shared;
                else if (p == "optimal") cfg.lambda_policy = LambdaPolicy::Optimal;
                else throw ConfigError("lambda_policy must be shared or optimal");
            }
        }
        if (j.contains("lambda_sweep")) {
            const auto& l = j.at("lambda_sweep");
            detail::reject_unknown(l, {"T", "N", "lambdas"}, "lambda_sweep");
            if (cfg.experiment == ExperimentKind::LambdaSweep) {
                detail::read(l, "T", cfg.T);
                detail::read(l, "N", cfg.N);
            }
            if (l.contains("lambdas")) cfg.lambdas = detail::read_grid(l.at("lambdas"), "lambdas");
        }
        if (j.contains("monte_carlo")) {
            const auto& mc = j.at("monte_carlo");
            detail::reject_unknown(mc, {"enabled", "M", "trials"}, "monte_carlo");
            detail::read(mc, "enabled", cfg.mc.enabled);
            detail::read(mc, "M", cfg.mc.M);
            detail::read(mc, "trials", cfg.mc.trials);
        }
        validate(cfg);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

/// Fully resolved config. Only the section of the selected experiment is echoed.
inline json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["experiment"] = to_string(cfg.experiment);
    j["seed"] = cfg.seed;
    j["covariance"] = covariance_to_json(cfg.cov);
    j["teacher"] = {{"sigma2", cfg.sigma2}, {"theta_norm", cfg.theta_norm}};
    json models = json::array();
    for (ModelTag m : cfg.models) models.push_back(to_string(m));
    j["models"] = models;
    j["esn"] = {{"phi", cfg.phi},
                {"grid_phi", cfg.grid_phi ? json(*cfg.grid_phi) : json(nullptr)},
                {"reservoir", reservoir_kind_name(cfg.reservoir)},
                {"reservoir_factor", cfg.reservoir_factor},
                {"resample", cfg.resample_reservoir}};
    switch (cfg.experiment) {
        case ExperimentKind::DoubleDescent:
            j["double_descent"] = {{"gammas", cfg.gammas},
                                   {"panel_rhos", cfg.panel_rhos},
                                   {"fixed_size", cfg.fixed_size},
                                   {"axis", cfg.axis == GammaAxis::VaryT ? "vary-T" : "vary-N"},
                                   {"lambda", cfg.lambda}};
            break;
        case ExperimentKind::MemoryGrid:
            j["memory_grid"] = {{"T", cfg.T},
                                {"Ns", cfg.Ns},
                                {"rhos", cfg.rhos},
                                {"lambda", cfg.lambda},
                                {"lambda_policy", cfg.lambda_policy == LambdaPolicy::Shared ? "shared" : "optimal"}};
            break;
        case ExperimentKind::LambdaSweep:
            j["teacher"]["rho"] = cfg.rho;
            j["lambda_sweep"] = {{"T", cfg.T}, {"N", cfg.N}, {"lambdas", cfg.lambdas}};
            break;
    }
    j["monte_carlo"] = {{"enabled", cfg.mc.enabled}, {"M", cfg.mc.M}, {"trials", cfg.mc.trials}};
    return j;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash of the resolved config. Object keys are sorted on dump, so key order
/// in the source file does not matter. The worker count is not part of it.
inline std::string config_digest(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_to_json(cfg).dump())));
    return buf;
}

}  // namespace esn_rmt
