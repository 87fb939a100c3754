#pragma once

// The three sweeps (double descent over gamma, ridge-vs-ESN memory grid over
// (N, rho), lambda sweep with the closed-form optimum) plus their CSV tables.

#include "esn_rmt/parallel.hpp"
#include "esn_rmt/readout.hpp"
#include "esn_rmt/risk_curve.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace esn_rmt {

enum class ExperimentKind { DoubleDescent, MemoryGrid, LambdaSweep };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::DoubleDescent: return "double-descent";
        case ExperimentKind::MemoryGrid: return "memory-grid";
        case ExperimentKind::LambdaSweep: return "lambda-sweep";
    }
    return "?";
}

enum class LambdaPolicy { Shared, Optimal };

struct MonteCarloConfig {
    bool enabled = false;
    Index M = 2000;
    Index trials = 20;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::DoubleDescent;
    CovarianceSpec cov = CovarianceSpec::isotropic(1);  // kind only; T comes from the sweep
    double sigma2 = 1.0;
    double theta_norm = 1.0;
    std::vector<ModelTag> models{ModelTag::Ridge, ModelTag::Esn};

    // ESN
    double phi = 0.9;
    std::optional<double> grid_phi;  // memory grid override of max(rho, 0.5)
    ReservoirKind reservoir = ReservoirKind::ScaledOrthogonal;
    Index reservoir_factor = 2;      // Monte-Carlo reservoir width n = factor * T
    bool resample_reservoir = true;

    // double descent
    std::vector<double> gammas{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0};
    std::vector<double> panel_rhos{0.3, 1.0};
    Index fixed_size = 200;
    GammaAxis axis = GammaAxis::VaryT;

    // memory grid
    std::vector<Index> Ns{25, 50, 100, 200, 400};
    std::vector<double> rhos{0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0};
    LambdaPolicy lambda_policy = LambdaPolicy::Shared;

    // lambda sweep
    std::vector<double> lambdas = logspace(-3, 2, 60);
    double rho = 1.0;

    // shared
    Index T = 100;
    Index N = 200;
    double lambda = 1e-4;  // double descent and memory grid (shared policy)

    MonteCarloConfig mc;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
};

namespace detail {

template <typename V>
void require_increasing(const std::vector<V>& v, const char* what) {
    if (v.empty()) throw std::invalid_argument(std::string(what) + " grid is empty");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i - 1] < v[i])) throw std::invalid_argument(std::string(what) + " grid must be strictly increasing");
}

inline void require_rho(double rho) {
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
}

}  // namespace detail

/// Throws std::invalid_argument on any config error; runs before any computation.
inline void validate(const ExperimentConfig& cfg) {
    if (!(cfg.sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be >= 0");
    if (!(cfg.theta_norm >= 0.0)) throw std::invalid_argument("theta_norm must be >= 0");
    if (!(cfg.phi > 0.0 && cfg.phi <= 1.0)) throw std::invalid_argument("phi must lie in (0, 1]");
    if (cfg.grid_phi && !(*cfg.grid_phi > 0.0 && *cfg.grid_phi <= 1.0))
        throw std::invalid_argument("grid phi must lie in (0, 1]");
    if (cfg.models.empty()) throw std::invalid_argument("no models selected");
    if (cfg.reservoir_factor < 1) throw std::invalid_argument("reservoir_factor must be >= 1");
    if (cfg.T < 1 || cfg.N < 1 || cfg.fixed_size < 1) throw std::invalid_argument("sizes must be >= 1");
    if (cfg.mc.enabled && (cfg.mc.M < 100 || cfg.mc.trials < 1))
        throw std::invalid_argument("Monte-Carlo needs M >= 100 and trials >= 1");

    switch (cfg.experiment) {
        case ExperimentKind::DoubleDescent:
            detail::require_increasing(cfg.gammas, "gamma");
            for (double g : cfg.gammas)
                if (!(g > 0.0)) throw std::invalid_argument("gamma values must be > 0");
            detail::require_increasing(cfg.panel_rhos, "panel rho");
            for (double r : cfg.panel_rhos) detail::require_rho(r);
            if (!(cfg.lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
            break;
        case ExperimentKind::MemoryGrid:
            detail::require_increasing(cfg.Ns, "N");
            if (cfg.Ns.front() < 1) throw std::invalid_argument("N values must be >= 1");
            detail::require_increasing(cfg.rhos, "rho");
            for (double r : cfg.rhos) detail::require_rho(r);
            if (!(cfg.lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
            break;
        case ExperimentKind::LambdaSweep:
            detail::require_increasing(cfg.lambdas, "lambda");
            if (!(cfg.lambdas.front() > 0.0)) throw std::invalid_argument("lambda values must be > 0");
            detail::require_rho(cfg.rho);
            if (!cfg.cov.is_isotropic()) throw std::invalid_argument("lambda sweep requires isotropic inputs");
            break;
    }
}

/// One analytic (and optionally empirical) evaluation of one model.
struct ResultRow {
    double rho = 1.0;
    double gamma = 0.0;
    Index T = 0;
    Index N = 0;
    double lambda = 0.0;
    ModelTag model = ModelTag::Ridge;
    double bias2 = 0.0;
    double variance = 0.0;
    double noise = 0.0;
    double total = 0.0;
    double alpha = 0.0;
    double delta = 0.0;
    bool diverged = false;
    std::optional<double> empirical;
    std::optional<double> empirical_stderr;
};

/// One (N, rho) cell of the memory grid, both models side by side.
struct MemoryCell {
    Index N = 0;
    double rho = 1.0;
    Index T = 0;
    double phi = 1.0;
    ResultRow ridge;
    ResultRow esn;
};

struct LambdaSweepResult {
    std::vector<ResultRow> rows;
    double lambda_star = 0.0;
    std::vector<std::pair<ModelTag, double>> analytic_argmin;
    std::vector<std::pair<ModelTag, double>> empirical_argmin;
};

namespace detail {

inline ResultRow to_row(const RiskPoint& p, ModelTag tag, double noise) {
    ResultRow r;
    r.rho = p.rho;
    r.T = p.T;
    r.N = p.N;
    r.gamma = static_cast<double>(p.T) / static_cast<double>(p.N);
    r.lambda = p.lambda;
    r.model = tag;
    r.alpha = p.alpha;
    r.delta = p.delta;
    r.diverged = p.diverged;
    if (p.risk) {
        r.bias2 = p.risk->bias2;
        r.variance = p.risk->variance;
        r.noise = p.risk->noise;
        r.total = p.risk->total();
    } else {
        r.bias2 = r.variance = r.total = INFINITY;
        r.noise = noise;
    }
    return r;
}

inline AnalyticModel analytic_model(const ExperimentConfig& cfg, ModelTag tag, double rho, double phi) {
    AnalyticModel m;
    m.tag = tag;
    m.cov = cfg.cov;
    m.sigma2 = cfg.sigma2;
    m.rho = rho;
    m.theta_norm = cfg.theta_norm;
    m.phi = phi;
    return m;
}

/// Feature map and problem size for a Monte-Carlo run of `tag` at input length T.
inline std::pair<ProblemDims, FeatureMapKind> mc_setup(const ExperimentConfig& cfg, ModelTag tag, Index T, Index N,
                                                       double phi) {
    if (tag == ModelTag::Ridge) return {ProblemDims::ridge(T, N), RidgeIdentity{}};
    const Index n = cfg.reservoir_factor * T;
    auto res = generate_reservoir(n, phi, cfg.reservoir, derive_seed(cfg.seed, Stream::Reservoir, 0));
    return {ProblemDims(T, n, N), LinearEsn{std::move(res), cfg.resample_reservoir}};
}

inline TeacherSpec teacher_for(const AnalyticModel& m, Index T) { return TeacherSpec(m.teacher(T), m.sigma2); }

inline void overlay(const ExperimentConfig& cfg, const AnalyticModel& m, ResultRow& row, std::size_t workers) {
    if (!cfg.mc.enabled) return;
    auto [dims, fmap] = mc_setup(cfg, m.tag, row.T, row.N, m.phi);
    const auto er = empirical_risk(dims, cfg.cov.with_T(row.T), teacher_for(m, row.T), fmap, row.lambda,
                                   {cfg.mc.M, cfg.mc.trials, cfg.seed, workers});
    row.empirical = er.estimate;
    row.empirical_stderr = er.std_error;
}

}  // namespace detail

inline double memory_grid_phi(const ExperimentConfig& cfg, double rho) {
    return cfg.grid_phi ? *cfg.grid_phi : std::max(rho, 0.5);
}

/// Rows sorted by (panel rho, gamma, model).
inline std::vector<ResultRow> run_double_descent(const ExperimentConfig& cfg) {
    if (cfg.experiment != ExperimentKind::DoubleDescent) throw std::invalid_argument("config is not double-descent");
    validate(cfg);
    const GammaSweep sweep{cfg.gammas, cfg.fixed_size, cfg.axis, cfg.lambda};
    std::vector<ModelTag> models = cfg.models;
    std::sort(models.begin(), models.end());

    std::vector<std::tuple<double, double, ModelTag>> jobs;
    for (double rho : cfg.panel_rhos)
        for (double g : cfg.gammas)
            for (ModelTag tag : models) jobs.emplace_back(rho, g, tag);

    std::vector<ResultRow> rows(jobs.size());
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
        const auto [rho, g, tag] = jobs[i];
        const auto model = detail::analytic_model(cfg, tag, rho, cfg.phi);
        const auto [T, N] = gamma_point(sweep, g);
        rows[i] = detail::to_row(evaluate(model, T, N, cfg.lambda), tag, cfg.sigma2);
        rows[i].gamma = g;
        detail::overlay(cfg, model, rows[i], 1);
    });
    return rows;
}

/// Cells sorted by (N, rho).
inline std::vector<MemoryCell> run_memory_grid(const ExperimentConfig& cfg) {
    if (cfg.experiment != ExperimentKind::MemoryGrid) throw std::invalid_argument("config is not memory-grid");
    validate(cfg);
    std::vector<std::pair<Index, double>> jobs;
    for (Index N : cfg.Ns)
        for (double rho : cfg.rhos) jobs.emplace_back(N, rho);

    std::vector<MemoryCell> cells(jobs.size());
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
        const auto [N, rho] = jobs[i];
        MemoryCell& c = cells[i];
        c.N = N;
        c.rho = rho;
        c.T = cfg.T;
        c.phi = memory_grid_phi(cfg, rho);
        for (ModelTag tag : {ModelTag::Ridge, ModelTag::Esn}) {
            const auto model = detail::analytic_model(cfg, tag, rho, c.phi);
            const double lambda =
                cfg.lambda_policy == LambdaPolicy::Shared ? cfg.lambda : golden_section_lambda(model, cfg.T, N);
            ResultRow& row = tag == ModelTag::Ridge ? c.ridge : c.esn;
            row = detail::to_row(evaluate(model, cfg.T, N, lambda), tag, cfg.sigma2);
            detail::overlay(cfg, model, row, 1);
        }
    });
    return cells;
}

/// Rows sorted by (lambda, model); the closed-form optimum and both argmins are annotated.
inline LambdaSweepResult run_lambda_sweep(const ExperimentConfig& cfg) {
    if (cfg.experiment != ExperimentKind::LambdaSweep) throw std::invalid_argument("config is not lambda-sweep");
    validate(cfg);
    std::vector<ModelTag> models = cfg.models;
    std::sort(models.begin(), models.end());

    LambdaSweepResult out;
    const Vector theta = make_memory_teacher(cfg.T, cfg.rho, true) * cfg.theta_norm;
    if (cfg.sigma2 > 0.0) out.lambda_star = optimal_lambda(cfg.T, cfg.N, theta, cfg.sigma2).lambda_star;
    else out.lambda_star = INFINITY;

    std::vector<std::vector<ResultRow>> per_model;
    for (ModelTag tag : models) {
        const auto model = detail::analytic_model(cfg, tag, cfg.rho, cfg.phi);
        std::vector<ResultRow> rows(cfg.lambdas.size());
        parallel_for(rows.size(), cfg.workers, [&](std::size_t i) {
            rows[i] = detail::to_row(evaluate(model, cfg.T, cfg.N, cfg.lambdas[i]), tag, cfg.sigma2);
        });
        std::size_t best = 0;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].total < rows[best].total) best = i;
        out.analytic_argmin.emplace_back(tag, cfg.lambdas[best]);

        if (cfg.mc.enabled) {
            auto [dims, fmap] = detail::mc_setup(cfg, tag, cfg.T, cfg.N, cfg.phi);
            const auto er = empirical_risk_sweep(dims, cfg.cov.with_T(cfg.T), detail::teacher_for(model, cfg.T), fmap,
                                                 cfg.lambdas, {cfg.mc.M, cfg.mc.trials, cfg.seed, cfg.workers});
            std::size_t ebest = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                rows[i].empirical = er[i].estimate;
                rows[i].empirical_stderr = er[i].std_error;
                if (er[i].estimate < er[ebest].estimate) ebest = i;
            }
            out.empirical_argmin.emplace_back(tag, cfg.lambdas[ebest]);
        }
        per_model.push_back(std::move(rows));
    }
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i)
        for (auto& rows : per_model) out.rows.push_back(rows[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Tables and CSV

/// A header plus string cells; the CSV and the plotter both work from this.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::invalid_argument("table has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
    bool has_column(const std::string& name) const {
        return std::find(header.begin(), header.end(), name) != header.end();
    }
};

/// 17 significant digits: round-trips every double.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline void append_row_cells(std::vector<std::string>& cells, const ResultRow& r, bool with_mc) {
    cells.insert(cells.end(), {format_double(r.rho), format_double(r.gamma), std::to_string(r.T),
                               std::to_string(r.N), format_double(r.lambda), to_string(r.model),
                               format_double(r.bias2), format_double(r.variance), format_double(r.noise),
                               format_double(r.total), format_double(r.alpha), format_double(r.delta),
                               r.diverged ? "1" : "0"});
    if (with_mc) {
        cells.push_back(r.empirical ? format_double(*r.empirical) : "");
        cells.push_back(r.empirical_stderr ? format_double(*r.empirical_stderr) : "");
    }
}

inline std::vector<std::string> row_header(bool with_mc) {
    std::vector<std::string> h{"rho",   "gamma", "T",     "N",     "lambda", "model",   "bias2",
                               "variance", "noise", "total", "alpha", "delta",  "diverged"};
    if (with_mc) h.insert(h.end(), {"empirical", "empirical_stderr"});
    return h;
}

}  // namespace detail

inline Table double_descent_table(const std::vector<ResultRow>& rows, bool with_mc) {
    Table t;
    t.header = detail::row_header(with_mc);
    for (const auto& r : rows) detail::append_row_cells(t.rows.emplace_back(), r, with_mc);
    return t;
}

inline Table lambda_sweep_table(const LambdaSweepResult& res, bool with_mc) {
    Table t;
    t.header = detail::row_header(with_mc);
    t.header.push_back("lambda_star");
    for (const auto& r : res.rows) {
        auto& cells = t.rows.emplace_back();
        detail::append_row_cells(cells, r, with_mc);
        cells.push_back(format_double(res.lambda_star));
    }
    return t;
}

/// Differences are ridge minus ESN: positive means the ESN does better.
inline Table memory_grid_table(const std::vector<MemoryCell>& cells, bool with_mc) {
    Table t;
    t.header = {"N",           "rho",        "T",          "phi",           "ridge_lambda",   "esn_lambda",
                "ridge_bias2", "ridge_variance", "ridge_total", "esn_bias2", "esn_variance", "esn_total",
                "diff_bias2",  "diff_variance",  "diff_total",  "ridge_alpha", "esn_alpha", "ridge_diverged",
                "esn_diverged"};
    if (with_mc) t.header.insert(t.header.end(), {"ridge_empirical", "ridge_stderr", "esn_empirical", "esn_stderr"});
    for (const auto& c : cells) {
        const auto& r = c.ridge;
        const auto& e = c.esn;
        auto& row = t.rows.emplace_back();
        row = {std::to_string(c.N),           format_double(c.rho),        std::to_string(c.T),
               format_double(c.phi),          format_double(r.lambda),     format_double(e.lambda),
               format_double(r.bias2),        format_double(r.variance),   format_double(r.total),
               format_double(e.bias2),        format_double(e.variance),   format_double(e.total),
               format_double(r.bias2 - e.bias2), format_double(r.variance - e.variance),
               format_double(r.total - e.total), format_double(r.alpha),   format_double(e.alpha),
               r.diverged ? "1" : "0",        e.diverged ? "1" : "0"};
        if (with_mc) {
            for (const auto* x : {&r, &e}) {
                row.push_back(x->empirical ? format_double(*x->empirical) : "");
                row.push_back(x->empirical_stderr ? format_double(*x->empirical_stderr) : "");
            }
        }
    }
    return t;
}

inline void write_csv(std::ostream& os, const Table& t) {
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            os << cells[i];
        }
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

/// Inverse of write_csv (no quoting: no cell ever contains a comma).
inline Table parse_csv(std::istream& is) {
    Table t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::size_t start = 0;
        for (;;) {
            const auto comma = s.find(',', start);
            out.push_back(s.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    };
    if (!std::getline(is, line) || line.empty()) throw std::invalid_argument("CSV has no header");
    t.header = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size()) throw std::invalid_argument("CSV row has the wrong number of cells");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

/// Experiment type of a table, from its header.
inline ExperimentKind detect_kind(const Table& t) {
    if (t.has_column("diff_total")) return ExperimentKind::MemoryGrid;
    if (t.has_column("lambda_star")) return ExperimentKind::LambdaSweep;
    if (t.has_column("gamma")) return ExperimentKind::DoubleDescent;
    throw std::invalid_argument("unrecognized results table");
}

}  // namespace esn_rmt
