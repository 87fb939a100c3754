#pragma once

// Analytic risk over sweep grids (gamma, lambda, or N x rho), plus a
// golden-section search for the risk-minimizing lambda.

#include "esn_rmt/core.hpp"
#include "esn_rmt/theory.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace esn_rmt {

enum class ModelTag { Ridge, Esn };

inline const char* to_string(ModelTag m) { return m == ModelTag::Ridge ? "ridge" : "esn"; }

/// Everything needed to evaluate the analytic risk at any (T, N, lambda).
struct AnalyticModel {
    ModelTag tag = ModelTag::Ridge;
    CovarianceSpec cov = CovarianceSpec::isotropic(1);  // resized to T on evaluation
    double sigma2 = 1.0;
    double rho = 1.0;         // memory teacher rho^lag ...
    double theta_norm = 1.0;  // ... scaled to this norm
    std::optional<Vector> theta;  // explicit theta*, overrides rho / theta_norm
    double phi = 0.9;             // ESN only
    KernelConvention kernel{};

    Vector teacher(Index T) const {
        if (theta) {
            if (theta->size() != T) throw std::invalid_argument("AnalyticModel: explicit theta has the wrong length");
            return *theta;
        }
        return make_memory_teacher(T, rho, true) * theta_norm;
    }
};

struct RiskPoint {
    Index T = 0;
    Index N = 0;
    double lambda = 0.0;
    double rho = 1.0;
    std::optional<RiskDecomposition> risk;  // empty when diverged
    double alpha = 0.0;
    double delta = 0.0;
    bool diverged = false;

    double total() const { return risk ? risk->total() : INFINITY; }
};

/// One analytic evaluation: the general risk on Sigma_u for ridge, the spectral
/// ESN form for the ESN. alpha >= 1 is recorded as a diverged point.
inline RiskPoint evaluate(const AnalyticModel& model, Index T, Index N, double lambda) {
    RiskPoint p;
    p.T = T;
    p.N = N;
    p.lambda = lambda;
    p.rho = model.rho;
    const Matrix sigma_u = materialize_covariance(model.cov.with_T(T));
    const Vector theta = model.teacher(T);
    try {
        if (model.tag == ModelTag::Ridge) {
            const auto fp = solve_fixed_point(sigma_u, N, lambda);
            p.risk = general_risk(SecondOrderStats::ridge(sigma_u), theta, model.sigma2, fp);
            p.alpha = fp.alpha;
            p.delta = fp.delta;
        } else {
            auto [risk, spectral] = spectral_esn_risk(sigma_u, theta, model.sigma2, model.phi, lambda, N, model.kernel);
            p.risk = risk;
            p.alpha = spectral.alpha;
            p.delta = spectral.delta;
        }
    } catch (const InterpolationThresholdError& e) {
        p.diverged = true;
        p.alpha = e.alpha();
    }
    return p;
}

enum class GammaAxis { VaryT, VaryN };

struct GammaSweep {
    std::vector<double> gammas;  // T / N
    Index fixed = 200;           // N when varying T, T when varying N
    GammaAxis axis = GammaAxis::VaryT;
    double lambda = 1e-4;
};

struct LambdaSweep {
    Index T = 100;
    Index N = 200;
    std::vector<double> lambdas;
};

struct MemoryGridSweep {
    Index T = 100;
    std::vector<Index> Ns;
    std::vector<double> rhos;
    double lambda = 0.1;
};

using SweepSpec = std::variant<GammaSweep, LambdaSweep, MemoryGridSweep>;

inline Index rounded_positive(double x) {
    const auto v = static_cast<Index>(std::llround(x));
    if (v < 1) throw std::invalid_argument("sweep grid point rounds to a size below 1");
    return v;
}

/// (T, N) for a gamma grid point.
inline std::pair<Index, Index> gamma_point(const GammaSweep& s, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
    if (s.axis == GammaAxis::VaryT) return {rounded_positive(gamma * static_cast<double>(s.fixed)), s.fixed};
    return {s.fixed, rounded_positive(static_cast<double>(s.fixed) / gamma)};
}

/// One analytic row per grid point, in grid order.
inline std::vector<RiskPoint> risk_curve(const SweepSpec& sweep, const AnalyticModel& model) {
    std::vector<RiskPoint> rows;
    if (const auto* g = std::get_if<GammaSweep>(&sweep)) {
        if (g->gammas.empty()) throw std::invalid_argument("risk_curve: empty gamma grid");
        for (double gamma : g->gammas) {
            const auto [T, N] = gamma_point(*g, gamma);
            rows.push_back(evaluate(model, T, N, g->lambda));
        }
    } else if (const auto* l = std::get_if<LambdaSweep>(&sweep)) {
        if (l->lambdas.empty()) throw std::invalid_argument("risk_curve: empty lambda grid");
        for (double lambda : l->lambdas) rows.push_back(evaluate(model, l->T, l->N, lambda));
    } else {
        const auto& m = std::get<MemoryGridSweep>(sweep);
        if (m.Ns.empty() || m.rhos.empty()) throw std::invalid_argument("risk_curve: empty memory grid");
        for (Index N : m.Ns) {
            for (double rho : m.rhos) {
                AnalyticModel cell = model;
                cell.rho = rho;
                rows.push_back(evaluate(cell, m.T, N, m.lambda));
            }
        }
    }
    return rows;
}

/// n log-spaced values from 10^lo to 10^hi inclusive.
inline std::vector<double> logspace(double lo_exp, double hi_exp, int n) {
    if (n < 1) throw std::invalid_argument("logspace: need at least one point");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double e = n == 1 ? lo_exp : lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) / (n - 1);
        v[static_cast<std::size_t>(i)] = std::pow(10.0, e);
    }
    return v;
}

/// Index of the smallest total among non-diverged rows.
inline std::size_t argmin_total(const std::vector<RiskPoint>& rows) {
    if (rows.empty()) throw std::invalid_argument("argmin_total: no rows");
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].total() < rows[best].total()) best = i;
    return best;
}

/// Golden-section search for the analytic risk minimizer on [lo, hi] in log-lambda.
/// Used for anisotropic inputs, where no closed-form optimum is available.
inline double golden_section_lambda(const AnalyticModel& model, Index T, Index N, double lo = 1e-6, double hi = 1e3,
                                    double tol = 1e-6) {
    if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("golden_section_lambda: need 0 < lo < hi");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(lo), b = std::log(hi);
    auto f = [&](double x) { return evaluate(model, T, N, std::exp(x)).total(); };
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return std::exp(0.5 * (a + b));
}

}  // namespace esn_rmt
