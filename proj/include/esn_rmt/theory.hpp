#pragma once

// Deterministic-equivalent risk of a ridge readout on fixed features.
//
//   delta = (1/N) Tr(Sigma_z Qbar),  Qbar = (Sigma_z / (1+delta) + lambda I)^{-1}
//   alpha = (1/N) || Sigma_z Qbar / (1+delta) ||_F^2
//   B^2   = [ theta' Su theta - 2 theta' Suz Qbar Suz' theta / (1+delta)
//             + theta' Suz Qbar Sz Qbar Suz' theta / (1+delta)^2 ] / (1 - alpha)
//   V     = sigma^2 alpha / (1 - alpha),   R = B^2 + V + sigma^2
//
// All iterations run on the eigenvalues of Sigma_z, which are computed once.

#include "esn_rmt/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace esn_rmt {

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, long iterations)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + " after " +
                             std::to_string(iterations) + " iterations)"),
          residual_(residual),
          iterations_(iterations) {}
    double residual() const { return residual_; }
    long iterations() const { return iterations_; }

private:
    double residual_;
    long iterations_;
};

/// alpha >= 1: the asymptotic bias and variance diverge.
class InterpolationThresholdError : public std::runtime_error {
public:
    explicit InterpolationThresholdError(double alpha)
        : std::runtime_error("interpolation threshold reached (alpha = " + std::to_string(alpha) + ")"),
          alpha_(alpha) {}
    double alpha() const { return alpha_; }

private:
    double alpha_;
};

/// The bias bracket came out clearly negative: the statistics are inconsistent.
class InconsistencyError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FixedPointOptions {
    double damping = 0.5;
    long max_iter = 100000;
    /// Damped steps tried before switching to bisection.
    long damped_budget = 2000;
    /// Convergence: |delta - map(delta)| <= tol * max(1, delta).
    double tol = 1e-12;
};

/// map(delta) = (1/N) sum_i mu_i / (mu_i / (1+delta) + lambda).
inline double delta_map(std::span<const double> mu, double N, double lambda, double delta) {
    double s = 0.0;
    for (double m : mu) s += m / (m / (1.0 + delta) + lambda);
    return s / N;
}

struct DeltaSolution {
    double delta = 0.0;
    long iterations = 0;
    double residual = 0.0;
};

/// Root of delta = map(delta) to the relative tolerance in `opts`.
inline DeltaSolution bracket_delta(std::span<const double> mu, Index N, double lambda, const FixedPointOptions& opts = {}) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_fixed_point: lambda must be > 0");
    if (N < 1) throw std::invalid_argument("solve_fixed_point: N must be >= 1");
    const double n_samples = static_cast<double>(N);
    double trace = 0.0;
    for (double m : mu) {
        if (m < 0.0) throw std::invalid_argument("solve_fixed_point: spectrum must be nonnegative");
        trace += m;
    }
    if (trace == 0.0) return {0.0, 0, 0.0};

    const double upper = trace / (n_samples * lambda);
    auto residual_at = [&](double d) { return std::abs(d - delta_map(mu, n_samples, lambda, d)); };
    auto converged = [&](double d, double r) { return r <= opts.tol * std::max(1.0, d); };

    // Damped iteration from the upper bound; map is increasing and concave so
    // the iterates decrease monotonically towards the root.
    double delta = upper;
    double prev_residual = residual_at(delta);
    long it = 0;
    for (; it < std::min(opts.damped_budget, opts.max_iter); ++it) {
        const double next = delta_map(mu, n_samples, lambda, delta);
        const double r = std::abs(delta - next);
        if (converged(delta, r)) return {delta, it, r};
        if (r > prev_residual) break;  // oscillation
        prev_residual = r;
        delta = (1.0 - opts.damping) * delta + opts.damping * next;
    }

    // Bisection in kappa = lambda (1 + delta) on f(kappa) = kappa g(kappa) - lambda, where
    // g(kappa) = 1/(1+delta) = (1 - n/N) + (1/N) sum kappa/(mu + kappa). f has a single
    // sign change on (0, inf), and this form stays exact when delta >> 1/eps.
    const double dim = static_cast<double>(mu.size());
    auto f = [&](double kappa) {
        double s = 0.0;
        for (double m : mu) s += kappa / (m + kappa);
        return kappa * ((1.0 - dim / n_samples) + s / n_samples) - lambda;
    };
    double lo = lambda, hi = lambda * (1.0 + upper);
    while (it < opts.max_iter) {
        ++it;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    const double kappa = std::abs(f(lo)) < std::abs(f(hi)) ? lo : hi;
    delta = std::max(0.0, kappa / lambda - 1.0);
    const double r = residual_at(delta);
    if (!converged(delta, r)) throw ConvergenceError("fixed point did not converge", r, it);
    return {delta, it, r};
}

namespace detail {

/// Newton steps on d - map(d) (the map's slope is alpha) down to rounding level.
inline DeltaSolution polish_delta(std::span<const double> mu, Index N, double lambda, DeltaSolution s) {
    const double n_samples = static_cast<double>(N);
    for (int k = 0; k < 8 && s.residual > 0.0; ++k) {
        double slope = 0.0;
        for (double m : mu) {
            const double a = m / (1.0 + s.delta);
            slope += (a / (a + lambda)) * (a / (a + lambda));
        }
        slope /= n_samples;
        if (!(slope < 1.0)) break;
        const double r = s.delta - delta_map(mu, n_samples, lambda, s.delta);
        const double next = std::max(0.0, s.delta - r / (1.0 - slope));
        const double next_r = std::abs(next - delta_map(mu, n_samples, lambda, next));
        if (!(next_r < s.residual)) break;
        s.delta = next;
        s.residual = next_r;
        ++s.iterations;
    }
    return s;
}

}  // namespace detail

/// Unique nonnegative root of delta = map(delta) for a PSD spectrum mu.
inline DeltaSolution solve_delta(std::span<const double> mu, Index N, double lambda, const FixedPointOptions& opts = {}) {
    return detail::polish_delta(mu, N, lambda, bracket_delta(mu, N, lambda, opts));
}

/// Effective complexity in its resolvent form, (1/N) sum (mu/(1+delta) * Qbar_ii)^2. Throws at alpha >= 1.
inline double compute_alpha(std::span<const double> mu, double delta, double lambda, Index N) {
    double s = 0.0;
    for (double m : mu) {
        const double a = m / (1.0 + delta);
        const double t = a / (a + lambda);
        s += t * t;
    }
    const double alpha = s / static_cast<double>(N);
    if (!(alpha < 1.0)) throw InterpolationThresholdError(alpha);
    return alpha;
}

/// Same quantity written as (1/N) sum mu^2 / (mu + lambda(1+delta))^2.
inline double alpha_spectral_form(std::span<const double> mu, double delta, double lambda, Index N) {
    const double kappa = lambda * (1.0 + delta);
    double s = 0.0;
    for (double m : mu) s += m * m / ((m + kappa) * (m + kappa));
    return s / static_cast<double>(N);
}

struct FixedPointSolution {
    double delta = 0.0;
    double alpha = 0.0;
    Matrix q_bar;
    double lambda = 0.0;
    long iterations = 0;
    double residual = 0.0;
    Index N = 0;
    Vector spectrum;  // eigenvalues of Sigma_z, ascending
    Matrix basis;     // matching eigenvectors
};

inline FixedPointSolution solve_fixed_point(const Matrix& sigma_z, Index N, double lambda,
                                            const FixedPointOptions& opts = {}) {
    if (sigma_z.rows() != sigma_z.cols()) throw std::invalid_argument("solve_fixed_point: sigma_z must be square");
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_fixed_point: lambda must be > 0");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(sigma_z));
    if (eig.info() != Eigen::Success) throw std::runtime_error("solve_fixed_point: eigendecomposition failed");

    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    Vector mu = eig.eigenvalues();
    for (Index i = 0; i < mu.size(); ++i) {
        if (mu[i] < -kPsdTolerance * scale) throw std::invalid_argument("solve_fixed_point: sigma_z is not PSD");
        mu[i] = std::max(mu[i], 0.0);
    }

    const std::span<const double> spec(mu.data(), static_cast<std::size_t>(mu.size()));
    const DeltaSolution ds = solve_delta(spec, N, lambda, opts);

    FixedPointSolution fp;
    fp.delta = ds.delta;
    fp.lambda = lambda;
    fp.iterations = ds.iterations;
    fp.residual = ds.residual;
    fp.N = N;
    fp.alpha = compute_alpha(spec, ds.delta, lambda, N);
    const Vector qdiag = (mu.array() / (1.0 + ds.delta) + lambda).inverse().matrix();
    fp.q_bar = symmetrized(eig.eigenvectors() * qdiag.asDiagonal() * eig.eigenvectors().transpose());
    fp.spectrum = std::move(mu);
    fp.basis = eig.eigenvectors();
    return fp;
}

/// alpha from the matrix definition, for cross-checking the spectral forms.
inline double alpha_matrix_form(const Matrix& sigma_z, const FixedPointSolution& fp) {
    return (sigma_z * fp.q_bar / (1.0 + fp.delta)).squaredNorm() / static_cast<double>(fp.N);
}

struct RiskDecomposition {
    double bias2 = 0.0;
    double variance = 0.0;
    double noise = 0.0;
    double total() const { return bias2 + variance + noise; }
};

/// Asymptotic bias/variance for arbitrary fixed features with statistics `stats`.
inline RiskDecomposition general_risk(const SecondOrderStats& stats, const Vector& theta_star, double sigma2,
                                       const FixedPointSolution& fp) {
    if (theta_star.size() != stats.T()) throw std::invalid_argument("general_risk: theta_star must have length T");
    if (fp.q_bar.rows() != stats.n()) throw std::invalid_argument("general_risk: fixed point has the wrong dimension");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("general_risk: sigma2 must be >= 0");
    if (!(fp.alpha < 1.0)) throw InterpolationThresholdError(fp.alpha);

    const double one_plus = 1.0 + fp.delta;
    const double signal = theta_star.dot(stats.sigma_u() * theta_star);
    const Vector p = stats.sigma_uz().transpose() * theta_star;
    const Vector qp = fp.q_bar * p;
    const double cross = p.dot(qp);
    const double fitted = qp.dot(stats.sigma_z() * qp);
    double bracket = signal - 2.0 * cross / one_plus + fitted / (one_plus * one_plus);

    if (bracket < 0.0) {
        if (bracket < -std::max(1e-10, 1e-6 * signal)) {
            throw InconsistencyError("general_risk: negative bias bracket " + std::to_string(bracket));
        }
        bracket = 0.0;
    }
    const double inflation = 1.0 / (1.0 - fp.alpha);
    return {bracket * inflation, sigma2 * fp.alpha * inflation, sigma2};
}

// ---------------------------------------------------------------------------
// Linear ESN in spectral form.

/// Leak kernel D = diag(phi^{exponent * (T - t)}), t = 1..T. The default
/// exponent 2 is the Gram matrix S^T S of a phi-scaled orthogonal reservoir;
/// exponent -1 is the kernel as in its literal printed form.
struct KernelConvention {
    double exponent = 2.0;
    static KernelConvention decaying() { return {2.0}; }
    static KernelConvention literal() { return {-1.0}; }
};

inline Vector leak_kernel(Index T, double phi, KernelConvention conv = {}) {
    if (T < 1) throw std::invalid_argument("leak_kernel: T must be >= 1");
    if (!(phi > 0.0 && phi <= 1.0)) throw std::invalid_argument("leak_kernel: phi must lie in (0, 1]");
    Vector d(T);
    for (Index t = 0; t < T; ++t) d[t] = std::pow(phi, conv.exponent * static_cast<double>(T - 1 - t));
    return d;
}

/// Sigma_u^{1/2} D Sigma_u^{1/2}.
inline Matrix effective_kernel_matrix(const Matrix& sigma_u_root, const Vector& kernel) {
    return symmetrized(sigma_u_root * kernel.asDiagonal() * sigma_u_root);
}

/// Reservoir-averaged ESN statistics: Sigma_z = Sigma_u^{1/2} D Sigma_u^{1/2} =: K and
/// Sigma_uz = Sigma_u^{1/2} K^{1/2}. Any factor B with B^T B = K gives the same risk.
inline SecondOrderStats effective_esn_stats(const Matrix& sigma_u, double phi, KernelConvention conv = {}) {
    const Matrix root = psd_sqrt(sigma_u);
    const Matrix K = effective_kernel_matrix(root, leak_kernel(sigma_u.rows(), phi, conv));
    return {sigma_u, K, root * psd_sqrt(K)};
}

struct SpectralRisk {
    Vector mu;       // descending
    Matrix V_basis;  // columns v_t
    Vector alpha_t;
    Vector beta_t;
    double phi = 1.0;
    double delta = 0.0;
    double alpha = 0.0;
};

/// Spectral ESN risk:
///   B^2 = (1+delta)^2/(1-alpha) sum_t alpha_t (theta' Su^{1/2} v_t)^2
///   V   = sigma^2/(N(1-alpha)) sum_t mu_t beta_t
/// with alpha_t = lambda^2/(mu_t + lambda(1+delta))^2, beta_t = mu_t/(mu_t + lambda(1+delta))^2.
inline std::pair<RiskDecomposition, SpectralRisk> spectral_esn_risk(const Matrix& sigma_u, const Vector& theta_star,
                                                                  double sigma2, double phi, double lambda, Index N,
                                                                  KernelConvention conv = {},
                                                                  const FixedPointOptions& opts = {}) {
    if (sigma_u.rows() != sigma_u.cols()) throw std::invalid_argument("spectral_esn_risk: sigma_u must be square");
    if (theta_star.size() != sigma_u.rows()) throw std::invalid_argument("spectral_esn_risk: theta_star must have length T");
    if (!(lambda > 0.0)) throw std::invalid_argument("spectral_esn_risk: lambda must be > 0");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("spectral_esn_risk: sigma2 must be >= 0");

    const Index T = sigma_u.rows();
    const Matrix root = psd_sqrt(sigma_u);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(effective_kernel_matrix(root, leak_kernel(T, phi, conv)));
    if (eig.info() != Eigen::Success) throw std::runtime_error("spectral_esn_risk: eigendecomposition failed");

    SpectralRisk sr;
    sr.phi = phi;
    sr.mu = eig.eigenvalues().reverse().cwiseMax(0.0);
    sr.V_basis = eig.eigenvectors().rowwise().reverse();

    const std::span<const double> spec(sr.mu.data(), static_cast<std::size_t>(T));
    sr.delta = solve_delta(spec, N, lambda, opts).delta;
    sr.alpha = compute_alpha(spec, sr.delta, lambda, N);

    const double kappa = lambda * (1.0 + sr.delta);
    const Eigen::ArrayXd denom = (sr.mu.array() + kappa).square();
    sr.alpha_t = (lambda * lambda / denom).matrix();
    sr.beta_t = (sr.mu.array() / denom).matrix();

    const Vector proj = sr.V_basis.transpose() * (root * theta_star);
    const double one_plus = 1.0 + sr.delta;
    const double inflation = 1.0 / (1.0 - sr.alpha);
    RiskDecomposition risk;
    risk.bias2 = one_plus * one_plus * inflation * sr.alpha_t.dot(proj.cwiseAbs2());
    risk.variance = sigma2 * inflation * sr.mu.dot(sr.beta_t) / static_cast<double>(N);
    risk.noise = sigma2;
    return {risk, std::move(sr)};
}

// ---------------------------------------------------------------------------

struct OptimalRegularization {
    double lambda_star = 0.0;
    double snr = 0.0;
    /// The closed form only holds for Sigma_u = I; the caller vouches for it.
    bool assumes_isotropic = true;
};

/// lambda* = (T/N) * SNR with SNR = ||theta*||^2 / sigma^2, for isotropic inputs.
inline OptimalRegularization optimal_lambda(Index T, Index N, const Vector& theta_star, double sigma2) {
    if (T < 1 || N < 1) throw std::invalid_argument("optimal_lambda: T and N must be >= 1");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("optimal_lambda: sigma2 must be > 0 (SNR undefined)");
    const double snr = theta_star.squaredNorm() / sigma2;
    return {static_cast<double>(T) / static_cast<double>(N) * snr, snr, true};
}

}  // namespace esn_rmt
