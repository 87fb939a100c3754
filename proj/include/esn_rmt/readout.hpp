#pragma once

// Ridge readout w_out = (Z Z^T / N + lambda I)^{-1} Z y / N, prediction, and
// Monte-Carlo estimation of the out-of-sample risk E[(w_out^T z' - y')^2].

#include "esn_rmt/core.hpp"
#include "esn_rmt/datagen.hpp"
#include "esn_rmt/parallel.hpp"
#include "esn_rmt/reservoir.hpp"
#include "esn_rmt/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace esn_rmt {

struct RidgeReadout {
    Vector w_out;
    double lambda = 0.0;
};

inline void check_fit_args(const Matrix& Z, const Vector& y, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("fit: lambda must be > 0");
    if (Z.cols() != y.size()) throw std::invalid_argument("fit: Z has " + std::to_string(Z.cols()) +
                                                          " samples but y has " + std::to_string(y.size()));
    if (Z.cols() < 1) throw std::invalid_argument("fit: need at least one sample");
}

/// (Z Z^T / N + lambda I_n) w = Z y / N, solved by Cholesky.
inline RidgeReadout fit_primal(const Matrix& Z, const Vector& y, double lambda) {
    check_fit_args(Z, y, lambda);
    const double N = static_cast<double>(Z.cols());
    Matrix A = Matrix::Identity(Z.rows(), Z.rows()) * lambda;
    A.selfadjointView<Eigen::Lower>().rankUpdate(Z, 1.0 / N);
    Eigen::LLT<Matrix> llt(A.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw std::runtime_error("fit: Cholesky factorization failed");
    return {llt.solve(Z * y / N), lambda};
}

/// Dual form w = Z (Z^T Z / N + lambda I_N)^{-1} y / N, cheaper when n > N.
inline RidgeReadout fit_dual(const Matrix& Z, const Vector& y, double lambda) {
    check_fit_args(Z, y, lambda);
    const double N = static_cast<double>(Z.cols());
    Matrix K = Matrix::Identity(Z.cols(), Z.cols()) * lambda;
    K.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose(), 1.0 / N);
    Eigen::LLT<Matrix> llt(K.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw std::runtime_error("fit: Cholesky factorization failed");
    return {Z * llt.solve(y) / N, lambda};
}

inline RidgeReadout fit(const Matrix& Z, const Vector& y, double lambda) {
    return Z.rows() > Z.cols() ? fit_dual(Z, y, lambda) : fit_primal(Z, y, lambda);
}

inline Vector predict(const RidgeReadout& readout, const Matrix& Z_test) {
    if (Z_test.rows() != readout.w_out.size()) throw std::invalid_argument("predict: feature dimension mismatch");
    return Z_test.transpose() * readout.w_out;
}

/// Normal-equation residual ||Z (Z^T w - y) / N + lambda w||.
inline double normal_equation_residual(const Matrix& Z, const Vector& y, const RidgeReadout& r) {
    const double N = static_cast<double>(Z.cols());
    return (Z * (Z.transpose() * r.w_out - y) / N + r.lambda * r.w_out).norm();
}

struct EmpiricalRisk {
    double estimate = 0.0;
    double std_error = 0.0;
    Index M = 0;
    Index trials = 0;
    std::vector<double> per_trial;
};

struct MonteCarloOptions {
    Index M = 2000;
    Index trials = 20;
    std::uint64_t seed = 0;
    std::size_t workers = 0;  // 0: ESN_RMT_THREADS / hardware
};

namespace detail {

/// Mean by pairwise summation; deterministic for a given ordering.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline EmpiricalRisk aggregate(std::vector<double> per_trial, Index M) {
    EmpiricalRisk r;
    r.M = M;
    r.trials = static_cast<Index>(per_trial.size());
    const double k = static_cast<double>(per_trial.size());
    r.estimate = pairwise_sum(per_trial) / k;
    if (per_trial.size() > 1) {
        std::vector<double> sq(per_trial.size());
        for (std::size_t i = 0; i < per_trial.size(); ++i) sq[i] = (per_trial[i] - r.estimate) * (per_trial[i] - r.estimate);
        r.std_error = std::sqrt(pairwise_sum(sq) / (k - 1.0)) / std::sqrt(k);
    }
    r.per_trial = std::move(per_trial);
    return r;
}

}  // namespace detail

/// Monte-Carlo risk for each lambda in `lambdas`. Every lambda of a trial sees
/// the same training/test draw (common random numbers), and trial i uses
/// substream i of the seed, so results do not depend on the worker count.
inline std::vector<EmpiricalRisk> empirical_risk_sweep(const ProblemDims& dims, const CovarianceSpec& cov,
                                                       const TeacherSpec& teacher, const FeatureMapKind& fmap,
                                                       std::span<const double> lambdas,
                                                       const MonteCarloOptions& opts) {
    if (opts.M < 100) throw std::invalid_argument("empirical_risk: M must be >= 100");
    if (opts.trials < 1) throw std::invalid_argument("empirical_risk: trials must be >= 1");
    if (lambdas.empty()) throw std::invalid_argument("empirical_risk: no lambda values");
    for (double l : lambdas)
        if (!(l > 0.0)) throw std::invalid_argument("empirical_risk: lambda must be > 0");
    check_dims(dims, cov);
    if (teacher.T() != dims.T()) throw std::invalid_argument("empirical_risk: teacher length does not match T");
    if (feature_dim(fmap, dims.T()) != dims.n()) throw std::invalid_argument("empirical_risk: feature dimension != n");

    const InputSampler sampler(cov);
    const auto* esn = std::get_if<LinearEsn>(&fmap);
    Matrix fixed_S;
    if (esn && !esn->resample_per_trial) fixed_S = memory_matrix(esn->reservoir, dims.T());

    const auto trials = static_cast<std::size_t>(opts.trials);
    std::vector<std::vector<double>> mse(lambdas.size(), std::vector<double>(trials));

    parallel_for(trials, opts.workers, [&](std::size_t trial) {
        const std::uint64_t trial_seed = derive_seed(opts.seed, Stream::Trial, trial);
        auto train_in = make_rng(trial_seed, Stream::TrainInputs);
        auto train_noise = make_rng(trial_seed, Stream::TrainNoise);
        auto test_in = make_rng(trial_seed, Stream::TestInputs);
        auto test_noise = make_rng(trial_seed, Stream::TestNoise);

        const Matrix U = sampler.sample(dims.N(), train_in);
        const Vector y = label_with(U, teacher, train_noise);
        const Matrix U_test = sampler.sample(opts.M, test_in);
        const Vector y_test = label_with(U_test, teacher, test_noise);

        // z = S u is the unrolled recurrence; it avoids T dense n x n products per sample.
        Matrix Z, Z_test;
        if (esn) {
            Matrix S = fixed_S;
            if (esn->resample_per_trial) {
                const auto& r = esn->reservoir;
                S = memory_matrix(generate_reservoir(r.n(), r.phi(), r.kind(), derive_seed(r.seed(), Stream::Trial, trial)),
                                  dims.T());
            }
            Z = S * U;
            Z_test = S * U_test;
        } else {
            Z = U;
            Z_test = U_test;
        }

        for (std::size_t k = 0; k < lambdas.size(); ++k) {
            const RidgeReadout readout = fit(Z, y, lambdas[k]);
            mse[k][trial] = (predict(readout, Z_test) - y_test).squaredNorm() / static_cast<double>(opts.M);
        }
    });

    std::vector<EmpiricalRisk> out;
    out.reserve(lambdas.size());
    for (auto& v : mse) out.push_back(detail::aggregate(std::move(v), opts.M));
    return out;
}

inline EmpiricalRisk empirical_risk(const ProblemDims& dims, const CovarianceSpec& cov, const TeacherSpec& teacher,
                                    const FeatureMapKind& fmap, double lambda, const MonteCarloOptions& opts) {
    const double l[] = {lambda};
    return std::move(empirical_risk_sweep(dims, cov, teacher, fmap, l, opts).front());
}

}  // namespace esn_rmt
