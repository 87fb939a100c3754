#pragma once

// Teacher-student datasets: Gaussian inputs u = Sigma_u^{1/2} g and noisy
// linear labels y = theta*^T u + eps.

#include "esn_rmt/core.hpp"
#include "esn_rmt/rng.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>

namespace esn_rmt {

struct Dataset {
    Matrix U;  // T x count, columns are samples
    Vector y;
    std::uint64_t seed = 0;
};

inline Matrix standard_normal(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) g(i, j) = gauss(rng);
    return g;
}

/// Draws columns from N(0, Sigma_u). The square root is computed once.
class InputSampler {
public:
    explicit InputSampler(const CovarianceSpec& cov)
        : T_(cov.T()), identity_(cov.is_isotropic()) {
        if (!identity_) root_ = psd_sqrt(materialize_covariance(cov));
    }

    Index T() const { return T_; }

    Matrix sample(Index count, Rng& rng) const {
        if (count < 1) throw std::invalid_argument("sample_inputs: count must be >= 1");
        Matrix g = standard_normal(T_, count, rng);
        if (identity_) return g;
        return root_ * g;
    }

private:
    Index T_;
    bool identity_;
    Matrix root_;
};

inline Vector label_with(const Matrix& U, const TeacherSpec& teacher, Rng& noise_rng) {
    if (U.rows() != teacher.T()) {
        throw std::invalid_argument("label: U has " + std::to_string(U.rows()) + " rows but theta_star has length " +
                                    std::to_string(teacher.T()));
    }
    Vector y = U.transpose() * teacher.theta_star();
    if (teacher.sigma2() > 0.0) {
        std::normal_distribution<double> gauss(0.0, std::sqrt(teacher.sigma2()));
        for (Index i = 0; i < y.size(); ++i) y[i] += gauss(noise_rng);
    }
    return y;
}

inline void check_dims(const ProblemDims& dims, const CovarianceSpec& cov) {
    if (cov.T() != dims.T()) throw std::invalid_argument("covariance size does not match T");
}

/// `count` i.i.d. inputs from N(0, Sigma_u); a pure function of its arguments.
inline Matrix sample_inputs(const ProblemDims& dims, const CovarianceSpec& cov, Index count, std::uint64_t seed) {
    check_dims(dims, cov);
    auto rng = make_rng(seed, Stream::TrainInputs);
    return InputSampler(cov).sample(count, rng);
}

/// Labels y_i = theta*^T u_i + eps_i. The noise stream is separate from the input stream.
inline Vector label(const Matrix& U, const TeacherSpec& teacher, std::uint64_t seed) {
    auto rng = make_rng(seed, Stream::TrainNoise);
    return label_with(U, teacher, rng);
}

inline Dataset make_training_set(const ProblemDims& dims, const CovarianceSpec& cov, const TeacherSpec& teacher,
                                 std::uint64_t seed) {
    Matrix U = sample_inputs(dims, cov, dims.N(), seed);
    Vector y = label(U, teacher, seed);
    return {std::move(U), std::move(y), seed};
}

/// M fresh pairs from the same law, drawn from the test-domain streams of `seed`.
inline Dataset make_test_set(const ProblemDims& dims, const CovarianceSpec& cov, const TeacherSpec& teacher, Index M,
                             std::uint64_t seed) {
    check_dims(dims, cov);
    if (M < 1) throw std::invalid_argument("make_test_set: M must be >= 1");
    auto input_rng = make_rng(seed, Stream::TestInputs);
    auto noise_rng = make_rng(seed, Stream::TestNoise);
    Matrix U = InputSampler(cov).sample(M, input_rng);
    Vector y = label_with(U, teacher, noise_rng);
    return {std::move(U), std::move(y), seed};
}

}  // namespace esn_rmt
