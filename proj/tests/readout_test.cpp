#include "esn_rmt/readout.hpp"
#include "esn_rmt/theory.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <numeric>

using namespace esn_rmt;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    auto rng = make_rng(seed, Stream::TrainInputs, 1000);
    return standard_normal(r, c, rng);
}

}  // namespace

TEST(Fit, IdentityDesignClosedForm) {
    // ((1/N) I + lambda I)^{-1} (1/N) y = y / (1 + lambda N).
    const Index n = 7;
    const double lambda = 0.3;
    const Vector y = random_matrix(n, 1, 1).col(0);
    const auto r = fit(Matrix::Identity(n, n), y, lambda);
    EXPECT_LT((r.w_out - y / (1.0 + lambda * n)).norm(), 1e-14);
}

TEST(Fit, HeavyRegularizationKillsTheFit) {
    const Matrix Z = random_matrix(5, 20, 2);
    const Vector y = random_matrix(20, 1, 3).col(0);
    const double lambda = 1e9;
    const auto r = fit(Z, y, lambda);
    EXPECT_LE(r.w_out.norm(), (Z * y).norm() / (20.0 * lambda));
    EXPECT_LT(r.w_out.norm(), 1e-8);
}

TEST(Fit, RandomInstanceMatchesDenseSolveOracle) {
    const Matrix Z = random_matrix(8, 12, 4);
    const Vector y = random_matrix(12, 1, 5).col(0);
    const double lambda = 0.05;
    const auto r = fit(Z, y, lambda);
    EXPECT_LT(normal_equation_residual(Z, y, r), 1e-10);

    const Matrix A = Z * Z.transpose() / 12.0 + lambda * Matrix::Identity(8, 8);
    const Vector oracle = A.fullPivLu().solve(Z * y / 12.0);
    EXPECT_LT((r.w_out - oracle).norm(), 1e-10 * oracle.norm());
}

TEST(Fit, PrimalAndDualAgree) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const Index n = 1 + static_cast<Index>(s * 5 % 37);
        const Index N = 1 + static_cast<Index>(s * 11 % 41);
        const double lambda = std::pow(10.0, -3.0 + static_cast<double>(s % 6));
        const Matrix Z = random_matrix(n, N, 100 + s);
        const Vector y = random_matrix(N, 1, 200 + s).col(0);
        const auto p = fit_primal(Z, y, lambda);
        const auto d = fit_dual(Z, y, lambda);
        EXPECT_LT((p.w_out - d.w_out).norm(), 1e-8 * (1.0 + p.w_out.norm())) << "n=" << n << " N=" << N;
        EXPECT_LE(normal_equation_residual(Z, y, fit(Z, y, lambda)), 1e-8 * (1.0 + y.norm()));
    }
}

TEST(Fit, Rejects) {
    const Matrix Z = Matrix::Identity(3, 3);
    EXPECT_THROW(fit(Z, Vector::Ones(3), 0.0), std::invalid_argument);
    EXPECT_THROW(fit(Z, Vector::Ones(3), -1.0), std::invalid_argument);
    EXPECT_THROW(fit(Z, Vector::Ones(4), 1.0), std::invalid_argument);
}

TEST(Predict, ZeroWeights) {
    const RidgeReadout r{Vector::Zero(4), 1.0};
    EXPECT_EQ(predict(r, random_matrix(4, 9, 6)), Vector::Zero(9));
}

TEST(Predict, BasisCase) {
    const RidgeReadout r{Vector::Unit(5, 0), 1.0};
    EXPECT_EQ(predict(r, Matrix::Identity(5, 5)), Vector::Unit(5, 0));
}

TEST(Predict, Linear) {
    const Matrix Z = random_matrix(6, 10, 7);
    const Vector w = random_matrix(6, 1, 8).col(0);
    const Vector base = predict({w, 1.0}, Z);
    EXPECT_LT((predict({2.5 * w, 1.0}, Z) - 2.5 * base).norm(), 1e-12 * base.norm());
    EXPECT_THROW(predict({w, 1.0}, random_matrix(5, 3, 9)), std::invalid_argument);
}

TEST(EmpiricalRisk, NullModelHitsNoiseFloor) {
    const Index T = 20;
    const ProblemDims d = ProblemDims::ridge(T, 40);
    const TeacherSpec teacher(Vector::Zero(T), 1.0);
    const auto r = empirical_risk(d, CovarianceSpec::isotropic(T), teacher, RidgeIdentity{}, 1e9, {2000, 20, 1, 0});
    EXPECT_LE(std::abs(r.estimate - 1.0), 3.0 * r.std_error);
    EXPECT_GT(r.std_error, 0.0);
}

TEST(EmpiricalRisk, AggregationInvariants) {
    const Index T = 10;
    const ProblemDims d = ProblemDims::ridge(T, 30);
    const TeacherSpec teacher(make_memory_teacher(T, 0.8), 0.5);
    const auto r = empirical_risk(d, CovarianceSpec::isotropic(T), teacher, RidgeIdentity{}, 0.1, {500, 7, 3, 0});
    ASSERT_EQ(r.per_trial.size(), 7u);
    const double mean = std::accumulate(r.per_trial.begin(), r.per_trial.end(), 0.0) / 7.0;
    double ss = 0.0;
    for (double v : r.per_trial) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(r.estimate, mean, 1e-14);
    EXPECT_NEAR(r.std_error, std::sqrt(ss / 6.0) / std::sqrt(7.0), 1e-14);
    EXPECT_EQ(r.M, 500);
    EXPECT_EQ(r.trials, 7);
    // Never meaningfully below the noise floor.
    EXPECT_GE(r.estimate, teacher.sigma2() - 3.0 * r.std_error);
}

TEST(EmpiricalRisk, NoiselessOverdeterminedRidgeRecoversTeacher) {
    const Index T = 10;
    const ProblemDims d = ProblemDims::ridge(T, 2000);
    const TeacherSpec teacher(make_memory_teacher(T, 0.9), 0.0);
    const auto r = empirical_risk(d, CovarianceSpec::ar1(0.4, T), teacher, RidgeIdentity{}, 1e-6, {500, 5, 2, 0});
    EXPECT_LT(r.estimate, 1e-3);

    // Direct oracle: one noiseless least-squares solve recovers theta*.
    const auto train = make_training_set(d, CovarianceSpec::ar1(0.4, T), teacher, 2);
    const Vector w = train.U.transpose().colPivHouseholderQr().solve(train.y);
    EXPECT_LT((w - teacher.theta_star()).norm(), 1e-8);
}

TEST(EmpiricalRisk, EsnMatchesTheoryWithinFivePercent) {
    const Index T = 100, n = 200, N = 200;
    const double lambda = 1.0;
    const auto cov = CovarianceSpec::isotropic(T);
    const TeacherSpec teacher(make_memory_teacher(T, 0.9), 1.0);
    const auto res = generate_reservoir(n, 0.9, ReservoirKind::ScaledOrthogonal, 21);
    const FeatureMapKind fmap = LinearEsn{res, false};

    const auto stats = esn_second_order_stats(res, materialize_covariance(cov));
    const auto fp = solve_fixed_point(stats.sigma_z(), N, lambda);
    const double analytic = general_risk(stats, teacher.theta_star(), teacher.sigma2(), fp).total();

    const auto mc = empirical_risk(ProblemDims(T, n, N), cov, teacher, fmap, lambda, {2000, 20, 21, 0});
    EXPECT_LT(std::abs(mc.estimate - analytic) / analytic, 0.05) << mc.estimate << " vs " << analytic;
}

TEST(EmpiricalRisk, IncreasesWithLambdaFarBeyondOptimum) {
    const Index T = 20, N = 40;
    const TeacherSpec teacher(make_memory_teacher(T, 1.0), 1.0);
    const double lambda_star = optimal_lambda(T, N, teacher.theta_star(), teacher.sigma2()).lambda_star;
    const std::vector<double> lambdas{100 * lambda_star, 200 * lambda_star, 400 * lambda_star, 800 * lambda_star};
    const auto risks = empirical_risk_sweep(ProblemDims::ridge(T, N), CovarianceSpec::isotropic(T), teacher,
                                            RidgeIdentity{}, lambdas, {2000, 20, 4, 0});
    for (std::size_t i = 1; i < risks.size(); ++i) {
        EXPECT_GT(risks[i].estimate, risks[i - 1].estimate - 2.0 * risks[i].std_error);
    }
}

TEST(EmpiricalRisk, IndependentOfWorkerCount) {
    const Index T = 15;
    const ProblemDims d(T, 30, 40);
    const auto res = generate_reservoir(30, 0.8, ReservoirKind::ScaledOrthogonal, 5);
    const TeacherSpec teacher(make_memory_teacher(T, 0.6), 1.0);
    const FeatureMapKind fmap = LinearEsn{res, true};
    const auto one = empirical_risk(d, CovarianceSpec::isotropic(T), teacher, fmap, 0.1, {200, 9, 77, 1});
    const auto many = empirical_risk(d, CovarianceSpec::isotropic(T), teacher, fmap, 0.1, {200, 9, 77, 4});
    EXPECT_EQ(one.per_trial, many.per_trial);
    EXPECT_EQ(one.estimate, many.estimate);
}

TEST(EmpiricalRisk, Rejects) {
    const ProblemDims d = ProblemDims::ridge(5, 10);
    const TeacherSpec teacher(Vector::Ones(5), 1.0);
    const auto cov = CovarianceSpec::isotropic(5);
    EXPECT_THROW(empirical_risk(d, cov, teacher, RidgeIdentity{}, 1.0, {99, 2, 0, 0}), std::invalid_argument);
    EXPECT_THROW(empirical_risk(d, cov, teacher, RidgeIdentity{}, 1.0, {100, 0, 0, 0}), std::invalid_argument);
    EXPECT_THROW(empirical_risk(d, cov, teacher, RidgeIdentity{}, 0.0, {100, 2, 0, 0}), std::invalid_argument);
    EXPECT_THROW(empirical_risk(ProblemDims(5, 6, 10), cov, teacher, RidgeIdentity{}, 1.0, {100, 2, 0, 0}),
                 std::invalid_argument);
}
