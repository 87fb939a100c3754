#include "esn_rmt/datagen.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace esn_rmt;

namespace {

double relative_cov_error(const Matrix& U, const Matrix& sigma) {
    const Matrix est = U * U.transpose() / static_cast<double>(U.cols());
    return (est - sigma).norm() / sigma.norm();
}

}  // namespace

TEST(SampleInputs, IsotropicCovarianceMatchesWishartConcentration) {
    // For g ~ N(0, I_T), E||G G^T / m - I||_F^2 = T (T + 1) / m, so the
    // relative Frobenius error concentrates at sqrt((T + 1) / m) ~ 0.707 here.
    const Index T = 1000, count = 2000;
    const double oracle = std::sqrt(static_cast<double>(T + 1) / static_cast<double>(count));
    const Matrix U = sample_inputs(ProblemDims(T, T, count), CovarianceSpec::isotropic(T), count, 5);
    EXPECT_NEAR(relative_cov_error(U, Matrix::Identity(T, T)), oracle, 0.05 * oracle);
}

TEST(SampleInputs, CovarianceConvergesWhenCountDominatesTSquared) {
    const Index T = 4, count = 200000;
    const auto cov = CovarianceSpec::ar1(0.6, T);
    const Matrix U = sample_inputs(ProblemDims(T, T, count), cov, count, 9);
    const double bound = 3.0 * std::sqrt(static_cast<double>(T * T) / static_cast<double>(count));
    EXPECT_LT(relative_cov_error(U, materialize_covariance(cov)), bound);
}

TEST(SampleInputs, ZeroCovarianceGivesZeros) {
    const auto cov = CovarianceSpec::explicit_matrix(Matrix::Zero(3, 3));
    const Matrix U = sample_inputs(ProblemDims(3, 3, 10), cov, 10, 1);
    EXPECT_EQ(U, Matrix::Zero(3, 10));
}

TEST(SampleInputs, DeterministicInSeed) {
    const ProblemDims d(6, 6, 10);
    const auto cov = CovarianceSpec::power_law(1.0, 6);
    EXPECT_EQ(sample_inputs(d, cov, 50, 42), sample_inputs(d, cov, 50, 42));
    EXPECT_NE(sample_inputs(d, cov, 50, 42), sample_inputs(d, cov, 50, 43));
}

TEST(SampleInputs, Rejects) {
    const ProblemDims d(3, 3, 10);
    EXPECT_THROW(sample_inputs(d, CovarianceSpec::isotropic(3), 0, 1), std::invalid_argument);
    EXPECT_THROW(sample_inputs(d, CovarianceSpec::isotropic(4), 5, 1), std::invalid_argument);
}

TEST(Label, NoiselessIsExactlyLinear) {
    const ProblemDims d(8, 8, 30);
    const Matrix U = sample_inputs(d, CovarianceSpec::isotropic(8), 30, 3);
    const TeacherSpec teacher(make_memory_teacher(8, 0.7), 0.0);
    const Vector y = label(U, teacher, 3);
    EXPECT_EQ(y - U.transpose() * teacher.theta_star(), Vector::Zero(30));
}

TEST(Label, UnitVectorCase) {
    Matrix U = Matrix::Zero(4, 1);
    U(0, 0) = 1.0;
    const TeacherSpec teacher(Vector::Unit(4, 0), 0.0);
    EXPECT_EQ(label(U, teacher, 0), Vector::Ones(1));
}

TEST(Label, PureNoiseMomentsFollowLawOfLargeNumbers) {
    const Index N = 100000;
    const Matrix U = Matrix::Zero(2, N);
    const TeacherSpec teacher(Vector::Zero(2), 1.0);
    const Vector y = label(U, teacher, 17);
    const double mean = y.mean();
    const double var = (y.array() - mean).square().sum() / static_cast<double>(N - 1);
    EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(N)));
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Label, NoiseStreamIndependentOfInputStream) {
    // Same seed for inputs and labels: the noise must not replay the input normals.
    const Index N = 5000;
    const ProblemDims d(1, 1, N);
    const Matrix U = sample_inputs(d, CovarianceSpec::isotropic(1), N, 99);
    const Vector eps = label(Matrix::Zero(1, N), TeacherSpec(Vector::Zero(1), 1.0), 99);
    const double corr = U.row(0).dot(eps) / (U.row(0).norm() * eps.norm());
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(static_cast<double>(N)));
}

TEST(Label, DimensionMismatch) {
    EXPECT_THROW(label(Matrix::Zero(3, 2), TeacherSpec(Vector::Zero(4), 1.0), 0), std::invalid_argument);
}

TEST(TestSet, SingleSample) {
    const ProblemDims d(5, 5, 10);
    const auto ds = make_test_set(d, CovarianceSpec::isotropic(5), TeacherSpec(Vector::Ones(5), 1.0), 1, 4);
    EXPECT_EQ(ds.U.cols(), 1);
    EXPECT_EQ(ds.y.size(), 1);
    EXPECT_THROW(make_test_set(d, CovarianceSpec::isotropic(5), TeacherSpec(Vector::Ones(5), 1.0), 0, 4),
                 std::invalid_argument);
}

TEST(TestSet, DisjointFromTrainingStream) {
    const ProblemDims d(5, 5, 100);
    const auto cov = CovarianceSpec::isotropic(5);
    const TeacherSpec teacher(make_memory_teacher(5, 0.5), 0.5);
    const auto train = make_training_set(d, cov, teacher, 123);
    const auto test = make_test_set(d, cov, teacher, 100, 123);
    EXPECT_NE(train.U, test.U);
    const double corr = (train.U.array() * test.U.array()).sum() / (train.U.norm() * test.U.norm());
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(500.0));
}

TEST(TestSet, LabelVarianceIsThetaSigmaTheta) {
    const Index T = 10, M = 100000;
    const ProblemDims d(T, T, 10);
    const TeacherSpec teacher(make_memory_teacher(T, 0.8), 0.0);
    const auto ds = make_test_set(d, CovarianceSpec::isotropic(T), teacher, M, 8);
    const double var = (ds.y.array() - ds.y.mean()).square().sum() / static_cast<double>(M - 1);
    EXPECT_NEAR(var, 1.0, 0.05);
}
