#include "esn_rmt/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace esn_rmt;

TEST(ProblemDims, RejectsNonPositiveSizes) {
    EXPECT_THROW(ProblemDims(0, 1, 1), std::invalid_argument);
    EXPECT_THROW(ProblemDims(1, 0, 1), std::invalid_argument);
    EXPECT_THROW(ProblemDims(1, 1, 0), std::invalid_argument);
}

TEST(ProblemDims, RidgeForcesFeatureDimToT) {
    const auto d = ProblemDims::ridge(37, 80);
    EXPECT_EQ(d.n(), 37);
    EXPECT_EQ(d.T(), 37);
}

TEST(ProblemDims, GammaTimesNIsExactlyN) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<Index> size(1, 5000);
    for (int i = 0; i < 2000; ++i) {
        const ProblemDims d(size(rng), size(rng), size(rng));
        const auto product = d.gamma().times(d.N());
        ASSERT_TRUE(product.has_value());
        EXPECT_EQ(*product, d.n());
        EXPECT_NEAR(d.gamma().value() * static_cast<double>(d.N()), static_cast<double>(d.n()),
                    1e-12 * static_cast<double>(d.n()));
    }
}

TEST(TeacherSpec, Validates) {
    EXPECT_THROW(TeacherSpec(Vector::Ones(3), -1.0), std::invalid_argument);
    EXPECT_THROW(TeacherSpec(Vector::Ones(3), 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(TeacherSpec(Vector::Ones(3), 1.0, 1.5), std::invalid_argument);
    EXPECT_NO_THROW(TeacherSpec(Vector::Ones(3), 0.0, 1.0));
}

TEST(MaterializeCovariance, IsotropicIsIdentity) {
    EXPECT_TRUE(materialize_covariance(CovarianceSpec::isotropic(3)).isApprox(Matrix::Identity(3, 3)));
}

TEST(MaterializeCovariance, ToeplitzAr1) {
    Matrix expected(3, 3);
    expected << 1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1;
    EXPECT_EQ(materialize_covariance(CovarianceSpec::ar1(0.5, 3)), expected);
}

TEST(MaterializeCovariance, PowerLawDiagonal) {
    const Matrix m = materialize_covariance(CovarianceSpec::power_law(2.0, 3));
    EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m(1, 1), 0.25);
    EXPECT_DOUBLE_EQ(m(2, 2), 1.0 / 9.0);
    EXPECT_DOUBLE_EQ(m(0, 1), 0.0);
}

TEST(MaterializeCovariance, RejectsIndefiniteExplicit) {
    // Characteristic polynomial of [[1,2],[2,1]]: (1-x)^2 - 4 = 0, so x = 1 +- 2.
    const double a = 1.0, b = 2.0;
    const double min_root = a - std::abs(b);
    ASSERT_DOUBLE_EQ(min_root, -1.0);

    Matrix m(2, 2);
    m << a, b, b, a;
    try {
        materialize_covariance(CovarianceSpec::explicit_matrix(m));
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("positive semi-definite"), std::string::npos);
    }
}

TEST(MaterializeCovariance, RejectsAsymmetricAndBadAr1) {
    Matrix m(2, 2);
    m << 1, 0.5, 0.1, 1;
    EXPECT_THROW(materialize_covariance(CovarianceSpec::explicit_matrix(m)), std::invalid_argument);
    EXPECT_THROW(CovarianceSpec::ar1(1.0, 4), std::invalid_argument);
    EXPECT_THROW(CovarianceSpec::ar1(-0.1, 4), std::invalid_argument);
}

TEST(MaterializeCovariance, SymmetricAndPsdForRandomSpecs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 0.999);
    std::uniform_int_distribution<Index> size(1, 40);
    for (int i = 0; i < 100; ++i) {
        const Index T = size(rng);
        const CovarianceSpec spec = (i % 3 == 0)   ? CovarianceSpec::ar1(unit(rng), T)
                                    : (i % 3 == 1) ? CovarianceSpec::power_law(3.0 * unit(rng), T)
                                                   : CovarianceSpec::isotropic(T);
        const Matrix m = materialize_covariance(spec);
        EXPECT_EQ(m, m.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    }
}

TEST(PsdSqrt, SquaresBackAndClampsTinyNegatives) {
    const Matrix m = materialize_covariance(CovarianceSpec::ar1(0.6, 10));
    const Matrix r = psd_sqrt(m);
    EXPECT_LT((r * r - m).norm(), 1e-12);

    Matrix rank_one = Vector::Ones(4) * Vector::Ones(4).transpose();
    EXPECT_LT((psd_sqrt(rank_one) * psd_sqrt(rank_one) - rank_one).norm(), 1e-7);
    EXPECT_THROW(psd_sqrt(-Matrix::Identity(2, 2)), std::invalid_argument);
}

TEST(MemoryTeacher, FlatMemory) {
    EXPECT_EQ(make_memory_teacher(3, 1.0, false), Vector::Ones(3));
}

TEST(MemoryTeacher, GeometricByLagNewestLast) {
    const Vector t = make_memory_teacher(3, 0.5, false);
    EXPECT_DOUBLE_EQ(t[2], 1.0);   // u_3, most recent
    EXPECT_DOUBLE_EQ(t[1], 0.5);   // u_2
    EXPECT_DOUBLE_EQ(t[0], 0.25);  // u_1, oldest
}

TEST(MemoryTeacher, NormalizedHasUnitNorm) {
    EXPECT_NEAR(make_memory_teacher(2, 0.5, true).norm(), 1.0, 1e-15);
}

TEST(MemoryTeacher, RejectsRhoOutOfRange) {
    EXPECT_THROW(make_memory_teacher(3, 0.0, true), std::invalid_argument);
    EXPECT_THROW(make_memory_teacher(3, 1.01, true), std::invalid_argument);
    EXPECT_THROW(make_memory_teacher(0, 0.5, true), std::invalid_argument);
}

TEST(MemoryTeacher, SmallerRhoEmphasizesRecentInputs) {
    const Index T = 12;
    double prev_ratio = 0.0;
    for (double rho : {1.0, 0.9, 0.7, 0.5, 0.3, 0.1}) {
        const Vector t = make_memory_teacher(T, rho, true);
        const double ratio = std::abs(t[T - 1]) / std::abs(t[0]);
        EXPECT_GT(ratio, prev_ratio);
        prev_ratio = ratio;
    }
}

TEST(SecondOrderStats, RidgeCollapsesToSigmaU) {
    const Matrix su = materialize_covariance(CovarianceSpec::ar1(0.3, 5));
    const auto s = SecondOrderStats::ridge(su);
    EXPECT_EQ(s.sigma_z(), s.sigma_u());
    EXPECT_EQ(s.sigma_uz(), s.sigma_u());
}

TEST(SecondOrderStats, SymmetrizesSigmaZ) {
    Matrix sz(2, 2);
    sz << 1.0, 0.2 + 1e-13, 0.2, 1.0;
    const SecondOrderStats s(Matrix::Identity(2, 2), sz, Matrix::Identity(2, 2));
    EXPECT_EQ(s.sigma_z(), s.sigma_z().transpose());
    EXPECT_THROW(SecondOrderStats(Matrix::Identity(2, 2), sz, Matrix::Identity(3, 2)), std::invalid_argument);
}
