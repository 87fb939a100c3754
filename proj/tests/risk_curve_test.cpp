#include "esn_rmt/risk_curve.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace esn_rmt;

namespace {

AnalyticModel ridge_model(double rho = 1.0) {
    AnalyticModel m;
    m.tag = ModelTag::Ridge;
    m.rho = rho;
    return m;
}

/// Isotropic ridge at gamma = 1: kappa = lambda (1 + delta) solves kappa^2 = lambda (1 + kappa).
double isotropic_unit_gamma_alpha(double lambda) {
    const double kappa = 0.5 * (lambda + std::sqrt(lambda * lambda + 4.0 * lambda));
    return 1.0 / ((1.0 + kappa) * (1.0 + kappa));
}

}  // namespace

TEST(RiskCurve, SinglePointGridMatchesDirectEvaluation) {
    const auto model = ridge_model(0.7);
    const auto rows = risk_curve(LambdaSweep{40, 60, {0.3}}, model);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].total(), evaluate(model, 40, 60, 0.3).total());
    EXPECT_EQ(rows[0].T, 40);
    EXPECT_EQ(rows[0].N, 60);
}

TEST(RiskCurve, EmptyGridsRejected) {
    EXPECT_THROW(risk_curve(LambdaSweep{10, 10, {}}, ridge_model()), std::invalid_argument);
    EXPECT_THROW(risk_curve(GammaSweep{{}, 100}, ridge_model()), std::invalid_argument);
    EXPECT_THROW(risk_curve(MemoryGridSweep{10, {}, {0.5}}, ridge_model()), std::invalid_argument);
}

TEST(RiskCurve, AlphaStrictlyDecreasesAlongLambdaSweep) {
    for (ModelTag tag : {ModelTag::Ridge, ModelTag::Esn}) {
        AnalyticModel model = ridge_model(0.8);
        model.tag = tag;
        model.cov = CovarianceSpec::ar1(0.5, 1);
        const auto rows = risk_curve(LambdaSweep{50, 50, logspace(-4, 2, 30)}, model);
        for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].alpha, rows[i - 1].alpha);
    }
}

TEST(RiskCurve, GammaSweepAlphaAtThresholdMatchesClosedForm) {
    const double lambda = 1e-4;
    const auto rows = risk_curve(GammaSweep{{0.5, 1.0, 2.0}, 200, GammaAxis::VaryT, lambda}, ridge_model());
    EXPECT_NEAR(rows[1].alpha, isotropic_unit_gamma_alpha(lambda), 1e-9);
    EXPECT_NEAR(rows[1].alpha, 0.9802, 1e-4);
    EXPECT_GT(rows[1].total(), rows[0].total());
    EXPECT_GT(rows[1].total(), rows[2].total());
}

TEST(RiskCurve, GammaAxisPlacement) {
    const GammaSweep vary_t{{0.5}, 200, GammaAxis::VaryT};
    const GammaSweep vary_n{{0.5}, 200, GammaAxis::VaryN};
    EXPECT_EQ(gamma_point(vary_t, 0.5), std::make_pair(Index{100}, Index{200}));
    EXPECT_EQ(gamma_point(vary_n, 0.5), std::make_pair(Index{200}, Index{400}));
    EXPECT_THROW(gamma_point(vary_t, 0.0), std::invalid_argument);
    EXPECT_THROW(gamma_point(vary_t, 0.001), std::invalid_argument);
}

TEST(RiskCurve, AlphaRoundingToOneIsMarkedDiverged) {
    const auto p = evaluate(ridge_model(), 50, 50, 1e-40);
    EXPECT_TRUE(p.diverged);
    EXPECT_FALSE(p.risk.has_value());
    EXPECT_TRUE(std::isinf(p.total()));
}

TEST(RiskCurve, MemoryGridRowOrderAndRho) {
    const auto rows = risk_curve(MemoryGridSweep{20, {10, 40}, {0.2, 0.9}, 0.1}, ridge_model());
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].N, 10);
    EXPECT_EQ(rows[1].rho, 0.9);
    EXPECT_EQ(rows[2].N, 40);
    for (const auto& r : rows) EXPECT_GE(r.total(), 1.0);
}

TEST(RiskCurve, MoreSamplesHelpAwayFromThreshold) {
    // Past the threshold (N > T), analytic risk falls as N grows at fixed lambda.
    const auto rows = risk_curve(MemoryGridSweep{20, {40, 80, 160, 320}, {0.5}, 0.1}, ridge_model());
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].total(), rows[i - 1].total());
}

TEST(GoldenSection, IsotropicRidgeOptimumIsNoiseToSignalTimesAspect) {
    // For Sigma_u = I the exact deterministic-equivalent risk is minimized at
    // lambda = (T/N) sigma^2 / ||theta||^2, checked here against a dense grid.
    const Index T = 50, N = 400;
    AnalyticModel model = ridge_model(1.0);
    model.sigma2 = 0.25;
    const double expected = (static_cast<double>(T) / N) * model.sigma2 / (model.theta_norm * model.theta_norm);
    const double found = golden_section_lambda(model, T, N, 1e-6, 1e3, 1e-8);
    EXPECT_NEAR(found, expected, 1e-3 * expected);

    const auto grid = risk_curve(LambdaSweep{T, N, logspace(-4, 2, 200)}, model);
    EXPECT_LE(evaluate(model, T, N, found).total(), grid[argmin_total(grid)].total() + 1e-15);
}

TEST(GoldenSection, AnisotropicEsnBeatsEveryGridPoint) {
    AnalyticModel model;
    model.tag = ModelTag::Esn;
    model.cov = CovarianceSpec::ar1(0.6, 1);
    model.rho = 0.7;
    const double found = golden_section_lambda(model, 60, 90);
    const double best = evaluate(model, 60, 90, found).total();
    for (double lambda : logspace(-6, 3, 91)) EXPECT_LE(best, evaluate(model, 60, 90, lambda).total() + 1e-12);
}

TEST(Logspace, Endpoints) {
    const auto v = logspace(-2, 2, 5);
    EXPECT_DOUBLE_EQ(v.front(), 0.01);
    EXPECT_DOUBLE_EQ(v[2], 1.0);
    EXPECT_DOUBLE_EQ(v.back(), 100.0);
    EXPECT_THROW(logspace(0, 1, 0), std::invalid_argument);
}
