#pragma once

// Linear echo state network feature map z = x_T with x_{t+1} = W x_t + w_in u_t,
// x_0 = 0, and its memory matrix S = [W^{T-1} w_in, ..., W w_in, w_in].

#include "esn_rmt/core.hpp"
#include "esn_rmt/datagen.hpp"
#include "esn_rmt/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

namespace esn_rmt {

enum class ReservoirKind { ScaledOrthogonal, ScaledGaussian, Custom };

inline const char* to_string(ReservoirKind k) {
    switch (k) {
        case ReservoirKind::ScaledOrthogonal: return "orthogonal";
        case ReservoirKind::ScaledGaussian: return "gaussian";
        case ReservoirKind::Custom: return "custom";
    }
    return "?";
}

inline double spectral_radius(const Matrix& W) {
    if (W.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> eig(W, false);
    if (eig.info() != Eigen::Success) throw std::runtime_error("spectral_radius: eigensolver failed");
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

class Reservoir;
inline Reservoir generate_reservoir(Index n, double phi, ReservoirKind kind, std::uint64_t seed);

class Reservoir {
public:
    /// Hand-built reservoir. Checks ||w_in|| = 1 and the echo-state bound rho(W) <= phi.
    Reservoir(Matrix W, Vector w_in, double phi)
        : Reservoir(std::move(W), std::move(w_in), phi, ReservoirKind::Custom, 0) {
        const double radius = spectral_radius(W_);
        if (radius > phi_ + 1e-8) {
            throw std::invalid_argument("Reservoir: spectral radius " + std::to_string(radius) +
                                        " exceeds leak factor " + std::to_string(phi_));
        }
    }

    Index n() const { return W_.rows(); }
    const Matrix& W() const { return W_; }
    const Vector& w_in() const { return w_in_; }
    double phi() const { return phi_; }
    ReservoirKind kind() const { return kind_; }
    std::uint64_t seed() const { return seed_; }

private:
    Reservoir(Matrix W, Vector w_in, double phi, ReservoirKind kind, std::uint64_t seed)
        : W_(std::move(W)), w_in_(std::move(w_in)), phi_(phi), kind_(kind), seed_(seed) {
        if (W_.rows() < 1 || W_.rows() != W_.cols()) throw std::invalid_argument("Reservoir: W must be n x n, n >= 1");
        if (w_in_.size() != W_.rows()) throw std::invalid_argument("Reservoir: w_in must have length n");
        if (!(phi_ > 0.0 && phi_ <= 1.0)) throw std::invalid_argument("Reservoir: phi must lie in (0, 1]");
        if (std::abs(w_in_.norm() - 1.0) > 1e-12) throw std::invalid_argument("Reservoir: w_in must have unit norm");
    }

    friend Reservoir generate_reservoir(Index, double, ReservoirKind, std::uint64_t);

    Matrix W_;
    Vector w_in_;
    double phi_;
    ReservoirKind kind_;
    std::uint64_t seed_;
};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with R's diagonal made positive.
inline Matrix random_orthogonal(Index n, Rng& rng) {
    Matrix g = standard_normal(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix& r = qr.matrixQR();
    for (Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

/// Random reservoir with W = phi * Q (ScaledOrthogonal) or a Gaussian matrix
/// rescaled to spectral radius phi (ScaledGaussian); w_in uniform on the sphere.
inline Reservoir generate_reservoir(Index n, double phi, ReservoirKind kind, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_reservoir: n must be >= 1");
    if (!(phi > 0.0 && phi <= 1.0)) throw std::invalid_argument("generate_reservoir: phi must lie in (0, 1]");

    auto rng = make_rng(seed, Stream::Reservoir);
    Matrix W;
    switch (kind) {
        case ReservoirKind::ScaledOrthogonal:
            W = phi * random_orthogonal(n, rng);
            break;
        case ReservoirKind::ScaledGaussian: {
            W = standard_normal(n, n, rng);
            const double radius = spectral_radius(W);
            W *= phi / radius;
            break;
        }
        case ReservoirKind::Custom:
            throw std::invalid_argument("generate_reservoir: custom reservoirs are built directly");
    }
    Vector w_in = standard_normal(n, 1, rng).col(0);
    w_in /= w_in.norm();
    return Reservoir(std::move(W), std::move(w_in), phi, kind, seed);
}

/// Final state x_T for every column of U (T x count), by running the recurrence.
inline Matrix esn_features(const Reservoir& res, const Matrix& U) {
    const Index T = U.rows();
    if (T < 1) throw std::invalid_argument("esn_features: U must have at least one row");
    Matrix x = Matrix::Zero(res.n(), U.cols());
    for (Index t = 0; t < T; ++t) {
        x = res.W() * x;
        x.noalias() += res.w_in() * U.row(t);
    }
    return x;
}

/// n x T memory matrix; column t (1-based) is W^{T-t} w_in.
inline Matrix memory_matrix(const Reservoir& res, Index T) {
    if (T < 1) throw std::invalid_argument("memory_matrix: T must be >= 1");
    Matrix S(res.n(), T);
    S.col(T - 1) = res.w_in();
    for (Index t = T - 2; t >= 0; --t) S.col(t).noalias() = res.W() * S.col(t + 1);
    return S;
}

/// Statistics of the fixed reservoir: Sigma_uz = Sigma_u S^T, Sigma_z = S Sigma_u S^T.
inline SecondOrderStats esn_second_order_stats(const Reservoir& res, const Matrix& sigma_u) {
    if (sigma_u.rows() != sigma_u.cols()) throw std::invalid_argument("esn_second_order_stats: sigma_u must be square");
    const Matrix S = memory_matrix(res, sigma_u.rows());
    Matrix sigma_uz = sigma_u * S.transpose();
    Matrix sigma_z = S * sigma_uz;
    return {sigma_u, std::move(sigma_z), std::move(sigma_uz)};
}

// ---------------------------------------------------------------------------
// Feature maps.

struct RidgeIdentity {};

struct LinearEsn {
    Reservoir reservoir;
    /// Draw a new reservoir (same n, phi, kind) for every Monte-Carlo trial.
    bool resample_per_trial = false;
};

using FeatureMapKind = std::variant<RidgeIdentity, LinearEsn>;

inline Index feature_dim(const FeatureMapKind& fmap, Index T) {
    if (const auto* esn = std::get_if<LinearEsn>(&fmap)) return esn->reservoir.n();
    return T;
}

inline SecondOrderStats second_order_stats(const FeatureMapKind& fmap, const Matrix& sigma_u) {
    if (const auto* esn = std::get_if<LinearEsn>(&fmap)) return esn_second_order_stats(esn->reservoir, sigma_u);
    return SecondOrderStats::ridge(sigma_u);
}

}  // namespace esn_rmt
