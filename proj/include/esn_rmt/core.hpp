#pragma once

// Shared domain types for the teacher-student ESN model: problem sizes,
// teacher vectors, input covariances and second-order feature statistics.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace esn_rmt {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Exact ratio of two positive integers. Used for gamma = n/N so that
/// gamma * N == n holds without floating-point rounding.
class Ratio {
public:
    Ratio(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ <= 0) throw std::invalid_argument("Ratio: denominator must be positive");
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Exact product with an integer, or nullopt if the result is not integral.
    std::optional<std::int64_t> times(std::int64_t k) const {
        const std::int64_t p = num_ * k;
        if (p % den_ != 0) return std::nullopt;
        return p / den_;
    }

    friend bool operator==(const Ratio& a, const Ratio& b) {
        return a.num_ * b.den_ == b.num_ * a.den_;
    }

private:
    std::int64_t num_;
    std::int64_t den_;
};

/// Size triple (T, n, N): signal length, feature dimension, training samples.
class ProblemDims {
public:
    ProblemDims(Index T, Index n, Index N) : T_(T), n_(n), N_(N) {
        if (T < 1 || n < 1 || N < 1) {
            throw std::invalid_argument("ProblemDims: T, n and N must all be >= 1 (got T=" +
                                        std::to_string(T) + ", n=" + std::to_string(n) +
                                        ", N=" + std::to_string(N) + ")");
        }
    }

    /// Ridge on raw inputs: the feature dimension is the signal length.
    static ProblemDims ridge(Index T, Index N) { return ProblemDims(T, T, N); }

    Index T() const { return T_; }
    Index n() const { return n_; }
    Index N() const { return N_; }
    Ratio gamma() const { return Ratio(n_, N_); }

private:
    Index T_;
    Index n_;
    Index N_;
};

/// Ground-truth weights theta* (indexed by input position, oldest first),
/// the label noise variance, and the memory parameter when theta* came from one.
class TeacherSpec {
public:
    TeacherSpec(Vector theta_star, double sigma2, std::optional<double> rho = std::nullopt)
        : theta_(std::move(theta_star)), sigma2_(sigma2), rho_(rho) {
        if (theta_.size() < 1) throw std::invalid_argument("TeacherSpec: theta_star is empty");
        if (!(sigma2_ >= 0.0)) throw std::invalid_argument("TeacherSpec: sigma2 must be >= 0");
        if (rho_ && !(*rho_ > 0.0 && *rho_ <= 1.0)) {
            throw std::invalid_argument("TeacherSpec: rho must lie in (0, 1]");
        }
    }

    const Vector& theta_star() const { return theta_; }
    double sigma2() const { return sigma2_; }
    const std::optional<double>& rho() const { return rho_; }
    Index T() const { return theta_.size(); }

private:
    Vector theta_;
    double sigma2_;
    std::optional<double> rho_;
};

// ---------------------------------------------------------------------------
// Input covariance catalogue.

struct Isotropic {};

/// Sigma_u = diag(1, 2^-e, 3^-e, ...).
struct DiagonalPowerLaw {
    double exponent = 1.0;
};

/// Sigma_u[i][j] = c^|i-j|.
struct ToeplitzAR1 {
    double c = 0.0;
};

struct Explicit {
    Matrix matrix;
};

using CovarianceKind = std::variant<Isotropic, DiagonalPowerLaw, ToeplitzAR1, Explicit>;

class CovarianceSpec {
public:
    CovarianceSpec(CovarianceKind kind, Index T) : kind_(std::move(kind)), T_(T) {
        if (T_ < 1) throw std::invalid_argument("CovarianceSpec: T must be >= 1");
        if (const auto* ar = std::get_if<ToeplitzAR1>(&kind_)) {
            if (!(ar->c >= 0.0 && ar->c < 1.0)) {
                throw std::invalid_argument("CovarianceSpec: AR(1) coefficient must lie in [0, 1)");
            }
        }
        if (const auto* ex = std::get_if<Explicit>(&kind_)) {
            if (ex->matrix.rows() != T_ || ex->matrix.cols() != T_) {
                throw std::invalid_argument("CovarianceSpec: explicit matrix must be T x T");
            }
        }
    }

    static CovarianceSpec isotropic(Index T) { return {Isotropic{}, T}; }
    static CovarianceSpec ar1(double c, Index T) { return {ToeplitzAR1{c}, T}; }
    static CovarianceSpec power_law(double exponent, Index T) { return {DiagonalPowerLaw{exponent}, T}; }
    static CovarianceSpec explicit_matrix(Matrix m) {
        const Index T = m.rows();
        return {Explicit{std::move(m)}, T};
    }

    const CovarianceKind& kind() const { return kind_; }
    Index T() const { return T_; }
    bool is_isotropic() const { return std::holds_alternative<Isotropic>(kind_); }

    /// Same family at a different signal length. Explicit matrices have a fixed size.
    CovarianceSpec with_T(Index T) const {
        if (std::holds_alternative<Explicit>(kind_) && T != T_) {
            throw std::invalid_argument("CovarianceSpec: explicit covariance cannot be resized");
        }
        return {kind_, T};
    }

    std::string name() const {
        struct Namer {
            std::string operator()(const Isotropic&) const { return "isotropic"; }
            std::string operator()(const DiagonalPowerLaw&) const { return "power_law"; }
            std::string operator()(const ToeplitzAR1&) const { return "ar1"; }
            std::string operator()(const Explicit&) const { return "explicit"; }
        };
        return std::visit(Namer{}, kind_);
    }

private:
    CovarianceKind kind_;
    Index T_;
};

inline constexpr double kPsdTolerance = 1e-10;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Dense Sigma_u for a covariance spec. Symmetric bit-for-bit; explicit
/// matrices are rejected when asymmetric or not positive semi-definite.
inline Matrix materialize_covariance(const CovarianceSpec& spec) {
    const Index T = spec.T();
    struct Builder {
        Index T;
        Matrix operator()(const Isotropic&) const { return Matrix::Identity(T, T); }
        Matrix operator()(const DiagonalPowerLaw& p) const {
            Vector d(T);
            for (Index i = 0; i < T; ++i) d[i] = std::pow(static_cast<double>(i + 1), -p.exponent);
            return d.asDiagonal();
        }
        Matrix operator()(const ToeplitzAR1& ar) const {
            Matrix m(T, T);
            for (Index i = 0; i < T; ++i)
                for (Index j = 0; j < T; ++j) m(i, j) = std::pow(ar.c, static_cast<double>(std::abs(i - j)));
            return m;
        }
        Matrix operator()(const Explicit& ex) const {
            const Matrix& m = ex.matrix;
            const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
            if ((m - m.transpose()).cwiseAbs().maxCoeff() > kPsdTolerance * scale) {
                throw std::invalid_argument("materialize_covariance: explicit matrix is not symmetric");
            }
            Matrix s = symmetrized(m);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
            const double min_eig = eig.eigenvalues().minCoeff();
            if (min_eig < -kPsdTolerance * scale) {
                throw std::invalid_argument(
                    "materialize_covariance: explicit matrix is not positive semi-definite (min eigenvalue " +
                    std::to_string(min_eig) + ")");
            }
            return s;
        }
    };
    return std::visit(Builder{T}, spec.kind());
}

/// Symmetric PSD square root via eigendecomposition. Eigenvalues below
/// -tol*scale are an error; the rest of the negative ones are clamped to 0.
inline Matrix psd_sqrt(const Matrix& m, double tol = kPsdTolerance) {
    if (m.rows() != m.cols()) throw std::invalid_argument("psd_sqrt: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(m));
    if (eig.info() != Eigen::Success) throw std::runtime_error("psd_sqrt: eigendecomposition failed");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    Vector ev = eig.eigenvalues();
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -tol * scale) {
            throw std::invalid_argument("psd_sqrt: negative eigenvalue " + std::to_string(ev[i]));
        }
        ev[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    return symmetrized(eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose());
}

/// Geometric-memory teacher. Entry i weights input u_{i+1}; the weight on the
/// input j steps in the past (j = T-1-i) is rho^j, so the newest input gets 1.
inline Vector make_memory_teacher(Index T, double rho, bool normalize = true) {
    if (T < 1) throw std::invalid_argument("make_memory_teacher: T must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("make_memory_teacher: rho must lie in (0, 1]");
    Vector theta(T);
    double w = 1.0;
    for (Index lag = 0; lag < T; ++lag) {
        theta[T - 1 - lag] = w;
        w *= rho;
    }
    if (normalize) theta /= theta.norm();
    return theta;
}

/// Teacher with memory rho scaled to a given Euclidean norm (0 gives the null teacher).
inline TeacherSpec memory_teacher(Index T, double rho, double theta_norm, double sigma2) {
    Vector theta = make_memory_teacher(T, rho, true) * theta_norm;
    return TeacherSpec(std::move(theta), sigma2, rho);
}

/// Second-order statistics of (u, z): Sigma_u, Sigma_z, Sigma_uz.
class SecondOrderStats {
public:
    SecondOrderStats(Matrix sigma_u, Matrix sigma_z, Matrix sigma_uz)
        : sigma_u_(symmetrized(sigma_u)), sigma_z_(symmetrized(sigma_z)), sigma_uz_(std::move(sigma_uz)) {
        if (sigma_u_.rows() != sigma_u_.cols() || sigma_z_.rows() != sigma_z_.cols()) {
            throw std::invalid_argument("SecondOrderStats: covariances must be square");
        }
        if (sigma_uz_.rows() != sigma_u_.rows() || sigma_uz_.cols() != sigma_z_.rows()) {
            throw std::invalid_argument("SecondOrderStats: sigma_uz must be T x n");
        }
    }

    /// z = u: all three statistics are Sigma_u.
    static SecondOrderStats ridge(const Matrix& sigma_u) { return {sigma_u, sigma_u, symmetrized(sigma_u)}; }

    const Matrix& sigma_u() const { return sigma_u_; }
    const Matrix& sigma_z() const { return sigma_z_; }
    const Matrix& sigma_uz() const { return sigma_uz_; }
    Index T() const { return sigma_u_.rows(); }
    Index n() const { return sigma_z_.rows(); }

private:
    Matrix sigma_u_;
    Matrix sigma_z_;
    Matrix sigma_uz_;
};

}  // namespace esn_rmt
