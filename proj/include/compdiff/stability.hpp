#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "compdiff/network.hpp"

namespace compdiff {

using ComplexVector = Eigen::VectorXcd;

inline Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// I_N (x) block.
inline Matrix block_diagonal(const Matrix& block, std::size_t count) {
    return kronecker(Matrix::Identity(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count)), block);
}

inline ComplexVector eigenvalues(const Matrix& a) {
    Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigensolve failed on a " + std::to_string(a.rows()) + "x" +
                                 std::to_string(a.cols()) + " matrix");
    }
    return solver.eigenvalues();
}

inline double spectral_radius(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return eigenvalues(a).cwiseAbs().maxCoeff();
}

/// Blocks of the mean recursion for the stacked deviations
/// [E dphi; E da](t+1) = [[(I-DR)G, (I-DR)G~], [0, I-S Hbar]] [E dphi; E da](t).
struct StateSpaceModel {
    std::size_t node_count = 0;
    std::size_t dim = 0;
    Matrix G;        // Lambda (x) I_m
    Matrix G_tilde;  // G with its diagonal m x m blocks zeroed
    Matrix D;        // diag(mu) (x) I_m
    Matrix S;        // diag(sigma) (x) I_m
    Matrix R;        // E[U U^T]
    Matrix H_bar;    // expected reconstruction transition

    Matrix estimate_block() const {
        const auto n = G.rows();
        return (Matrix::Identity(n, n) - D * R) * G;
    }
    Matrix coupling_block() const {
        const auto n = G.rows();
        return (Matrix::Identity(n, n) - D * R) * G_tilde;
    }
    Matrix reconstruction_block() const {
        const auto n = G.rows();
        return Matrix::Identity(n, n) - S * H_bar;
    }

    Matrix transition() const {
        const auto n = G.rows();
        Matrix t = Matrix::Zero(2 * n, 2 * n);
        t.topLeftCorner(n, n) = estimate_block();
        t.topRightCorner(n, n) = coupling_block();
        t.bottomRightCorner(n, n) = reconstruction_block();
        return t;
    }
};

inline StateSpaceModel build_state_space(const Matrix& lambda, const std::vector<double>& mu,
                                         const std::vector<double>& sigma, const Matrix& R, const Matrix& H_bar) {
    const auto n = static_cast<std::size_t>(lambda.rows());
    if (n == 0 || lambda.cols() != lambda.rows()) throw std::invalid_argument("state space: Lambda must be square");
    if (mu.size() != n || sigma.size() != n) {
        throw std::invalid_argument("state space: need one mu and one sigma per node (" + std::to_string(n) + ")");
    }
    if (R.rows() != R.cols() || R.rows() % static_cast<Eigen::Index>(n) != 0 || R.rows() == 0) {
        throw std::invalid_argument("state space: R must be square with size a multiple of N");
    }
    const auto m = static_cast<std::size_t>(R.rows()) / n;
    const auto mn = static_cast<Eigen::Index>(m * n);
    if (H_bar.rows() != mn || H_bar.cols() != mn) {
        throw std::invalid_argument("state space: H_bar must be " + std::to_string(mn) + "x" + std::to_string(mn));
    }
    for (Eigen::Index i = 0; i < lambda.rows(); ++i) {
        if (std::abs(lambda.row(i).sum() - 1.0) > 1e-12 || (lambda.row(i).array() < 0.0).any()) {
            throw std::invalid_argument("state space: Lambda row " + std::to_string(i) + " is not on the simplex");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(mu[i] > 0.0) || !(sigma[i] > 0.0)) throw std::invalid_argument("state space: step sizes must be > 0");
    }

    const Matrix eye_m = Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    StateSpaceModel model;
    model.node_count = n;
    model.dim = m;
    model.G = kronecker(lambda, eye_m);
    model.G_tilde = model.G;
    for (std::size_t i = 0; i < n; ++i) {
        const auto off = static_cast<Eigen::Index>(i * m);
        model.G_tilde.block(off, off, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)).setZero();
    }
    const Eigen::Map<const Eigen::VectorXd> mu_v(mu.data(), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> sigma_v(sigma.data(), static_cast<Eigen::Index>(n));
    model.D = kronecker(Matrix(mu_v.asDiagonal()), eye_m);
    model.S = kronecker(Matrix(sigma_v.asDiagonal()), eye_m);
    model.R = R;
    model.H_bar = H_bar;
    return model;
}

/// Monte Carlo estimate of E[P_C], the expected orthogonal projector onto
/// the row space of a drawn C. For single vectors this is E[c c^T / c^T c]
/// and has unit trace. `draw` returns a p x m matrix (or an m-vector).
template <typename Sampler>
Matrix expected_H_reduced(std::size_t dim, Sampler&& draw, std::size_t samples) {
    if (samples == 0) throw std::invalid_argument("expected_H_reduced: need at least one sample");
    const auto m = static_cast<Eigen::Index>(dim);
    // Compensated summation keeps the trace exact to rounding over 1e6 draws.
    Matrix sum = Matrix::Zero(m, m);
    Matrix carry = Matrix::Zero(m, m);
    for (std::size_t s = 0; s < samples; ++s) {
        Matrix c = draw();
        if (c.cols() == 1 && c.rows() == m) c.transposeInPlace();
        if (c.cols() != m) throw std::invalid_argument("expected_H_reduced: sampler returned wrong width");
        Matrix projector;
        if (c.rows() == 1) {
            projector = c.transpose() * c / c.squaredNorm();
        } else {
            Eigen::HouseholderQR<Matrix> qr(c.transpose());
            const Matrix q = qr.householderQ() * Matrix::Identity(m, c.rows());
            projector = q * q.transpose();
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                const double y = projector(i, j) - carry(i, j);
                const double t = sum(i, j) + y;
                carry(i, j) = (t - sum(i, j)) - y;
                sum(i, j) = t;
            }
        }
    }
    return sum / static_cast<double>(samples);
}

/// Price-theorem linearization of the sign nonlinearity: per-node
/// variances E[eps_k^2] of the projected reconstruction error.
struct SignBitLinearization {
    static constexpr double price_constant = 0.79788456080286535588;  // sqrt(2/pi)
    std::vector<double> eps_variances;
};

/// Block k is sqrt(2/pi) E[c c^T] / E[eps_k^2]; blocks are stacked on the
/// diagonal, one per node.
inline Matrix expected_H_single_bit(const SignBitLinearization& lin, const Matrix& c_covariance) {
    if (c_covariance.rows() != c_covariance.cols() || c_covariance.rows() == 0) {
        throw std::invalid_argument("expected_H_single_bit: E[c c^T] must be square");
    }
    if (lin.eps_variances.empty()) throw std::invalid_argument("expected_H_single_bit: no nodes");
    const auto m = c_covariance.rows();
    const auto n = static_cast<Eigen::Index>(lin.eps_variances.size());
    Matrix h = Matrix::Zero(n * m, n * m);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double v = lin.eps_variances[static_cast<std::size_t>(k)];
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::domain_error("expected_H_single_bit: F is singular (E[eps^2] of node " + std::to_string(k) +
                                    " is not positive)");
        }
        h.block(k * m, k * m, m, m) = (SignBitLinearization::price_constant / v) * c_covariance;
    }
    return h;
}

struct StabilityReport {
    bool stable = false;
    double rho_full = 0.0;   // spectral radius of (I - D R) G
    double rho_recon = 0.0;  // spectral radius of I - S Hbar
};

/// Mean stability from the two diagonal blocks; the transition is block
/// upper triangular, so its spectrum is the union of theirs.
inline StabilityReport mean_stable(const StateSpaceModel& model) {
    StabilityReport r;
    r.rho_full = spectral_radius(model.estimate_block());
    r.rho_recon = spectral_radius(model.reconstruction_block());
    r.stable = r.rho_full < 1.0 && r.rho_recon < 1.0;
    return r;
}

}  // namespace compdiff
