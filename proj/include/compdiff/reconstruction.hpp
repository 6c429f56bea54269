#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "compdiff/network.hpp"
#include "compdiff/projection.hpp"

namespace compdiff {

/// +1 for x >= 0, -1 otherwise. Zero counts as positive everywhere.
constexpr int sign_of(double x) noexcept { return x >= 0.0 ? 1 : -1; }

enum class ReconstructionKind { reduced_dim_nlms, single_bit_geometric, single_bit_sign_lms };

/// A receiver's running estimate a_k of one neighbor's intermediate estimate.
struct ReconstructionState {
    Vector a;
    double sigma = 0.0;
    ReconstructionKind kind = ReconstructionKind::reduced_dim_nlms;
    /// Geometric updates skipped because a was parallel to c.
    std::size_t degenerate_updates = 0;

    /// Starting point shared by every replica: e_1 for the geometric
    /// variant (it must stay on the unit sphere), zero otherwise.
    static ReconstructionState initial(ReconstructionKind kind, std::size_t dim, double sigma) {
        ReconstructionState s;
        s.kind = kind;
        s.sigma = sigma;
        s.a = Vector::Zero(static_cast<Eigen::Index>(dim));
        if (kind == ReconstructionKind::single_bit_geometric) s.a(0) = 1.0;
        return s;
    }

    friend bool operator==(const ReconstructionState& x, const ReconstructionState& y) {
        return x.kind == y.kind && x.sigma == y.sigma && x.degenerate_updates == y.degenerate_updates &&
               x.a.size() == y.a.size() && x.a == y.a;
    }
};

/// Minimum-norm correction onto {a : C a = z} for one full-row-rank C.
/// Factor once per iteration and reuse for every neighbor.
class RowSpaceSolver {
public:
    explicit RowSpaceSolver(const Matrix& c) : c_(c) {
        if (c.rows() < 1 || c.rows() > c.cols()) {
            throw std::invalid_argument("reduced reconstruction: C must be p x m with 1 <= p <= m");
        }
        if (Eigen::FullPivLU<Matrix>(c).rank() != c.rows()) {
            throw std::domain_error("reduced reconstruction: C is rank deficient (rank " +
                                    std::to_string(Eigen::FullPivLU<Matrix>(c).rank()) + " < " +
                                    std::to_string(c.rows()) + "); C C^T is not invertible");
        }
        // C^T = Q R, so C^T (C C^T)^{-1} r = Q R^{-T} r.
        qr_.compute(c.transpose());
        q_ = qr_.householderQ() * Matrix::Identity(c.cols(), c.rows());
        r_ = qr_.matrixQR().topRows(c.rows()).triangularView<Eigen::Upper>();
    }

    const Matrix& matrix() const noexcept { return c_; }

    /// C^T (C C^T)^{-1} r.
    Vector lift(const Vector& residual) const {
        Vector y = r_.transpose().triangularView<Eigen::Lower>().solve(residual);
        return q_ * y;
    }

    /// Orthogonal projector onto the row space of C.
    Matrix projector() const { return q_ * q_.transpose(); }

private:
    Matrix c_;
    Eigen::HouseholderQR<Matrix> qr_;
    Matrix q_;
    Matrix r_;
};

/// NLMS step toward consistency with z = C phi.
inline ReconstructionState reduced_dim_reconstruct(ReconstructionState state, const RowSpaceSolver& solver,
                                                   const Vector& z) {
    if (state.kind != ReconstructionKind::reduced_dim_nlms) {
        throw std::logic_error("reduced_dim_reconstruct: wrong reconstruction kind");
    }
    const Vector residual = z - solver.matrix() * state.a;
    state.a += state.sigma * solver.lift(residual);
    return state;
}

inline ReconstructionState reduced_dim_reconstruct(ReconstructionState state, const Matrix& c, const Vector& z) {
    return reduced_dim_reconstruct(std::move(state), RowSpaceSolver(c), z);
}

/// Closest unit vector to a whose projection on c carries sign_z. Agreeing
/// signs leave a untouched; otherwise a is projected onto c's orthogonal
/// complement and renormalized.
inline ReconstructionState single_bit_geometric_update(ReconstructionState state, const Vector& c, int sign_z) {
    if (state.kind != ReconstructionKind::single_bit_geometric) {
        throw std::logic_error("single_bit_geometric_update: wrong reconstruction kind");
    }
    const double ca = c.dot(state.a);
    const int gamma = 1 - sign_z * sign_of(ca);
    if (gamma == 0) return state;

    Vector projected = state.a - (ca / c.squaredNorm()) * c;
    const double norm = projected.norm();
    if (norm <= 1e-12) {
        ++state.degenerate_updates;
        return state;
    }
    state.a = projected / norm;
    return state;
}

/// Sign-error LMS step; every replica fed the same bits stays identical.
inline ReconstructionState single_bit_sign_lms_reconstruct(ReconstructionState state, const Vector& c,
                                                           int sign_err) {
    if (state.kind != ReconstructionKind::single_bit_sign_lms) {
        throw std::logic_error("single_bit_sign_lms_reconstruct: wrong reconstruction kind");
    }
    state.a += (state.sigma * static_cast<double>(sign_err)) * c;
    return state;
}

// --- exchanged payloads -------------------------------------------------

inline constexpr std::uint64_t bits_per_real = 64;

enum class PayloadKind { full, reduced, sign_bit };

struct Payload {
    PayloadKind kind = PayloadKind::full;
    Vector values;  // full: phi, reduced: z
    int sign = 1;   // sign_bit only

    std::uint64_t bits() const noexcept {
        return kind == PayloadKind::sign_bit ? 1 : bits_per_real * static_cast<std::uint64_t>(values.size());
    }
};

inline Payload full_payload(const Vector& phi) { return {PayloadKind::full, phi, 1}; }

inline Payload reduced_payload(const Matrix& c, const Vector& phi) { return {PayloadKind::reduced, c * phi, 1}; }

inline Payload geometric_payload(const Vector& c, const Vector& phi) {
    return {PayloadKind::sign_bit, {}, sign_of(c.dot(phi))};
}

/// Sign of c^T phi - c^T a, computed by the transmitter against its own replica.
inline Payload sign_lms_payload(const Vector& c, const Vector& phi, const Vector& own_replica) {
    return {PayloadKind::sign_bit, {}, sign_of(c.dot(phi) - c.dot(own_replica))};
}

/// Builds what node k broadcasts at iteration t for the given strategy.
inline Payload transmit_payload(const Vector& phi, const ProjectionSchedule& schedule, std::uint64_t t,
                                ReconstructionKind kind, const ReconstructionState& own_replica) {
    switch (kind) {
    case ReconstructionKind::reduced_dim_nlms:
        return reduced_payload(schedule.matrix_at(t), phi);
    case ReconstructionKind::single_bit_geometric:
        return geometric_payload(schedule.vector_at(t), phi);
    case ReconstructionKind::single_bit_sign_lms:
        return sign_lms_payload(schedule.vector_at(t), phi, own_replica.a);
    }
    throw std::logic_error("transmit_payload: unknown kind");
}

}  // namespace compdiff
