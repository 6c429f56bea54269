#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

#include "compdiff/network.hpp"
#include "compdiff/seeding.hpp"

namespace compdiff {

enum class ProjectionKind { matrix, vector };

/// Shared random projections. Every node holding an equal schedule sees the
/// same C(t) for the same t, which stands in for pilot-based synchronization.
/// Queries are stateless: the draw for iteration t comes from a substream
/// derived from (seed, t) alone.
class ProjectionSchedule {
public:
    static constexpr double min_vector_norm = 1e-12;

    ProjectionSchedule() = default;

    ProjectionSchedule(std::uint64_t seed, std::size_t dim, std::size_t reduced_dim, double entry_stddev,
                       ProjectionKind kind, Distribution law = Distribution::gaussian)
        : seed_(seed), dim_(dim), reduced_dim_(reduced_dim), stddev_(entry_stddev), kind_(kind), law_(law) {
        if (dim_ == 0) throw std::invalid_argument("projection: dimension must be >= 1");
        if (reduced_dim_ < 1 || reduced_dim_ > dim_) {
            throw std::invalid_argument("projection: reduced dimension must lie in [1, " + std::to_string(dim_) + "]");
        }
        if (!(stddev_ > 0.0)) throw std::invalid_argument("projection: entry stddev must be > 0");
        if (kind_ == ProjectionKind::vector && reduced_dim_ != 1) {
            throw std::invalid_argument("projection: vector schedules have reduced dimension 1");
        }
    }

    static ProjectionSchedule vector(std::uint64_t seed, std::size_t dim, double entry_stddev,
                                     Distribution law = Distribution::gaussian) {
        return {seed, dim, 1, entry_stddev, ProjectionKind::vector, law};
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t reduced_dim() const noexcept { return reduced_dim_; }
    double entry_stddev() const noexcept { return stddev_; }
    ProjectionKind kind() const noexcept { return kind_; }
    Distribution law() const noexcept { return law_; }

    /// p x m matrix with full row rank.
    Matrix matrix_at(std::uint64_t t) const {
        if (kind_ != ProjectionKind::matrix) throw std::logic_error("projection: schedule yields vectors");
        Engine rng = engine_at(t);
        const auto p = static_cast<Eigen::Index>(reduced_dim_);
        const auto m = static_cast<Eigen::Index>(dim_);
        Matrix c(p, m);
        for (;;) {
            for (Eigen::Index r = 0; r < p; ++r) {
                for (Eigen::Index j = 0; j < m; ++j) c(r, j) = draw_zero_mean(law_, stddev_, rng);
            }
            if (Eigen::FullPivLU<Matrix>(c).rank() == p) return c;
        }
    }

    /// Length-m vector, never (numerically) zero.
    Vector vector_at(std::uint64_t t) const {
        if (kind_ != ProjectionKind::vector) throw std::logic_error("projection: schedule yields matrices");
        Engine rng = engine_at(t);
        const auto m = static_cast<Eigen::Index>(dim_);
        Vector c(m);
        for (;;) {
            for (Eigen::Index j = 0; j < m; ++j) c(j) = draw_zero_mean(law_, stddev_, rng);
            if (c.norm() >= min_vector_norm) return c;
        }
    }

private:
    Engine engine_at(std::uint64_t t) const { return Engine{derive_seed(seed_, {stream::iteration, t})}; }

    std::uint64_t seed_ = 0;
    std::size_t dim_ = 1;
    std::size_t reduced_dim_ = 1;
    double stddev_ = 1.0;
    ProjectionKind kind_ = ProjectionKind::vector;
    Distribution law_ = Distribution::gaussian;
};

inline Matrix next_projection_matrix(const ProjectionSchedule& schedule, std::uint64_t t) {
    return schedule.matrix_at(t);
}

inline Vector next_projection_vector(const ProjectionSchedule& schedule, std::uint64_t t) {
    return schedule.vector_at(t);
}

}  // namespace compdiff
