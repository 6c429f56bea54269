#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "compdiff/seeding.hpp"

namespace compdiff {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected communication graph. Neighborhoods include the node itself;
/// the edge list never does.
class Topology {
public:
    Topology() = default;

    static Topology from_edges(std::size_t node_count, std::vector<Edge> edges) {
        if (node_count == 0) {
            throw std::invalid_argument("topology: node count must be positive");
        }
        for (auto& [a, b] : edges) {
            if (a >= node_count || b >= node_count) {
                throw std::invalid_argument("topology: edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                            ") references a node outside [0, " + std::to_string(node_count) + ")");
            }
            if (a == b) {
                throw std::invalid_argument("topology: self-loop on node " + std::to_string(a));
            }
            if (a > b) std::swap(a, b);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        Topology t;
        t.node_count_ = node_count;
        t.neighbors_.assign(node_count, {});
        for (const auto& [a, b] : edges) {
            t.neighbors_[a].push_back(b);
            t.neighbors_[b].push_back(a);
        }
        for (auto& n : t.neighbors_) std::sort(n.begin(), n.end());
        t.edges_ = std::move(edges);
        return t;
    }

    std::size_t node_count() const noexcept { return node_count_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    /// Linked nodes of `i`, excluding `i`.
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }

    /// Linked nodes of `i` plus `i` itself, ascending.
    std::vector<std::size_t> neighborhood(std::size_t i) const {
        auto n = neighbors(i);
        n.insert(std::upper_bound(n.begin(), n.end(), i), i);
        return n;
    }

    std::size_t degree(std::size_t i) const { return neighbors(i).size(); }

    bool linked(std::size_t i, std::size_t k) const {
        const auto& n = neighbors(i);
        return std::binary_search(n.begin(), n.end(), k);
    }

    /// Number of directed links, i.e. the sum of all neighbor counts.
    std::size_t directed_link_count() const noexcept { return 2 * edges_.size(); }

private:
    std::size_t node_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> neighbors_;
};

/// Connected 7-node graph used by default in experiments. It is a
/// representative small mesh, not a reproduction of any particular figure.
inline Topology seven_node_topology() {
    return Topology::from_edges(7, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 4}, {3, 4}, {3, 5}, {4, 6}, {5, 6}});
}

inline Topology preset_topology(std::string_view name) {
    if (name == "seven_node") return seven_node_topology();
    if (name == "single") return Topology::from_edges(1, {});
    if (name == "pair") return Topology::from_edges(2, {{0, 1}});
    throw std::invalid_argument("unknown topology preset '" + std::string(name) + "'");
}

/// Row-stochastic merge weights supported on the neighborhoods.
class CombinationMatrix {
public:
    static constexpr double row_sum_tolerance = 1e-12;

    CombinationMatrix() = default;

    /// Validates `weights` against `topology` and wraps it.
    CombinationMatrix(const Topology& topology, Matrix weights) : weights_(std::move(weights)) {
        const auto n = static_cast<Eigen::Index>(topology.node_count());
        if (weights_.rows() != n || weights_.cols() != n) {
            throw std::invalid_argument("combination matrix: expected " + std::to_string(n) + "x" + std::to_string(n));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < n; ++k) {
                const double w = weights_(i, k);
                if (!std::isfinite(w) || w < 0.0) {
                    throw std::invalid_argument("combination matrix: negative or non-finite weight at (" +
                                                std::to_string(i) + ", " + std::to_string(k) + ")");
                }
                if (i != k && w != 0.0 &&
                    !topology.linked(static_cast<std::size_t>(i), static_cast<std::size_t>(k))) {
                    throw std::invalid_argument("combination matrix: weight between unlinked nodes " +
                                                std::to_string(i) + " and " + std::to_string(k));
                }
            }
            if (std::abs(weights_.row(i).sum() - 1.0) > row_sum_tolerance) {
                throw std::invalid_argument("combination matrix: row " + std::to_string(i) + " does not sum to 1");
            }
        }
    }

    static CombinationMatrix identity(const Topology& topology) {
        const auto n = static_cast<Eigen::Index>(topology.node_count());
        return CombinationMatrix(topology, Matrix::Identity(n, n));
    }

    const Matrix& matrix() const noexcept { return weights_; }
    double operator()(std::size_t i, std::size_t k) const {
        return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }

private:
    Matrix weights_;
};

/// Metropolis rule scaled by `exchange_weight`: linked pairs get
/// kappa / max(n_i, n_k) with n the neighbor count excluding self, and the
/// diagonal takes what is left of the unit row sum.
inline CombinationMatrix build_metropolis_weights(const Topology& topology, double exchange_weight) {
    if (!(exchange_weight > 0.0 && exchange_weight <= 1.0)) {
        throw std::invalid_argument("metropolis weights: exchange weight must lie in (0, 1]");
    }
    const std::size_t n = topology.node_count();
    Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double off = 0.0;
        for (std::size_t k : topology.neighbors(i)) {
            const double v = exchange_weight / static_cast<double>(std::max(topology.degree(i), topology.degree(k)));
            w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
            off += v;
        }
        const double diag = 1.0 - off;
        if (diag < 0.0) {
            throw std::invalid_argument("metropolis weights: exchange weight drives diagonal of node " +
                                        std::to_string(i) + " negative");
        }
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag;
    }
    return CombinationMatrix(topology, std::move(w));
}

enum class Distribution { gaussian, uniform };

inline Distribution parse_distribution(std::string_view s) {
    if (s == "gaussian") return Distribution::gaussian;
    if (s == "uniform") return Distribution::uniform;
    throw std::invalid_argument("unknown distribution '" + std::string(s) + "'");
}

inline std::string_view to_string(Distribution d) noexcept {
    return d == Distribution::gaussian ? "gaussian" : "uniform";
}

/// One zero-mean draw with the given standard deviation.
inline double draw_zero_mean(Distribution law, double stddev, Engine& rng) {
    if (law == Distribution::gaussian) {
        return std::normal_distribution<double>(0.0, stddev)(rng);
    }
    const double half_width = stddev * std::sqrt(3.0);
    return std::uniform_real_distribution<double>(-half_width, half_width)(rng);
}

/// Stationary linear observation model d = w_o^T u + v at every node.
struct DataModel {
    Vector target;                       // w_o
    double regressor_variance = 0.1;     // per entry of u
    std::vector<double> noise_variances; // one per node
    Distribution regressor_law = Distribution::gaussian;
    Distribution noise_law = Distribution::gaussian;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(target.size()); }
    std::size_t node_count() const noexcept { return noise_variances.size(); }

    void validate() const {
        if (target.size() < 1) throw std::invalid_argument("data model: parameter dimension must be >= 1");
        if (!target.allFinite()) throw std::invalid_argument("data model: target has non-finite entries");
        if (!(regressor_variance > 0.0) || !std::isfinite(regressor_variance)) {
            throw std::invalid_argument("data model: regressor variance must be finite and > 0");
        }
        if (noise_variances.empty()) throw std::invalid_argument("data model: no nodes");
        for (double v : noise_variances) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw std::invalid_argument("data model: noise variances must be finite and >= 0");
            }
        }
    }
};

struct Observation {
    double d = 0.0;
    Vector u;
};

/// Draws one (d, u) pair for `node` from that node's stream. Regressor
/// entries are drawn first, then the noise sample.
inline Observation generate_observation(const DataModel& model, std::size_t node, Engine& rng) {
    Observation obs;
    obs.u.resize(model.target.size());
    const double su = std::sqrt(model.regressor_variance);
    for (Eigen::Index j = 0; j < obs.u.size(); ++j) obs.u(j) = draw_zero_mean(model.regressor_law, su, rng);
    const double sv = std::sqrt(model.noise_variances.at(node));
    const double v = sv > 0.0 ? draw_zero_mean(model.noise_law, sv, rng) : 0.0;
    obs.d = model.target.dot(obs.u) + v;
    return obs;
}

}  // namespace compdiff
