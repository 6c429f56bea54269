#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "compdiff/network.hpp"
#include "compdiff/projection.hpp"
#include "compdiff/reconstruction.hpp"
#include "compdiff/seeding.hpp"

namespace compdiff {

enum class StrategyKind { no_cooperation, full_atc, reduced_dim, single_bit_geometric, single_bit_sign_lms };

inline std::string_view to_string(StrategyKind k) noexcept {
    switch (k) {
    case StrategyKind::no_cooperation: return "no_cooperation";
    case StrategyKind::full_atc: return "full_atc";
    case StrategyKind::reduced_dim: return "reduced_dim";
    case StrategyKind::single_bit_geometric: return "single_bit_geometric";
    case StrategyKind::single_bit_sign_lms: return "single_bit_sign_lms";
    }
    return "unknown";
}

inline StrategyKind parse_strategy_kind(std::string_view s) {
    for (auto k : {StrategyKind::no_cooperation, StrategyKind::full_atc, StrategyKind::reduced_dim,
                   StrategyKind::single_bit_geometric, StrategyKind::single_bit_sign_lms}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

/// A diffusion scheme and its step sizes. Optional fields are present
/// exactly when the kind uses them.
struct Strategy {
    StrategyKind kind = StrategyKind::full_atc;
    double mu = 0.3;
    std::optional<double> sigma;                 // reconstruction step
    std::optional<double> projection_stddev;    // sigma_c
    std::optional<std::size_t> reduced_dim;     // p

    static Strategy no_cooperation(double mu) { return {StrategyKind::no_cooperation, mu, {}, {}, {}}; }
    static Strategy full_atc(double mu) { return {StrategyKind::full_atc, mu, {}, {}, {}}; }
    static Strategy reduced(double mu, double sigma, double sigma_c, std::size_t p) {
        return {StrategyKind::reduced_dim, mu, sigma, sigma_c, p};
    }
    static Strategy single_bit_geometric(double mu, double sigma_c) {
        return {StrategyKind::single_bit_geometric, mu, {}, sigma_c, {}};
    }
    static Strategy single_bit_sign_lms(double mu, double sigma, double sigma_c) {
        return {StrategyKind::single_bit_sign_lms, mu, sigma, sigma_c, {}};
    }

    bool uses_sigma() const noexcept {
        return kind == StrategyKind::reduced_dim || kind == StrategyKind::single_bit_sign_lms;
    }
    bool uses_projection() const noexcept {
        return kind == StrategyKind::reduced_dim || kind == StrategyKind::single_bit_geometric ||
               kind == StrategyKind::single_bit_sign_lms;
    }

    /// Display name; reduced strategies carry their p.
    std::string name() const {
        std::string n(to_string(kind));
        if (kind == StrategyKind::reduced_dim && reduced_dim) n += "_p" + std::to_string(*reduced_dim);
        return n;
    }

    void validate(std::size_t dim) const {
        const std::string who = "strategy " + std::string(to_string(kind)) + ": ";
        if (!(mu > 0.0)) throw std::invalid_argument(who + "mu must be > 0");
        if (uses_sigma() != sigma.has_value()) {
            throw std::invalid_argument(who + (uses_sigma() ? "sigma is required" : "sigma is not used"));
        }
        if (sigma && !(*sigma > 0.0)) throw std::invalid_argument(who + "sigma must be > 0");
        if (uses_projection() != projection_stddev.has_value()) {
            throw std::invalid_argument(who + (uses_projection() ? "sigma_c is required" : "sigma_c is not used"));
        }
        if (projection_stddev && !(*projection_stddev > 0.0)) {
            throw std::invalid_argument(who + "sigma_c must be > 0");
        }
        const bool needs_p = kind == StrategyKind::reduced_dim;
        if (needs_p != reduced_dim.has_value()) {
            throw std::invalid_argument(who + (needs_p ? "p is required" : "p is not used"));
        }
        if (reduced_dim && (*reduced_dim < 1 || *reduced_dim > dim)) {
            throw std::invalid_argument(who + "p must lie in [1, m]");
        }
    }

    std::optional<ReconstructionKind> reconstruction_kind() const noexcept {
        switch (kind) {
        case StrategyKind::reduced_dim: return ReconstructionKind::reduced_dim_nlms;
        case StrategyKind::single_bit_geometric: return ReconstructionKind::single_bit_geometric;
        case StrategyKind::single_bit_sign_lms: return ReconstructionKind::single_bit_sign_lms;
        default: return std::nullopt;
        }
    }

    /// Bits sent over one directed link in one iteration.
    std::uint64_t payload_bits(std::size_t dim) const noexcept {
        switch (kind) {
        case StrategyKind::no_cooperation: return 0;
        case StrategyKind::full_atc: return bits_per_real * dim;
        case StrategyKind::reduced_dim: return bits_per_real * reduced_dim.value_or(dim);
        case StrategyKind::single_bit_geometric:
        case StrategyKind::single_bit_sign_lms: return 1;
        }
        return 0;
    }
};

// --- per-node primitives ------------------------------------------------

/// One LMS step: phi = w + mu u (d - u^T w).
inline Vector lms_adapt(const Vector& w, const Vector& u, double d, double mu) {
    return w + (mu * (d - u.dot(w))) * u;
}

/// Convex combination of a neighborhood's intermediate estimates; `bank`
/// and `weights` are aligned.
inline Vector combine_full(std::span<const Vector> bank, std::span<const double> weights) {
    if (bank.size() != weights.size() || bank.empty()) {
        throw std::invalid_argument("combine_full: bank and weights must be non-empty and aligned");
    }
    Vector w = weights[0] * bank[0];
    for (std::size_t j = 1; j < bank.size(); ++j) w += weights[j] * bank[j];
    return w;
}

/// Own estimate weighted by self_weight plus reconstructed neighbors.
inline Vector combine_reduced(const Vector& phi, double self_weight, std::span<const Vector> recon,
                              std::span<const double> weights) {
    if (recon.size() != weights.size()) throw std::invalid_argument("combine_reduced: misaligned bank");
    Vector w = self_weight * phi;
    for (std::size_t j = 0; j < recon.size(); ++j) w += weights[j] * recon[j];
    return w;
}

/// As combine_reduced, but unit-norm reconstructions borrow the local
/// amplitude ||phi||.
inline Vector combine_single_bit(const Vector& phi, double self_weight, std::span<const Vector> recon,
                                 std::span<const double> weights) {
    if (recon.size() != weights.size()) throw std::invalid_argument("combine_single_bit: misaligned bank");
    Vector neighbors = Vector::Zero(phi.size());
    for (std::size_t j = 0; j < recon.size(); ++j) neighbors += weights[j] * recon[j];
    return self_weight * phi + phi.norm() * neighbors;
}

// --- network ------------------------------------------------------------

struct NodeState {
    Vector w;
    Vector phi;
    double mu = 0.0;
    /// Reconstructions this node keeps of each linked neighbor.
    std::map<std::size_t, ReconstructionState> recon_bank;
    /// Transmitter-side copy of the node's own reconstruction, which the
    /// sign-LMS variant needs to form its error bit.
    std::optional<ReconstructionState> own_replica;
};

/// Synchronous adapt-then-combine network running one exchange strategy.
/// Each step: adapt at every node, form every payload, update every
/// reconstruction, then combine at every node.
class DiffusionNetwork {
public:
    DiffusionNetwork(Topology topology, CombinationMatrix weights, Strategy strategy, std::size_t dim,
                     std::uint64_t projection_seed)
        : topology_(std::move(topology)), strategy_(std::move(strategy)), dim_(dim) {
        strategy_.validate(dim_);
        if (weights.size() != topology_.node_count()) {
            throw std::invalid_argument("diffusion network: combination matrix does not match topology");
        }
        weights_ = strategy_.kind == StrategyKind::no_cooperation ? CombinationMatrix::identity(topology_)
                                                                   : std::move(weights);
        if (strategy_.kind == StrategyKind::reduced_dim) {
            schedule_ = ProjectionSchedule(projection_seed, dim_, *strategy_.reduced_dim, *strategy_.projection_stddev,
                                           ProjectionKind::matrix);
        } else if (strategy_.uses_projection()) {
            schedule_ = ProjectionSchedule::vector(projection_seed, dim_, *strategy_.projection_stddev);
        }

        const auto m = static_cast<Eigen::Index>(dim_);
        nodes_.resize(topology_.node_count());
        const auto recon = strategy_.reconstruction_kind();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            auto& node = nodes_[i];
            node.w = Vector::Zero(m);
            node.phi = Vector::Zero(m);
            node.mu = strategy_.mu;
            if (!recon) continue;
            const double sigma = strategy_.sigma.value_or(0.0);
            for (std::size_t k : topology_.neighbors(i)) {
                node.recon_bank.emplace(k, ReconstructionState::initial(*recon, dim_, sigma));
            }
            if (*recon == ReconstructionKind::single_bit_sign_lms) {
                node.own_replica = ReconstructionState::initial(*recon, dim_, sigma);
            }
        }
    }

    const Topology& topology() const noexcept { return topology_; }
    const CombinationMatrix& weights() const noexcept { return weights_; }
    const Strategy& strategy() const noexcept { return strategy_; }
    const std::optional<ProjectionSchedule>& schedule() const noexcept { return schedule_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::uint64_t iteration() const noexcept { return iteration_; }

    const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
    const NodeState& node(std::size_t i) const { return nodes_.at(i); }

    void set_estimate(std::size_t i, const Vector& w) { nodes_.at(i).w = w; }

    /// Overrides node `holder`'s reconstruction of `neighbor`.
    void set_reconstruction(std::size_t holder, std::size_t neighbor, const Vector& a) {
        nodes_.at(holder).recon_bank.at(neighbor).a = a;
    }

    /// Bits crossing one directed link per iteration.
    std::uint64_t bits_per_link() const noexcept { return strategy_.payload_bits(dim_); }

    /// Runs one synchronous iteration with one observation per node and
    /// returns the total number of bits exchanged across the network.
    std::uint64_t step(std::span<const Observation> observations) {
        if (observations.size() != nodes_.size()) {
            throw std::invalid_argument("diffusion network: need one observation per node");
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            auto& node = nodes_[i];
            node.phi = lms_adapt(node.w, observations[i].u, observations[i].d, node.mu);
        }

        switch (strategy_.kind) {
        case StrategyKind::no_cooperation:
            for (auto& node : nodes_) node.w = node.phi;
            break;
        case StrategyKind::full_atc: combine_all_full(); break;
        case StrategyKind::reduced_dim: exchange_reduced(); break;
        case StrategyKind::single_bit_geometric: exchange_geometric(); break;
        case StrategyKind::single_bit_sign_lms: exchange_sign_lms(); break;
        }
        ++iteration_;
        return strategy_.kind == StrategyKind::no_cooperation
                   ? 0
                   : bits_per_link() * static_cast<std::uint64_t>(topology_.directed_link_count());
    }

    /// Mean over nodes of ||w_o - w_i||^2.
    double network_msd(const Vector& target) const {
        double acc = 0.0;
        for (const auto& node : nodes_) acc += (target - node.w).squaredNorm();
        return acc / static_cast<double>(nodes_.size());
    }

private:
    void combine_all_full() {
        std::vector<Vector> next(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            Vector w = weights_(i, i) * nodes_[i].phi;
            for (std::size_t k : topology_.neighbors(i)) w += weights_(i, k) * nodes_[k].phi;
            next[i] = std::move(w);
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i].w = std::move(next[i]);
    }

    // Reconstructions are all updated before any combine, and combines only
    // read the local phi plus the local bank.
    template <typename Combine>
    void combine_all_from_bank(Combine&& combine) {
        std::vector<Vector> bank;
        std::vector<double> lambdas;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            auto& node = nodes_[i];
            bank.clear();
            lambdas.clear();
            for (const auto& [k, rec] : node.recon_bank) {
                bank.push_back(rec.a);
                lambdas.push_back(weights_(i, k));
            }
            node.w = combine(node.phi, weights_(i, i), std::span<const Vector>(bank),
                             std::span<const double>(lambdas));
        }
    }

    void exchange_reduced() {
        const RowSpaceSolver solver(schedule_->matrix_at(iteration_));
        std::vector<Payload> payloads;
        payloads.reserve(nodes_.size());
        for (const auto& node : nodes_) payloads.push_back(reduced_payload(solver.matrix(), node.phi));
        for (auto& node : nodes_) {
            for (auto& [k, rec] : node.recon_bank) rec = reduced_dim_reconstruct(std::move(rec), solver, payloads[k].values);
        }
        combine_all_from_bank(combine_reduced);
    }

    void exchange_geometric() {
        const Vector c = schedule_->vector_at(iteration_);
        std::vector<int> bits;
        bits.reserve(nodes_.size());
        for (const auto& node : nodes_) bits.push_back(geometric_payload(c, node.phi).sign);
        for (auto& node : nodes_) {
            for (auto& [k, rec] : node.recon_bank) rec = single_bit_geometric_update(std::move(rec), c, bits[k]);
        }
        combine_all_from_bank(combine_single_bit);
    }

    void exchange_sign_lms() {
        const Vector c = schedule_->vector_at(iteration_);
        std::vector<int> bits;
        bits.reserve(nodes_.size());
        for (const auto& node : nodes_) bits.push_back(sign_lms_payload(c, node.phi, node.own_replica->a).sign);
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            auto& node = nodes_[k];
            node.own_replica = single_bit_sign_lms_reconstruct(std::move(*node.own_replica), c, bits[k]);
            for (auto& [j, rec] : node.recon_bank) rec = single_bit_sign_lms_reconstruct(std::move(rec), c, bits[j]);
        }
        combine_all_from_bank(combine_reduced);
    }

    Topology topology_;
    CombinationMatrix weights_;
    Strategy strategy_;
    std::size_t dim_;
    std::optional<ProjectionSchedule> schedule_;
    std::vector<NodeState> nodes_;
    std::uint64_t iteration_ = 0;
};

/// Draws one observation per node from its stream and steps the network.
inline std::uint64_t step_network(DiffusionNetwork& network, const DataModel& model,
                                  std::span<Engine> node_streams) {
    if (node_streams.size() != network.node_count() || model.node_count() != network.node_count()) {
        throw std::invalid_argument("step_network: stream/model/network node counts differ");
    }
    std::vector<Observation> obs;
    obs.reserve(network.node_count());
    for (std::size_t i = 0; i < network.node_count(); ++i) obs.push_back(generate_observation(model, i, node_streams[i]));
    return network.step(obs);
}

}  // namespace compdiff
