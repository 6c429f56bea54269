#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "compdiff/diffusion.hpp"
#include "compdiff/experiment.hpp"
#include "compdiff/output.hpp"
#include "compdiff/projection.hpp"
#include "compdiff/stability.hpp"

namespace compdiff {

struct StabilityOptions {
    std::size_t samples = 100000;                // Monte Carlo draws for E[P_C]
    std::optional<double> eps_variance;          // fixes E[eps_k^2] for every node
    std::size_t eps_iterations = 2000;           // simulation length when estimating it
};

struct StrategyStability {
    std::string strategy;
    double rho_full = 0.0;
    std::optional<double> rho_recon;
    std::optional<double> scalar_case_rho;  // max_i |1 - sigma_i|, the unit-variance scalar prediction
    bool stable = false;
    std::vector<double> eps_variances;
};

/// Per-node E[eps_k^2] for the sign-LMS variant from run 0 of the
/// experiment. Uses E[(c^T x)^2] = sigma_c^2 ||x||^2 for c independent of
/// x = phi_k - a_k, measured after every iteration.
inline std::vector<double> estimate_eps_variances(const ExperimentSetup& setup, const Strategy& strategy,
                                                  std::uint64_t master_seed, std::size_t iterations) {
    if (strategy.kind != StrategyKind::single_bit_sign_lms) {
        throw std::invalid_argument("estimate_eps_variances: only defined for single_bit_sign_lms");
    }
    const auto seeds = run_seeds(master_seed, 0, setup.topology.node_count());
    DiffusionNetwork net(setup.topology, setup.weights, strategy, setup.model.dim(), seeds.projection_seed);
    std::vector<Engine> streams;
    for (auto s : seeds.node_seeds) streams.emplace_back(s);
    const double var_c = *strategy.projection_stddev * *strategy.projection_stddev;
    std::vector<double> acc(net.node_count(), 0.0);
    for (std::size_t t = 0; t < iterations; ++t) {
        step_network(net, setup.model, streams);
        for (std::size_t k = 0; k < net.node_count(); ++k) {
            acc[k] += var_c * (net.node(k).phi - net.node(k).own_replica->a).squaredNorm();
        }
    }
    for (auto& v : acc) v /= static_cast<double>(iterations);
    return acc;
}

inline StrategyStability analyze_strategy(const ExperimentSetup& setup, const Strategy& strategy,
                                          std::uint64_t master_seed, const StabilityOptions& options) {
    const std::size_t n = setup.topology.node_count();
    const std::size_t m = setup.model.dim();
    const auto mn = static_cast<Eigen::Index>(n * m);
    const Matrix lambda = strategy.kind == StrategyKind::no_cooperation
                              ? Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))
                              : setup.weights.matrix();
    const Matrix R = setup.model.regressor_variance * Matrix::Identity(mn, mn);
    const std::vector<double> mu(n, strategy.mu);

    StrategyStability out;
    out.strategy = strategy.name();

    std::optional<Matrix> h_bar;
    const auto eye_m = Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    if (strategy.kind == StrategyKind::reduced_dim) {
        const ProjectionSchedule schedule(derive_seed(master_seed, {stream::projection, 0x7374}), m,
                                          *strategy.reduced_dim, *strategy.projection_stddev, ProjectionKind::matrix);
        std::uint64_t t = 0;
        const Matrix block = expected_H_reduced(m, [&] { return schedule.matrix_at(t++); }, options.samples);
        h_bar = block_diagonal(block, n);
    } else if (strategy.kind == StrategyKind::single_bit_sign_lms) {
        out.eps_variances = options.eps_variance
                                ? std::vector<double>(n, *options.eps_variance)
                                : estimate_eps_variances(setup, strategy, master_seed, options.eps_iterations);
        const double var_c = *strategy.projection_stddev * *strategy.projection_stddev;
        h_bar = expected_H_single_bit(SignBitLinearization{out.eps_variances}, var_c * Matrix(eye_m));
    }

    const std::vector<double> sigma(n, strategy.sigma.value_or(1.0));
    const auto model = build_state_space(lambda, mu, sigma, R, h_bar.value_or(Matrix::Zero(mn, mn)));
    if (h_bar) {
        const auto report = mean_stable(model);
        out.rho_full = report.rho_full;
        out.rho_recon = report.rho_recon;
        out.stable = report.stable;
        out.scalar_case_rho = std::abs(1.0 - *strategy.sigma);
    } else {
        out.rho_full = spectral_radius(model.estimate_block());
        out.stable = out.rho_full < 1.0;
    }
    return out;
}

inline std::vector<StrategyStability> stability_report(const ExperimentConfig& config, const StabilityOptions& options) {
    const auto setup = prepare_experiment(config);
    std::vector<StrategyStability> rows;
    for (const auto& s : config.strategies) rows.push_back(analyze_strategy(setup, s, config.master_seed, options));
    return rows;
}

/// strategy,rho_full,rho_recon,scalar_case_rho,stable; blank where a
/// quantity does not apply.
inline void write_stability_csv(std::ostream& out, const std::vector<StrategyStability>& rows) {
    out << "strategy,rho_full,rho_recon,scalar_case_rho,stable\n";
    for (const auto& r : rows) {
        out << r.strategy << ',' << format_double(r.rho_full) << ','
            << (r.rho_recon ? format_double(*r.rho_recon) : "") << ','
            << (r.scalar_case_rho ? format_double(*r.scalar_case_rho) : "") << ',' << (r.stable ? "true" : "false")
            << '\n';
    }
}

}  // namespace compdiff
