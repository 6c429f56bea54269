#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "compdiff/config.hpp"
#include "compdiff/diffusion.hpp"
#include "compdiff/network.hpp"
#include "compdiff/seeding.hpp"

namespace compdiff {

/// Network-averaged MSD of one strategy over t = 1..T.
struct MsdTrace {
    std::string strategy;
    std::vector<double> msd;              // linear, averaged over nodes and runs
    std::vector<double> msd_db;           // 10 log10(msd)
    std::vector<std::uint64_t> cum_bits;  // cumulative bits over one directed link
    std::vector<std::vector<double>> per_node_msd;  // [node][t], only when requested

    std::size_t length() const noexcept { return msd.size(); }
};

/// Resolved, seeded quantities shared by every strategy of an experiment.
struct ExperimentSetup {
    Topology topology;
    CombinationMatrix weights;
    DataModel model;
    std::vector<double> beta;  // noise multipliers, empty when variances are explicit
    std::uint64_t target_seed = 0;
};

struct ExperimentResult {
    ExperimentSetup setup;
    std::vector<MsdTrace> traces;
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

inline ExperimentSetup prepare_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentSetup s;
    s.topology = config.resolve_topology();
    s.weights = build_metropolis_weights(s.topology, config.kappa);
    s.target_seed = config.target_seed.value_or(derive_seed(config.master_seed, {stream::target}));

    Engine target_rng{s.target_seed};
    s.model.target.resize(static_cast<Eigen::Index>(config.dim));
    std::normal_distribution<double> standard(0.0, 1.0);
    for (Eigen::Index j = 0; j < s.model.target.size(); ++j) s.model.target(j) = standard(target_rng);

    s.model.regressor_variance = config.regressor_variance;
    s.model.regressor_law = config.regressor_law;
    s.model.noise_law = config.noise_law;
    if (config.noise_variances) {
        s.model.noise_variances = *config.noise_variances;
    } else {
        Engine beta_rng{derive_seed(config.master_seed, {stream::noise_profile})};
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = 0; i < s.topology.node_count(); ++i) {
            s.beta.push_back(unit(beta_rng));
            s.model.noise_variances.push_back(config.noise_scale * s.beta.back());
        }
    }
    s.model.validate();
    return s;
}

/// Seeds of Monte Carlo run `run`. Observation streams depend only on the
/// run, so every strategy sees the same data.
struct RunSeeds {
    std::uint64_t run_seed;
    std::uint64_t projection_seed;
    std::vector<std::uint64_t> node_seeds;
};

inline RunSeeds run_seeds(std::uint64_t master_seed, std::size_t run, std::size_t node_count) {
    RunSeeds r;
    r.run_seed = derive_seed(master_seed, {stream::run, run});
    r.projection_seed = derive_seed(r.run_seed, {stream::projection});
    for (std::size_t i = 0; i < node_count; ++i) r.node_seeds.push_back(derive_seed(r.run_seed, {stream::observation, i}));
    return r;
}

namespace detail {

struct RunOutput {
    std::vector<double> msd;                     // [t]
    std::vector<std::vector<double>> per_node;   // [node][t]
};

inline RunOutput simulate_run(const ExperimentSetup& setup, const Strategy& strategy, std::uint64_t master_seed,
                              std::size_t run, std::size_t iterations, bool per_node) {
    const auto seeds = run_seeds(master_seed, run, setup.topology.node_count());
    DiffusionNetwork net(setup.topology, setup.weights, strategy, setup.model.dim(), seeds.projection_seed);
    std::vector<Engine> streams;
    for (auto s : seeds.node_seeds) streams.emplace_back(s);

    RunOutput out;
    out.msd.reserve(iterations);
    if (per_node) out.per_node.assign(net.node_count(), std::vector<double>(iterations));
    for (std::size_t t = 0; t < iterations; ++t) {
        step_network(net, setup.model, streams);
        out.msd.push_back(net.network_msd(setup.model.target));
        if (per_node) {
            for (std::size_t i = 0; i < net.node_count(); ++i) {
                out.per_node[i][t] = (setup.model.target - net.node(i).w).squaredNorm();
            }
        }
    }
    return out;
}

// Runs are independent; results are summed in run order afterwards, so the
// thread count never changes the output.
inline MsdTrace monte_carlo(const ExperimentSetup& setup, const Strategy& strategy, const ExperimentConfig& config) {
    std::vector<RunOutput> outputs(config.runs);
    const std::size_t workers = std::min(config.threads, config.runs);
    auto work = [&](std::size_t first) {
        for (std::size_t r = first; r < config.runs; r += workers) {
            outputs[r] = simulate_run(setup, strategy, config.master_seed, r, config.iterations, config.per_node_traces);
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    MsdTrace trace;
    trace.strategy = strategy.name();
    trace.msd.assign(config.iterations, 0.0);
    if (config.per_node_traces) trace.per_node_msd.assign(setup.topology.node_count(), std::vector<double>(config.iterations, 0.0));
    for (const auto& o : outputs) {
        for (std::size_t t = 0; t < config.iterations; ++t) trace.msd[t] += o.msd[t];
        for (std::size_t i = 0; i < o.per_node.size(); ++i) {
            for (std::size_t t = 0; t < config.iterations; ++t) trace.per_node_msd[i][t] += o.per_node[i][t];
        }
    }
    const double runs = static_cast<double>(config.runs);
    for (auto& v : trace.msd) v /= runs;
    for (auto& node : trace.per_node_msd) {
        for (auto& v : node) v /= runs;
    }
    trace.msd_db.reserve(trace.msd.size());
    for (double v : trace.msd) trace.msd_db.push_back(to_db(v));
    const std::uint64_t per_iter = strategy.payload_bits(setup.model.dim());
    for (std::size_t t = 0; t < config.iterations; ++t) trace.cum_bits.push_back(per_iter * (t + 1));
    return trace;
}

}  // namespace detail

/// Monte Carlo MSD curves for every configured strategy.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentResult result;
    result.setup = prepare_experiment(config);
    for (const auto& s : config.strategies) result.traces.push_back(detail::monte_carlo(result.setup, s, config));
    return result;
}

/// Reduced-dimension runs for each p, using the sweep step sizes.
inline ExperimentResult sweep_reduced_dimension(const ExperimentConfig& config, const std::vector<std::size_t>& p_values) {
    for (auto p : p_values) {
        if (p < 1 || p > config.dim) {
            throw std::invalid_argument("sweep: p=" + std::to_string(p) + " outside [1, " + std::to_string(config.dim) + "]");
        }
    }
    ExperimentResult result;
    result.setup = prepare_experiment(config);
    for (auto p : p_values) {
        const auto s = Strategy::reduced(config.sweep.mu, config.sweep.sigma, config.sweep.sigma_c, p);
        result.traces.push_back(detail::monte_carlo(result.setup, s, config));
    }
    return result;
}

/// First t (1-based) at which the curve is at or below `threshold_db`.
inline std::optional<std::size_t> iterations_to_reach(const MsdTrace& trace, double threshold_db) {
    for (std::size_t t = 0; t < trace.msd_db.size(); ++t) {
        if (trace.msd_db[t] <= threshold_db) return t + 1;
    }
    return std::nullopt;
}

/// MSD in dB of the mean linear MSD over the last `window` iterations.
inline double steady_state_db(const MsdTrace& trace, std::size_t window) {
    window = std::min(window, trace.msd.size());
    if (window == 0) throw std::invalid_argument("steady_state_db: empty trace");
    double acc = 0.0;
    for (std::size_t t = trace.msd.size() - window; t < trace.msd.size(); ++t) acc += trace.msd[t];
    return to_db(acc / static_cast<double>(window));
}

}  // namespace compdiff
