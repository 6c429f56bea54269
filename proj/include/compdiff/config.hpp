#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "compdiff/diffusion.hpp"
#include "compdiff/network.hpp"

namespace compdiff {

struct EdgeListTopology {
    std::size_t nodes = 0;
    std::vector<Edge> edges;
};

/// Reduced-dimension sweep settings; p takes each listed value in turn.
struct SweepSettings {
    double mu = 0.3;
    double sigma = 0.5;
    double sigma_c = 0.5;
    std::vector<std::size_t> p_values;  // empty: 1..m
};

/// Everything that determines an experiment. Defaults reproduce the
/// reference setup: 7 nodes, m = 6, sigma_u^2 = 0.1, sigma_v,i^2 = 0.1 beta_i.
struct ExperimentConfig {
    std::variant<std::string, EdgeListTopology> topology = std::string("seven_node");
    std::size_t dim = 6;
    std::uint64_t master_seed = 1;
    std::optional<std::uint64_t> target_seed;  // default: derived from master_seed
    double kappa = 0.1;
    double regressor_variance = 0.1;
    double noise_scale = 0.1;                            // sigma_v,i^2 = noise_scale * beta_i
    std::optional<std::vector<double>> noise_variances;  // overrides noise_scale * beta
    Distribution regressor_law = Distribution::gaussian;
    Distribution noise_law = Distribution::gaussian;
    std::size_t iterations = 4000;
    std::size_t runs = 200;
    std::size_t threads = 1;
    bool per_node_traces = false;
    double threshold_db = -10.0;
    std::vector<Strategy> strategies = default_strategies();
    SweepSettings sweep;

    static std::vector<Strategy> default_strategies() {
        return {
            Strategy::no_cooperation(0.03),
            Strategy::full_atc(0.3),
            Strategy::reduced(0.3, 0.5, 0.5, 1),
            Strategy::single_bit_geometric(0.3, 0.1),
            Strategy::single_bit_sign_lms(0.3, 0.01, 0.1),
        };
    }

    Topology resolve_topology() const {
        if (const auto* name = std::get_if<std::string>(&topology)) return preset_topology(*name);
        const auto& el = std::get<EdgeListTopology>(topology);
        return Topology::from_edges(el.nodes, el.edges);
    }

    std::vector<std::size_t> sweep_p_values() const {
        if (!sweep.p_values.empty()) return sweep.p_values;
        std::vector<std::size_t> p(dim);
        for (std::size_t i = 0; i < dim; ++i) p[i] = i + 1;
        return p;
    }

    void validate() const {
        if (dim < 1) throw std::invalid_argument("config: dim must be >= 1");
        if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
        if (runs < 1) throw std::invalid_argument("config: runs must be >= 1");
        if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
        if (strategies.empty()) throw std::invalid_argument("config: strategies must be non-empty");
        if (!(regressor_variance > 0.0)) throw std::invalid_argument("config: regressor_variance must be > 0");
        if (!(noise_scale >= 0.0)) throw std::invalid_argument("config: noise_scale must be >= 0");
        const auto topo = resolve_topology();
        if (noise_variances && noise_variances->size() != topo.node_count()) {
            throw std::invalid_argument("config: noise_variances needs one entry per node");
        }
        build_metropolis_weights(topo, kappa);
        for (const auto& s : strategies) s.validate(dim);
        if (!(sweep.mu > 0.0) || !(sweep.sigma > 0.0) || !(sweep.sigma_c > 0.0)) {
            throw std::invalid_argument("config: sweep step sizes must be > 0");
        }
        for (auto p : sweep.p_values) {
            if (p < 1 || p > dim) throw std::invalid_argument("config: sweep p=" + std::to_string(p) + " exceeds m");
        }
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    if (!obj.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read_if(const nlohmann::json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) {
        try {
            out = it->get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(std::string("config: bad value for '") + key + "': " + e.what());
        }
    }
}

inline Strategy strategy_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"kind", "mu", "sigma", "sigma_c", "p"}, "strategy");
    if (!j.contains("kind")) throw std::invalid_argument("config: strategy without 'kind'");
    Strategy s;
    s.kind = parse_strategy_kind(j.at("kind").get<std::string>());
    if (!j.contains("mu")) throw std::invalid_argument("config: strategy without 'mu'");
    s.mu = j.at("mu").get<double>();
    if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
    if (j.contains("sigma_c")) s.projection_stddev = j.at("sigma_c").get<double>();
    if (j.contains("p")) s.reduced_dim = j.at("p").get<std::size_t>();
    return s;
}

inline nlohmann::json strategy_to_json(const Strategy& s) {
    nlohmann::json j{{"kind", std::string(to_string(s.kind))}, {"mu", s.mu}};
    if (s.sigma) j["sigma"] = *s.sigma;
    if (s.projection_stddev) j["sigma_c"] = *s.projection_stddev;
    if (s.reduced_dim) j["p"] = *s.reduced_dim;
    return j;
}

}  // namespace detail

/// Parses a config object. Missing keys keep their defaults; unknown keys
/// are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"topology", "dim", "master_seed", "target_seed", "kappa", "regressor_variance",
                                 "noise_scale", "noise_variances", "regressor_distribution", "noise_distribution",
                                 "iterations", "runs", "threads", "per_node_traces", "threshold_db", "strategies",
                                 "sweep"},
                                "config");
    ExperimentConfig c;
    try {
        if (auto it = j.find("topology"); it != j.end()) {
            if (it->is_string()) {
                c.topology = it->get<std::string>();
            } else {
                detail::reject_unknown_keys(*it, {"nodes", "edges"}, "topology");
                EdgeListTopology el;
                el.nodes = it->at("nodes").get<std::size_t>();
                for (const auto& e : it->at("edges")) {
                    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("config: edges are [a, b] pairs");
                    el.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
                }
                c.topology = std::move(el);
            }
        }
        detail::read_if(j, "dim", c.dim);
        detail::read_if(j, "master_seed", c.master_seed);
        if (j.contains("target_seed")) c.target_seed = j.at("target_seed").get<std::uint64_t>();
        detail::read_if(j, "kappa", c.kappa);
        detail::read_if(j, "regressor_variance", c.regressor_variance);
        detail::read_if(j, "noise_scale", c.noise_scale);
        if (j.contains("noise_variances")) c.noise_variances = j.at("noise_variances").get<std::vector<double>>();
        if (j.contains("regressor_distribution")) {
            c.regressor_law = parse_distribution(j.at("regressor_distribution").get<std::string>());
        }
        if (j.contains("noise_distribution")) {
            c.noise_law = parse_distribution(j.at("noise_distribution").get<std::string>());
        }
        detail::read_if(j, "iterations", c.iterations);
        detail::read_if(j, "runs", c.runs);
        detail::read_if(j, "threads", c.threads);
        detail::read_if(j, "per_node_traces", c.per_node_traces);
        detail::read_if(j, "threshold_db", c.threshold_db);
        if (auto it = j.find("strategies"); it != j.end()) {
            if (!it->is_array()) throw std::invalid_argument("config: strategies must be an array");
            c.strategies.clear();
            for (const auto& s : *it) c.strategies.push_back(detail::strategy_from_json(s));
        }
        if (auto it = j.find("sweep"); it != j.end()) {
            detail::reject_unknown_keys(*it, {"mu", "sigma", "sigma_c", "p"}, "sweep");
            detail::read_if(*it, "mu", c.sweep.mu);
            detail::read_if(*it, "sigma", c.sweep.sigma);
            detail::read_if(*it, "sigma_c", c.sweep.sigma_c);
            detail::read_if(*it, "p", c.sweep.p_values);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    if (const auto* name = std::get_if<std::string>(&c.topology)) {
        j["topology"] = *name;
    } else {
        const auto& el = std::get<EdgeListTopology>(c.topology);
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [a, b] : el.edges) edges.push_back({a, b});
        j["topology"] = {{"nodes", el.nodes}, {"edges", edges}};
    }
    j["dim"] = c.dim;
    j["master_seed"] = c.master_seed;
    if (c.target_seed) j["target_seed"] = *c.target_seed;
    j["kappa"] = c.kappa;
    j["regressor_variance"] = c.regressor_variance;
    j["noise_scale"] = c.noise_scale;
    if (c.noise_variances) j["noise_variances"] = *c.noise_variances;
    j["regressor_distribution"] = std::string(to_string(c.regressor_law));
    j["noise_distribution"] = std::string(to_string(c.noise_law));
    j["iterations"] = c.iterations;
    j["runs"] = c.runs;
    j["threads"] = c.threads;
    j["per_node_traces"] = c.per_node_traces;
    j["threshold_db"] = c.threshold_db;
    j["strategies"] = nlohmann::json::array();
    for (const auto& s : c.strategies) j["strategies"].push_back(detail::strategy_to_json(s));
    j["sweep"] = {{"mu", c.sweep.mu}, {"sigma", c.sweep.sigma}, {"sigma_c", c.sweep.sigma_c}, {"p", c.sweep_p_values()}};
    return j;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

}  // namespace compdiff
