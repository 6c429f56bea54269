#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "compdiff/config.hpp"
#include "compdiff/experiment.hpp"

namespace compdiff {

inline constexpr std::string_view csv_header = "t,strategy,msd_db,cum_bits";

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buf, end};
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("csv: bad number '" + std::string(s) + "'");
    }
    return v;
}

/// One row per (t, strategy), t = 1..T, strategies in trace order.
inline void write_csv(std::ostream& out, const std::vector<MsdTrace>& traces) {
    out << csv_header << '\n';
    for (const auto& tr : traces) {
        for (std::size_t t = 0; t < tr.length(); ++t) {
            out << (t + 1) << ',' << tr.strategy << ',' << format_double(tr.msd_db[t]) << ',' << tr.cum_bits[t] << '\n';
        }
    }
}

inline void emit_csv(const std::vector<MsdTrace>& traces, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    write_csv(out, traces);
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/// Parses what write_csv produced. Only msd_db and cum_bits are recovered.
inline std::vector<MsdTrace> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != csv_header) throw std::invalid_argument("csv: missing or wrong header");
    std::vector<MsdTrace> traces;
    std::map<std::string, std::size_t, std::less<>> index;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
            f.push_back(rest.substr(0, pos));
        }
        f.push_back(rest);
        if (f.size() != 4) throw std::invalid_argument("csv: expected 4 fields in '" + line + "'");
        auto [it, inserted] = index.try_emplace(std::string(f[1]), traces.size());
        if (inserted) traces.push_back(MsdTrace{std::string(f[1]), {}, {}, {}, {}});
        auto& tr = traces[it->second];
        std::uint64_t bits = 0;
        auto [p, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), bits);
        if (ec != std::errc{} || p != f[3].data() + f[3].size()) throw std::invalid_argument("csv: bad bit count");
        tr.msd_db.push_back(parse_double(f[2]));
        tr.cum_bits.push_back(bits);
    }
    return traces;
}

inline std::vector<MsdTrace> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return read_csv(in);
}

/// t,strategy,node,msd_db
inline void emit_per_node_csv(const std::vector<MsdTrace>& traces, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << "t,strategy,node,msd_db\n";
    for (const auto& tr : traces) {
        for (std::size_t i = 0; i < tr.per_node_msd.size(); ++i) {
            for (std::size_t t = 0; t < tr.per_node_msd[i].size(); ++t) {
                out << (t + 1) << ',' << tr.strategy << ',' << i << ',' << format_double(to_db(tr.per_node_msd[i][t]))
                    << '\n';
            }
        }
    }
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/// Resolved config plus every seed and drawn constant needed to re-run.
inline nlohmann::json make_manifest(const ExperimentConfig& config, const ExperimentSetup& setup) {
    nlohmann::json m;
    m["config"] = config_to_json(config);
    m["master_seed"] = config.master_seed;
    m["target_seed"] = setup.target_seed;
    m["target"] = std::vector<double>(setup.model.target.data(), setup.model.target.data() + setup.model.target.size());
    m["beta"] = setup.beta;
    m["noise_variances"] = setup.model.noise_variances;
    m["node_count"] = setup.topology.node_count();
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : setup.topology.edges()) edges.push_back({a, b});
    m["edges"] = edges;
    std::vector<std::vector<double>> lambda;
    for (std::size_t i = 0; i < setup.weights.size(); ++i) {
        std::vector<double> row;
        for (std::size_t k = 0; k < setup.weights.size(); ++k) row.push_back(setup.weights(i, k));
        lambda.push_back(std::move(row));
    }
    m["combination_matrix"] = lambda;
    m["seed_derivation"] = "run r: derive(master_seed, run, r); node i: derive(run, observation, i); "
                           "projection: derive(run, projection); iteration t: derive(projection, iteration, t)";
    return m;
}

inline void write_manifest(const nlohmann::json& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace compdiff
