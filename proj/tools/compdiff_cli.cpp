// compdiff: run diffusion experiments, reduced-dimension sweeps and mean
// stability reports from a JSON config.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compdiff/compdiff.hpp"

namespace fs = std::filesystem;
using namespace compdiff;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> threads;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "experiment config (JSON); defaults apply when omitted");
    cmd->add_option("--seed", c.seed, "master seed, overrides the config");
    cmd->add_option("--out", c.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--runs", c.runs, "Monte Carlo runs, overrides the config");
    cmd->add_option("--iterations", c.iterations, "iterations per run, overrides the config");
    cmd->add_option("--threads", c.threads, "worker threads");
}

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
    if (c.seed) cfg.master_seed = *c.seed;
    if (c.runs) cfg.runs = *c.runs;
    if (c.iterations) cfg.iterations = *c.iterations;
    if (c.threads) cfg.threads = *c.threads;
    cfg.validate();
    return cfg;
}

fs::path prepare_out(const Common& c) {
    fs::path out(c.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + out.string() + "': " + ec.message());
    return out;
}

void summarize(const std::vector<MsdTrace>& traces, double threshold_db) {
    for (const auto& tr : traces) {
        const auto hit = iterations_to_reach(tr, threshold_db);
        std::cout << tr.strategy << ": final " << tr.msd_db.back() << " dB, steady "
                  << steady_state_db(tr, std::max<std::size_t>(1, tr.length() / 10)) << " dB, reaches "
                  << threshold_db << " dB at " << (hit ? std::to_string(*hit) : std::string("never")) << ", "
                  << (tr.cum_bits.empty() ? 0 : tr.cum_bits.back()) << " bits/link\n";
    }
}

void write_outputs(const fs::path& out, const std::string& stem, const ExperimentConfig& cfg,
                   const ExperimentResult& result) {
    emit_csv(result.traces, out / (stem + ".csv"));
    if (cfg.per_node_traces) emit_per_node_csv(result.traces, out / (stem + "_per_node.csv"));
    write_manifest(make_manifest(cfg, result.setup), out / (stem + "_manifest.json"));
    std::cout << "wrote " << (out / (stem + ".csv")).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion adaptive estimation with compressed exchange"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run = app.add_subcommand("run", "run every configured strategy and write MSD curves");
    add_common(run, run_opts);

    Common sweep_opts;
    std::vector<std::size_t> p_values;
    auto* sweep = app.add_subcommand("sweep-dim", "reduced-dimension runs for several p");
    add_common(sweep, sweep_opts);
    sweep->add_option("--p", p_values, "kept dimensions (default: config sweep.p, else 1..m)")->delimiter(',');

    Common stab_opts;
    StabilityOptions stability;
    std::optional<double> eps_variance;
    auto* stab = app.add_subcommand("stability", "spectral radii of the mean deviation recursion");
    add_common(stab, stab_opts);
    stab->add_option("--samples", stability.samples, "Monte Carlo draws for E[P_C]")->capture_default_str();
    stab->add_option("--eps-variance", eps_variance, "E[eps^2] per node for the sign-bit linearization");
    stab->add_option("--eps-iterations", stability.eps_iterations, "iterations used to estimate E[eps^2]")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto cfg = resolve(run_opts);
            const auto out = prepare_out(run_opts);
            const auto result = run_experiment(cfg);
            write_outputs(out, "msd", cfg, result);
            summarize(result.traces, cfg.threshold_db);
        } else if (*sweep) {
            const auto cfg = resolve(sweep_opts);
            const auto out = prepare_out(sweep_opts);
            const auto ps = p_values.empty() ? cfg.sweep_p_values() : p_values;
            const auto result = sweep_reduced_dimension(cfg, ps);
            write_outputs(out, "sweep_dim", cfg, result);
            summarize(result.traces, cfg.threshold_db);
        } else if (*stab) {
            const auto cfg = resolve(stab_opts);
            const auto out = prepare_out(stab_opts);
            stability.eps_variance = eps_variance;
            const auto rows = stability_report(cfg, stability);
            const auto path = out / "stability.csv";
            std::ofstream file(path, std::ios::binary);
            if (!file) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
            write_stability_csv(file, rows);
            write_stability_csv(std::cout, rows);
        }
    } catch (const std::exception& e) {
        std::cerr << "compdiff: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
