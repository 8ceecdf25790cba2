#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfl/config.hpp"
#include "tfl/export.hpp"
#include "tfl/federation.hpp"

namespace tfl {

inline constexpr const char* kResultsHeader =
    "seed,round,strategy,mean_train_loss,if_metric,oof_metric,lambda_max,lambda_entropy,"
    "comm_params_cumulative,wall_ms";

namespace detail {

// Shortest round-trippable decimal form, stable across runs.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double lambda_entropy(const LambdaWeights& lam) {
    double h = 0.0;
    for (double x : lam)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

// One results.csv row; wall_ms is written as 0 so reruns are byte-identical
// (measured timings go to timings.csv).
inline std::string results_row(std::uint64_t seed, const std::string& strategy,
                               const RoundRecord& rec) {
    std::ostringstream row;
    row << seed << ',' << rec.round << ',' << strategy << ',' << fmt_double(rec.mean_train_loss)
        << ',' << (rec.has_if ? fmt_double(rec.if_metric) : std::string()) << ','
        << (rec.has_oof ? fmt_double(rec.oof_metric) : std::string()) << ','
        << fmt_double(*std::max_element(rec.lam.begin(), rec.lam.end())) << ','
        << fmt_double(lambda_entropy(rec.lam)) << ',' << rec.comm_params_cumulative << ",0";
    return row.str();
}

struct SeedRun {
    std::uint64_t seed = 0;
    ExperimentResult result;
};

inline std::vector<SeedRun> run_all_seeds(const RunConfig& cfg) {
    std::vector<SeedRun> runs;
    runs.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) {
        const FederationSplit split = materialize_split(cfg.data, seed);
        if (cfg.strategy.clients_per_round > split.in_federation.size())
            throw std::invalid_argument("config: clients_per_round exceeds client count");
        if (cfg.strategy.topo.cluster_count > split.in_federation.size())
            throw std::invalid_argument("config: clusters exceeds client count");
        runs.push_back(
            {seed, run_experiment(cfg.strategy, cfg.model, split, seed, cfg.eval_interval)});
    }
    return runs;
}

inline void write_outputs(const RunConfig& cfg, const std::vector<SeedRun>& runs,
                          std::ostream& log) {
    std::filesystem::create_directories(cfg.output_dir);
    const std::string strategy = enum_name(cfg.strategy.strategy, strategy_names());

    std::ofstream results(cfg.output_dir + "/results.csv");
    if (!results) throw std::runtime_error("cannot write " + cfg.output_dir + "/results.csv");
    results << kResultsHeader << "\n";
    std::ofstream timings(cfg.output_dir + "/timings.csv");
    if (!timings) throw std::runtime_error("cannot write " + cfg.output_dir + "/timings.csv");
    timings << "seed,round,wall_ms\n";

    for (const auto& run : runs) {
        double total_ms = 0.0;
        for (const auto& rec : run.result.records) {
            results << results_row(run.seed, strategy, rec) << "\n";
            timings << run.seed << ',' << rec.round << ',' << fmt_double(rec.wall_ms) << "\n";
            total_ms += rec.wall_ms;
        }
        const auto& last = run.result.records.back();
        log << "seed " << run.seed << ": strategy=" << strategy << " rounds=" << cfg.strategy.rounds;
        if (last.has_if) log << " final_if=" << fmt_double(last.if_metric);
        if (last.has_oof) log << " final_oof=" << fmt_double(last.oof_metric);
        log << " wall_ms=" << static_cast<long long>(total_ms) << "\n";
    }
}

inline int cmd_run(RunConfig cfg, std::ostream& log) {
    const auto runs = run_all_seeds(cfg);
    write_outputs(cfg, runs, log);
    log << "wrote " << cfg.output_dir << "/results.csv (" << runs.size() << " seed"
        << (runs.size() == 1 ? "" : "s") << ")\n";
    return 0;
}

inline int cmd_export_topology(const RunConfig& cfg, std::size_t round, std::ostream& log) {
    RunConfig one = cfg;
    one.strategy.rounds = round;
    const std::uint64_t seed = cfg.seeds.front();
    const FederationSplit split = materialize_split(one.data, seed);
    if (one.strategy.clients_per_round > split.in_federation.size())
        throw std::invalid_argument("config: clients_per_round exceeds client count");
    auto result = run_experiment(one.strategy, one.model, split, seed, one.eval_interval);

    FederationState& state = result.state;
    if (state.topology.empty()) {  // strategies that never refresh: build one for inspection
        const auto refresh =
            refresh_topology(detail::local_models(state), one.strategy.topo,
                             derive_seed(seed, kClusterSalt, state.round));
        apply_refresh(state, refresh);
    }
    std::filesystem::create_directories(one.output_dir);
    const std::string base = one.output_dir + "/topology_" + std::to_string(round);
    // Clustered runs track a per-client prior; the export is node-indexed, so
    // rebuild the node-level softmax when the graph is over cluster centroids.
    const TopologicalPrior node_prior = state.prior.values.size() == state.topology.node_count
                                            ? state.prior
                                            : prior_from_centrality(state.topology_centrality);
    write_text_file(base + ".json",
                    topology_to_json(state.topology, state.topology_centrality, node_prior).dump(2) +
                        "\n");
    write_text_file(base + ".dot", topology_to_dot(state.topology));
    log << "wrote " << base << ".json and " << base << ".dot\n";
    return 0;
}

}  // namespace detail

// Command-line entry point: run / validate / export-topology. Returns a process exit
// code; diagnostics go to err.
inline int run_cli(const std::vector<std::string>& args, std::ostream& log = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"topology-aware federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_arg;
    std::size_t export_round = 0;

    auto* run = app.add_subcommand("run", "run the configured experiment over all seeds");
    run->add_option("--config", config_path, "path to a JSON config")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--seeds", seeds_arg, "comma-separated seed list (overrides config)");

    auto* validate = app.add_subcommand("validate", "check a config and exit");
    validate->add_option("--config", config_path, "path to a JSON config")->required();

    auto* expo = app.add_subcommand("export-topology", "run to a round and dump the topology");
    expo->add_option("--config", config_path, "path to a JSON config")->required();
    expo->add_option("--round", export_round, "round to export at")->required();
    expo->add_option("--out", out_dir, "output directory (overrides config)");

    std::vector<std::string> argv(args);
    argv.insert(argv.begin(), "tfl");
    std::vector<const char*> cargv;
    cargv.reserve(argv.size());
    for (const auto& a : argv) cargv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, log, err);
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (!seeds_arg.empty()) {
            cfg.seeds.clear();
            std::istringstream in(seeds_arg);
            std::string tok;
            while (std::getline(in, tok, ',')) {
                if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
                    throw std::invalid_argument("--seeds must be comma-separated nonnegative integers");
                cfg.seeds.push_back(std::stoull(tok));
            }
            if (cfg.seeds.empty())
                throw std::invalid_argument("--seeds must name at least one seed");
        }
        if (validate->parsed()) {
            log << "config ok: " << config_path << "\n";
            return 0;
        }
        if (expo->parsed()) return detail::cmd_export_topology(cfg, export_round, log);
        return detail::cmd_run(std::move(cfg), log);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace tfl
