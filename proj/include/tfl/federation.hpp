#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfl/data.hpp"
#include "tfl/metrics.hpp"
#include "tfl/models.hpp"
#include "tfl/robust_opt.hpp"
#include "tfl/topology.hpp"

namespace tfl {

enum class Strategy {
    kFedAvg,   // uniform sampling, plain averaging
    kFedProx,  // fedavg plus proximal local term
    kDrfl,     // min-max over lambda, no prior
    kTfl,      // min-max with topology-derived prior regularizer
};

struct TopologyConfig {
    SimilarityMetric metric = SimilarityMetric::kDot;
    double epsilon = 0.4;
    CentralityKind centrality = CentralityKind::kBetweenness;
    std::size_t update_frequency = 5;      // refresh topology every f rounds
    std::vector<std::string> layer_filter; // empty = all layers
    std::size_t cluster_count = 0;         // 0 = no clustering, else cluster-level topology
};

struct StrategyConfig {
    Strategy strategy = Strategy::kFedAvg;
    std::size_t clients_per_round = 1;  // m
    std::size_t rounds = 1;             // T, excluding the warm-start round
    DualConfig dual;
    TopologyConfig topo;
    LocalTrainConfig local;
};

struct ClientState {
    ParameterVector local;
    double train_loss = 0.0;
    std::size_t sample_count = 0;
};

struct FederationState {
    ParameterVector global;
    std::vector<ClientState> clients;
    LambdaWeights lam;
    TopologicalPrior prior;
    ClientTopology topology;
    CentralityVector topology_centrality;  // matches `topology`; kept for export
    std::size_t round = 0;
    long long comm_params_cumulative = 0;
    std::size_t last_refresh_pair_evals = 0;
};

struct RoundRecord {
    std::size_t round = 0;
    std::vector<std::size_t> sampled;  // positional client ids, draw order
    LambdaWeights lam;
    std::vector<double> prior;
    double mean_train_loss = 0.0;
    bool has_if = false;
    double if_metric = 0.0;
    bool has_oof = false;
    double oof_metric = 0.0;
    long long comm_params_cumulative = 0;
    double wall_ms = 0.0;  // measured; reported separately from the deterministic results
};

struct ExperimentResult {
    std::vector<RoundRecord> records;
    FederationState state;
};

// Coordinate-wise mean of identically shaped parameter vectors.
inline ParameterVector aggregate(const std::vector<const ParameterVector*>& models) {
    if (models.empty()) throw std::invalid_argument("aggregate: no models");
    ParameterVector out = *models.front();
    for (std::size_t m = 1; m < models.size(); ++m) {
        if (!models[m]->same_layout(out))
            throw std::invalid_argument("aggregate: parameter layouts differ");
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += models[m]->values[i];
    }
    const double inv = 1.0 / static_cast<double>(models.size());
    for (auto& v : out.values) v *= inv;
    return out;
}

inline ParameterVector aggregate(const std::vector<ParameterVector>& models) {
    std::vector<const ParameterVector*> ptrs;
    ptrs.reserve(models.size());
    for (const auto& m : models) ptrs.push_back(&m);
    return aggregate(ptrs);
}

// Loss of the current global model on every client's full local data.
inline std::vector<double> evaluate_all_losses(const ModelSpec& spec, const ParameterVector& global,
                                               const std::vector<ClientDataset>& datasets) {
    std::vector<double> losses;
    losses.reserve(datasets.size());
    for (const auto& ds : datasets) {
        Batch all{&ds.features, &ds.targets, nullptr, ds.task};
        losses.push_back(loss(spec, global, all));
    }
    return losses;
}

struct TopologyRefresh {
    ClientTopology topology;
    CentralityVector centrality_values;
    TopologicalPrior prior;
    std::size_t pair_evaluations = 0;
};

// Rebuilds the client topology and prior from the latest local models. With
// cluster_count in (0, K), models are k-means clustered first and the topology is
// built over centroids (C(C-1)/2 similarity evaluations instead of K(K-1)/2), with
// each cluster's prior mass spread evenly over its members.
inline TopologyRefresh refresh_topology(const std::vector<ParameterVector>& locals,
                                        const TopologyConfig& cfg, std::uint64_t seed) {
    if (locals.size() < 2) throw std::invalid_argument("refresh_topology: need >= 2 clients");
    TopologyRefresh out;
    if (cfg.cluster_count > 0 && cfg.cluster_count < locals.size()) {
        const auto clusters = cluster_clients(locals, cfg.cluster_count, seed);
        const auto sim = build_similarity_matrix(clusters.centroids, cfg.metric, cfg.layer_filter);
        out.topology = build_epsilon_graph(sim, cfg.epsilon);
        out.centrality_values = centrality(out.topology, cfg.centrality);
        out.prior = clustered_prior(clusters, out.topology, cfg.centrality);
        out.pair_evaluations = sim.pair_evaluations;
    } else {
        const auto sim = build_similarity_matrix(locals, cfg.metric, cfg.layer_filter);
        out.topology = build_epsilon_graph(sim, cfg.epsilon);
        out.centrality_values = centrality(out.topology, cfg.centrality);
        out.prior = prior_from_centrality(out.centrality_values);
        out.pair_evaluations = sim.pair_evaluations;
    }
    return out;
}

namespace detail {

inline bool uses_lambda(Strategy s) { return s == Strategy::kDrfl || s == Strategy::kTfl; }

inline std::vector<ParameterVector> local_models(const FederationState& state) {
    std::vector<ParameterVector> models;
    models.reserve(state.clients.size());
    for (const auto& c : state.clients) models.push_back(c.local);
    return models;
}

// Trains the listed clients from the current global model and aggregates them
// (in ascending positional order) into the next global model.
inline double train_and_aggregate(FederationState& state, const std::vector<ClientDataset>& datasets,
                                  const StrategyConfig& cfg, const ModelSpec& spec,
                                  const std::vector<std::size_t>& ids, std::uint64_t run_seed,
                                  std::size_t round) {
    const ParameterVector anchor = state.global;
    double loss_sum = 0.0;
    for (std::size_t id : ids) {
        LocalTrainConfig local_cfg = cfg.local;
        local_cfg.seed = derive_seed(run_seed, id, round);
        if (cfg.strategy != Strategy::kFedProx) local_cfg.prox_mu = 0.0;
        const auto& ds = datasets[id];
        auto trained = local_train(spec, anchor, ds.features, ds.targets, ds.task, local_cfg,
                                   local_cfg.prox_mu > 0.0 ? &anchor : nullptr);
        loss_sum += trained.train_loss;
        state.clients[id] = ClientState{std::move(trained.params), trained.train_loss, ds.size()};
    }
    std::vector<std::size_t> sorted_ids(ids);
    std::sort(sorted_ids.begin(), sorted_ids.end());
    std::vector<const ParameterVector*> models;
    models.reserve(sorted_ids.size());
    for (std::size_t id : sorted_ids) models.push_back(&state.clients[id].local);
    state.global = aggregate(models);
    state.comm_params_cumulative +=
        2LL * static_cast<long long>(ids.size()) * static_cast<long long>(state.global.size());
    return loss_sum / static_cast<double>(ids.size());
}

inline void apply_refresh(FederationState& state, const TopologyRefresh& refresh) {
    state.topology = refresh.topology;
    state.topology_centrality = refresh.centrality_values;
    state.prior = refresh.prior;
    state.last_refresh_pair_evals = refresh.pair_evaluations;
}

}  // namespace detail

// One federated round: sample m clients (by lambda for drfl/tfl, uniformly otherwise),
// train them locally from the global model, aggregate, and for drfl/tfl take one
// projected dual ascent step on fresh full-data losses. tfl additionally refreshes the
// topology (and prior) every update_frequency rounds before the lambda step.
inline RoundRecord run_round(FederationState& state, const std::vector<ClientDataset>& datasets,
                             const StrategyConfig& cfg, const ModelSpec& spec,
                             std::uint64_t run_seed) {
    const std::size_t k = datasets.size();
    if (state.clients.size() != k) throw std::invalid_argument("run_round: state/dataset mismatch");
    if (cfg.clients_per_round == 0 || cfg.clients_per_round > k)
        throw std::invalid_argument("run_round: clients_per_round must be in [1, K]");
    const std::size_t t = state.round + 1;

    std::vector<double> weights;
    if (detail::uses_lambda(cfg.strategy)) {
        weights = state.lam;
    } else {
        weights.assign(k, 1.0 / static_cast<double>(k));
    }
    const auto sampled =
        sample_clients(weights, cfg.clients_per_round, derive_seed(run_seed, kSampleSalt, t));

    RoundRecord rec;
    rec.round = t;
    rec.sampled = sampled;
    rec.mean_train_loss = detail::train_and_aggregate(state, datasets, cfg, spec, sampled, run_seed, t);

    if (cfg.strategy == Strategy::kTfl) {
        if (cfg.topo.update_frequency == 0)
            throw std::invalid_argument("run_round: update_frequency must be >= 1");
        if (t % cfg.topo.update_frequency == 0)
            detail::apply_refresh(state, refresh_topology(detail::local_models(state), cfg.topo,
                                                          derive_seed(run_seed, kClusterSalt, t)));
        const auto losses = evaluate_all_losses(spec, state.global, datasets);
        state.lam = update_lambda(state.lam, losses, state.prior.values, cfg.dual);
    } else if (cfg.strategy == Strategy::kDrfl) {
        const auto losses = evaluate_all_losses(spec, state.global, datasets);
        const std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
        DualConfig plain = cfg.dual;
        plain.q = 0.0;  // drfl is the unregularized min-max baseline
        state.lam = update_lambda(state.lam, losses, uniform, plain);
    }

    state.round = t;
    rec.lam = state.lam;
    rec.prior = state.prior.values;
    rec.comm_params_cumulative = state.comm_params_cumulative;
    return rec;
}

namespace detail {

// Pooled metric over a client group, chosen by task: accuracy / mse / roc-auc.
inline double group_metric(const ModelSpec& spec, const ParameterVector& params,
                           const std::vector<ClientDataset>& group) {
    if (group.empty()) throw std::invalid_argument("group_metric: empty group");
    const Task task = group.front().task;
    if (task == Task::kRegression) {
        std::vector<std::vector<double>> pred, actual;
        std::vector<double> out;
        for (const auto& ds : group)
            for (std::size_t i = 0; i < ds.size(); ++i) {
                forward(spec, params, ds.features[i], out);
                pred.push_back(out);
                actual.push_back(ds.targets[i]);
            }
        return mse(pred, actual);
    }
    if (task == Task::kBinary) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& ds : group)
            for (std::size_t i = 0; i < ds.size(); ++i) {
                const auto proba = predict_proba(spec, params, ds.features[i]);
                if (proba.size() != 2)
                    throw std::invalid_argument("group_metric: binary task needs 2 outputs");
                scores.push_back(proba[1]);
                labels.push_back(static_cast<int>(ds.targets[i][0]));
            }
        return roc_auc(scores, labels);
    }
    std::vector<std::size_t> pred, actual;
    std::vector<double> out;
    for (const auto& ds : group)
        for (std::size_t i = 0; i < ds.size(); ++i) {
            forward(spec, params, ds.features[i], out);
            const std::size_t arg = static_cast<std::size_t>(
                std::max_element(out.begin(), out.end()) - out.begin());
            pred.push_back(arg);
            actual.push_back(static_cast<std::size_t>(ds.targets[i][0]));
        }
    return accuracy(pred, actual);
}

}  // namespace detail

// Full run for one seed: a warm-start round 0 where every in-federation client trains
// once from the seeded init (so the topology is defined from the start), then
// cfg.rounds federated rounds. IF/OOF metrics are evaluated every eval_interval
// rounds and at the final round.
inline ExperimentResult run_experiment(const StrategyConfig& cfg, const ModelSpec& spec,
                                       const FederationSplit& split, std::uint64_t seed,
                                       std::size_t eval_interval = 1) {
    const auto& datasets = split.in_federation;
    const std::size_t k = datasets.size();
    if (k < 2) throw std::invalid_argument("run_experiment: need >= 2 in-federation clients");
    if (eval_interval == 0) throw std::invalid_argument("run_experiment: eval_interval must be >= 1");
    for (const auto& ds : datasets)
        if (ds.size() == 0) throw std::invalid_argument("run_experiment: empty client dataset");

    ExperimentResult result;
    FederationState& state = result.state;
    state.global = init_params(spec, derive_seed(seed, kInitSalt));
    state.clients.assign(k, ClientState{state.global, 0.0, 0});
    state.lam.assign(k, 1.0 / static_cast<double>(k));
    state.prior.values.assign(k, 1.0 / static_cast<double>(k));

    auto evaluate_into = [&](RoundRecord& rec) {
        rec.has_if = true;
        rec.if_metric = detail::group_metric(spec, state.global, split.in_federation);
        if (!split.out_of_federation.empty()) {
            rec.has_oof = true;
            rec.oof_metric = detail::group_metric(spec, state.global, split.out_of_federation);
        }
    };

    {  // warm-start round: every client trains once; no lambda step yet
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::size_t> everyone(k);
        std::iota(everyone.begin(), everyone.end(), 0);
        RoundRecord rec;
        rec.round = 0;
        rec.sampled = everyone;
        rec.mean_train_loss =
            detail::train_and_aggregate(state, datasets, cfg, spec, everyone, seed, 0);
        if (cfg.strategy == Strategy::kTfl)
            detail::apply_refresh(state, refresh_topology(detail::local_models(state), cfg.topo,
                                                          derive_seed(seed, kClusterSalt, 0)));
        rec.lam = state.lam;
        rec.prior = state.prior.values;
        rec.comm_params_cumulative = state.comm_params_cumulative;
        evaluate_into(rec);
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start).count();
        result.records.push_back(std::move(rec));
    }

    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        const auto start = std::chrono::steady_clock::now();
        RoundRecord rec = run_round(state, datasets, cfg, spec, seed);
        if (t % eval_interval == 0 || t == cfg.rounds) evaluate_into(rec);
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start).count();
        result.records.push_back(std::move(rec));
    }
    return result;
}

}  // namespace tfl
