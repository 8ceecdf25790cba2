#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tfl/data.hpp"
#include "tfl/federation.hpp"

namespace tfl {

enum class DataSource { kRotated, kRegression, kCsv };

struct DataConfig {
    DataSource source = DataSource::kRotated;
    // rotated domains
    std::size_t domains = 4;
    std::size_t clients_per_domain = 5;
    std::size_t classes = 4;
    double rotation_step_degrees = 30.0;
    double noise_sigma = 0.3;
    // regional regression
    std::size_t regions = 4;
    std::size_t clients_per_region = 5;
    std::size_t series_len = 12;
    double region_offset = 1.0;
    // shared generator knobs
    std::size_t samples_per_client = 100;
    long long holdout = -1;  // -1 = last domain/region
    // csv
    std::string path;
    CsvSchema schema;
    bool repartition_dirichlet = false;
    std::size_t dirichlet_clients = 0;
    double dirichlet_alpha = 0.1;
};

struct RunConfig {
    StrategyConfig strategy;
    ModelSpec model;
    DataConfig data;
    std::vector<std::uint64_t> seeds{1};
    std::size_t eval_interval = 1;
    std::string output_dir = "out";
};

namespace detail {

using Json = nlohmann::json;

template <typename T>
T parse_enum(const std::string& value, const std::vector<std::pair<std::string, T>>& table,
             const char* what) {
    for (const auto& [name, v] : table)
        if (name == value) return v;
    std::ostringstream msg;
    msg << "config: unknown " << what << " '" << value << "' (valid:";
    for (const auto& [name, v] : table) msg << " " << name;
    msg << ")";
    throw std::invalid_argument(msg.str());
}

template <typename T>
std::string enum_name(T value, const std::vector<std::pair<std::string, T>>& table) {
    for (const auto& [name, v] : table)
        if (v == value) return name;
    throw std::logic_error("config: unnamed enum value");
}

inline const std::vector<std::pair<std::string, Strategy>>& strategy_names() {
    static const std::vector<std::pair<std::string, Strategy>> table{
        {"fedavg", Strategy::kFedAvg},
        {"fedprox", Strategy::kFedProx},
        {"drfl", Strategy::kDrfl},
        {"tfl", Strategy::kTfl},
    };
    return table;
}

inline const std::vector<std::pair<std::string, SimilarityMetric>>& metric_names() {
    static const std::vector<std::pair<std::string, SimilarityMetric>> table{
        {"dot", SimilarityMetric::kDot},
        {"cosine", SimilarityMetric::kCosine},
        {"l1", SimilarityMetric::kL1},
        {"l2", SimilarityMetric::kL2},
    };
    return table;
}

inline const std::vector<std::pair<std::string, CentralityKind>>& centrality_names() {
    static const std::vector<std::pair<std::string, CentralityKind>> table{
        {"betweenness", CentralityKind::kBetweenness},
        {"degree", CentralityKind::kDegree},
        {"closeness", CentralityKind::kCloseness},
    };
    return table;
}

inline const std::vector<std::pair<std::string, ModelKind>>& model_kind_names() {
    static const std::vector<std::pair<std::string, ModelKind>> table{
        {"linear_regression", ModelKind::kLinearRegression},
        {"softmax_classifier", ModelKind::kSoftmaxClassifier},
        {"mlp1", ModelKind::kMlp1},
    };
    return table;
}

inline const std::vector<std::pair<std::string, Activation>>& activation_names() {
    static const std::vector<std::pair<std::string, Activation>> table{
        {"relu", Activation::kRelu},
        {"tanh", Activation::kTanh},
    };
    return table;
}

inline const std::vector<std::pair<std::string, Task>>& task_names() {
    static const std::vector<std::pair<std::string, Task>> table{
        {"classification", Task::kClassification},
        {"regression", Task::kRegression},
        {"binary", Task::kBinary},
    };
    return table;
}

inline const std::vector<std::pair<std::string, DataSource>>& source_names() {
    static const std::vector<std::pair<std::string, DataSource>> table{
        {"rotated", DataSource::kRotated},
        {"regression", DataSource::kRegression},
        {"csv", DataSource::kCsv},
    };
    return table;
}

// Rejects any key not in the allowed list, naming the offender.
inline void check_keys(const Json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
}

inline double get_number(const Json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw std::invalid_argument(std::string("config: '") + key + "' must be a number");
    return obj[key].get<double>();
}

inline std::size_t get_count(const Json& obj, const char* key, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer() || obj[key].get<long long>() < 0)
        throw std::invalid_argument(std::string("config: '") + key +
                                    "' must be a nonnegative integer");
    return obj[key].get<std::size_t>();
}

inline std::string get_string(const Json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string())
        throw std::invalid_argument(std::string("config: '") + key + "' must be a string");
    return obj[key].get<std::string>();
}

inline std::string require_string(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key))
        throw std::invalid_argument("config: missing required key '" + std::string(key) + "' in " +
                                    where);
    if (!obj[key].is_string())
        throw std::invalid_argument(std::string("config: '") + key + "' must be a string");
    return obj[key].get<std::string>();
}

}  // namespace detail

// Parses and structurally validates a config document. Unknown keys and unknown
// enum values are hard errors.
inline RunConfig parse_config(const nlohmann::json& doc) {
    using detail::check_keys;
    check_keys(doc, "config root",
               {"strategy", "rounds", "clients_per_round", "eval_interval", "seeds", "output_dir",
                "model", "local", "dual", "topology", "data"});
    RunConfig cfg;

    cfg.strategy.strategy = detail::parse_enum(
        detail::require_string(doc, "strategy", "config root"), detail::strategy_names(), "strategy");
    cfg.strategy.rounds = detail::get_count(doc, "rounds", 1);
    cfg.strategy.clients_per_round = detail::get_count(doc, "clients_per_round", 1);
    cfg.eval_interval = detail::get_count(doc, "eval_interval", 1);
    cfg.output_dir = detail::get_string(doc, "output_dir", "out");

    if (doc.contains("seeds")) {
        if (!doc["seeds"].is_array() || doc["seeds"].empty())
            throw std::invalid_argument("config: 'seeds' must be a non-empty array");
        cfg.seeds.clear();
        for (const auto& s : doc["seeds"]) {
            if (!s.is_number_integer() || s.get<long long>() < 0)
                throw std::invalid_argument("config: seeds must be nonnegative integers");
            cfg.seeds.push_back(s.get<std::uint64_t>());
        }
    }

    if (!doc.contains("model"))
        throw std::invalid_argument("config: missing required key 'model' in config root");
    {
        const auto& m = doc["model"];
        check_keys(m, "model", {"kind", "input_dim", "output_dim", "hidden_dim", "activation"});
        cfg.model.kind = detail::parse_enum(detail::require_string(m, "kind", "model"),
                                            detail::model_kind_names(), "model kind");
        cfg.model.input_dim = detail::get_count(m, "input_dim", 1);
        cfg.model.output_dim = detail::get_count(m, "output_dim", 1);
        cfg.model.hidden_dim = detail::get_count(m, "hidden_dim", 0);
        cfg.model.activation = detail::parse_enum(detail::get_string(m, "activation", "relu"),
                                                  detail::activation_names(), "activation");
    }

    if (doc.contains("local")) {
        const auto& l = doc["local"];
        check_keys(l, "local", {"epochs", "batch_size", "eta_theta", "prox_mu"});
        cfg.strategy.local.epochs = detail::get_count(l, "epochs", 1);
        cfg.strategy.local.batch_size = detail::get_count(l, "batch_size", 32);
        cfg.strategy.local.eta_theta = detail::get_number(l, "eta_theta", 0.01);
        cfg.strategy.local.prox_mu = detail::get_number(l, "prox_mu", 0.0);
    }

    if (doc.contains("dual")) {
        const auto& d = doc["dual"];
        check_keys(d, "dual", {"q", "eta_lambda", "clamp_floor"});
        cfg.strategy.dual.q = detail::get_number(d, "q", 0.1);
        cfg.strategy.dual.eta_lambda = detail::get_number(d, "eta_lambda", 0.1);
        cfg.strategy.dual.clamp_floor = detail::get_number(d, "clamp_floor", 1e-12);
    }

    if (doc.contains("topology")) {
        const auto& t = doc["topology"];
        check_keys(t, "topology",
                   {"metric", "epsilon", "centrality", "update_frequency", "layer_filter", "clusters"});
        cfg.strategy.topo.metric = detail::parse_enum(detail::get_string(t, "metric", "dot"),
                                                      detail::metric_names(), "similarity metric");
        cfg.strategy.topo.epsilon = detail::get_number(t, "epsilon", 0.4);
        cfg.strategy.topo.centrality =
            detail::parse_enum(detail::get_string(t, "centrality", "betweenness"),
                               detail::centrality_names(), "centrality");
        cfg.strategy.topo.update_frequency = detail::get_count(t, "update_frequency", 5);
        cfg.strategy.topo.cluster_count = detail::get_count(t, "clusters", 0);
        if (t.contains("layer_filter")) {
            if (!t["layer_filter"].is_array())
                throw std::invalid_argument("config: 'layer_filter' must be an array of layer names");
            for (const auto& name : t["layer_filter"]) {
                if (!name.is_string())
                    throw std::invalid_argument("config: layer_filter entries must be strings");
                cfg.strategy.topo.layer_filter.push_back(name.get<std::string>());
            }
        }
    }

    if (!doc.contains("data"))
        throw std::invalid_argument("config: missing required key 'data' in config root");
    {
        const auto& d = doc["data"];
        cfg.data.source = detail::parse_enum(detail::require_string(d, "source", "data"),
                                             detail::source_names(), "data source");
        switch (cfg.data.source) {
            case DataSource::kRotated:
                check_keys(d, "data",
                           {"source", "domains", "clients_per_domain", "samples_per_client",
                            "classes", "rotation_step_degrees", "noise_sigma", "holdout"});
                cfg.data.domains = detail::get_count(d, "domains", 4);
                cfg.data.clients_per_domain = detail::get_count(d, "clients_per_domain", 5);
                cfg.data.samples_per_client = detail::get_count(d, "samples_per_client", 100);
                cfg.data.classes = detail::get_count(d, "classes", 4);
                cfg.data.rotation_step_degrees = detail::get_number(d, "rotation_step_degrees", 30.0);
                cfg.data.noise_sigma = detail::get_number(d, "noise_sigma", 0.3);
                cfg.data.holdout = static_cast<long long>(
                    detail::get_count(d, "holdout", static_cast<std::size_t>(cfg.data.domains - 1)));
                break;
            case DataSource::kRegression:
                check_keys(d, "data",
                           {"source", "regions", "clients_per_region", "series_len", "region_offset",
                            "samples_per_client", "holdout"});
                cfg.data.regions = detail::get_count(d, "regions", 4);
                cfg.data.clients_per_region = detail::get_count(d, "clients_per_region", 5);
                cfg.data.series_len = detail::get_count(d, "series_len", 12);
                cfg.data.region_offset = detail::get_number(d, "region_offset", 1.0);
                cfg.data.samples_per_client = detail::get_count(d, "samples_per_client", 64);
                cfg.data.holdout = static_cast<long long>(
                    detail::get_count(d, "holdout", static_cast<std::size_t>(cfg.data.regions - 1)));
                break;
            case DataSource::kCsv: {
                check_keys(d, "data",
                           {"source", "path", "feature_cols", "label_col", "client_col", "task",
                            "dirichlet"});
                cfg.data.path = detail::require_string(d, "path", "data");
                cfg.data.schema.label_col = detail::require_string(d, "label_col", "data");
                cfg.data.schema.client_col = detail::require_string(d, "client_col", "data");
                cfg.data.schema.task = detail::parse_enum(
                    detail::get_string(d, "task", "classification"), detail::task_names(), "task");
                if (!d.contains("feature_cols") || !d["feature_cols"].is_array() ||
                    d["feature_cols"].empty())
                    throw std::invalid_argument(
                        "config: 'feature_cols' must be a non-empty array of column names");
                for (const auto& name : d["feature_cols"]) {
                    if (!name.is_string())
                        throw std::invalid_argument("config: feature_cols entries must be strings");
                    cfg.data.schema.feature_cols.push_back(name.get<std::string>());
                }
                if (d.contains("dirichlet")) {
                    const auto& dir = d["dirichlet"];
                    check_keys(dir, "data.dirichlet", {"clients", "alpha"});
                    cfg.data.repartition_dirichlet = true;
                    cfg.data.dirichlet_clients = detail::get_count(dir, "clients", 0);
                    cfg.data.dirichlet_alpha = detail::get_number(dir, "alpha", 0.1);
                }
                break;
            }
        }
    }
    return cfg;
}

// In-federation client count implied by the config; 0 when it depends on CSV contents.
inline std::size_t implied_client_count(const DataConfig& d) {
    switch (d.source) {
        case DataSource::kRotated:
            return (d.domains - 1) * d.clients_per_domain;
        case DataSource::kRegression:
            return (d.regions - 1) * d.clients_per_region;
        case DataSource::kCsv:
            return d.repartition_dirichlet ? d.dirichlet_clients : 0;
    }
    return 0;
}

// Semantic validation beyond JSON shape: ranges, strategy/model/data consistency.
inline void validate_config(const RunConfig& cfg) {
    const auto& s = cfg.strategy;
    if (s.rounds > 100000) throw std::invalid_argument("config: rounds is implausibly large");
    if (s.clients_per_round == 0)
        throw std::invalid_argument("config: clients_per_round must be >= 1");
    if (cfg.eval_interval == 0) throw std::invalid_argument("config: eval_interval must be >= 1");
    if (s.local.epochs == 0) throw std::invalid_argument("config: local epochs must be >= 1");
    if (s.local.batch_size == 0) throw std::invalid_argument("config: batch_size must be >= 1");
    if (s.local.eta_theta <= 0.0) throw std::invalid_argument("config: eta_theta must be positive");
    if (s.local.prox_mu < 0.0) throw std::invalid_argument("config: prox_mu must be >= 0");
    if (s.strategy == Strategy::kFedProx && s.local.prox_mu <= 0.0)
        throw std::invalid_argument("config: fedprox requires prox_mu > 0");
    if (s.dual.q < 0.0) throw std::invalid_argument("config: q must be >= 0");
    if (s.dual.eta_lambda < 0.0) throw std::invalid_argument("config: eta_lambda must be >= 0");
    if (s.dual.clamp_floor <= 0.0 || s.dual.clamp_floor >= 1.0)
        throw std::invalid_argument("config: clamp_floor must be in (0, 1)");
    if (s.topo.epsilon < 0.0 || s.topo.epsilon > 1.0)
        throw std::invalid_argument("config: epsilon must be in [0, 1]");
    if (s.topo.update_frequency == 0)
        throw std::invalid_argument("config: update_frequency must be >= 1");

    const std::size_t k = implied_client_count(cfg.data);
    if (k > 0) {
        if (s.clients_per_round > k)
            throw std::invalid_argument("config: clients_per_round exceeds client count");
        if (s.topo.cluster_count > k)
            throw std::invalid_argument("config: clusters exceeds client count");
    }

    switch (cfg.data.source) {
        case DataSource::kRotated:
            if (cfg.data.domains < 2)
                throw std::invalid_argument("config: rotated data needs >= 2 domains");
            if (cfg.data.classes < 2)
                throw std::invalid_argument("config: rotated data needs >= 2 classes");
            if (cfg.data.holdout < 0 || cfg.data.holdout >= static_cast<long long>(cfg.data.domains))
                throw std::invalid_argument("config: holdout domain out of range");
            if (cfg.model.kind == ModelKind::kLinearRegression)
                throw std::invalid_argument("config: rotated data is a classification task");
            if (cfg.model.input_dim != 2)
                throw std::invalid_argument("config: rotated data has 2 features");
            if (cfg.model.output_dim != cfg.data.classes)
                throw std::invalid_argument("config: output_dim must equal the class count");
            break;
        case DataSource::kRegression:
            if (cfg.data.regions < 2)
                throw std::invalid_argument("config: regression data needs >= 2 regions");
            if (cfg.data.series_len < 2 || cfg.data.series_len % 2 != 0)
                throw std::invalid_argument("config: series_len must be even and >= 2");
            if (cfg.data.holdout < 0 || cfg.data.holdout >= static_cast<long long>(cfg.data.regions))
                throw std::invalid_argument("config: holdout region out of range");
            if (cfg.model.kind == ModelKind::kSoftmaxClassifier)
                throw std::invalid_argument("config: regression data needs a regression model");
            if (cfg.model.input_dim != cfg.data.series_len / 2 ||
                cfg.model.output_dim != cfg.data.series_len / 2)
                throw std::invalid_argument(
                    "config: regression model dims must equal series_len/2");
            break;
        case DataSource::kCsv:
            if (cfg.model.input_dim != cfg.data.schema.feature_cols.size())
                throw std::invalid_argument("config: input_dim must match feature_cols");
            if (cfg.data.schema.task == Task::kRegression) {
                if (cfg.model.kind == ModelKind::kSoftmaxClassifier)
                    throw std::invalid_argument("config: csv regression task needs a regression model");
                if (cfg.model.output_dim != 1)
                    throw std::invalid_argument("config: csv regression is single-output");
            } else {
                if (cfg.model.kind == ModelKind::kLinearRegression)
                    throw std::invalid_argument("config: csv classification needs a classifier model");
                if (cfg.data.schema.task == Task::kBinary && cfg.model.output_dim != 2)
                    throw std::invalid_argument("config: binary task needs output_dim == 2");
            }
            if (cfg.data.repartition_dirichlet) {
                if (cfg.data.dirichlet_clients < 2)
                    throw std::invalid_argument("config: dirichlet repartition needs >= 2 clients");
                if (cfg.data.schema.task == Task::kRegression)
                    throw std::invalid_argument(
                        "config: dirichlet repartition applies to classification labels");
            }
            break;
    }
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("config: cannot open " + path);
    nlohmann::json doc;
    try {
        file >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config: " + path + " is not valid JSON: " + e.what());
    }
    RunConfig cfg = parse_config(doc);
    validate_config(cfg);
    return cfg;
}

// Builds the split a config describes; generator sources are reseeded per run seed.
inline FederationSplit materialize_split(const DataConfig& d, std::uint64_t seed) {
    switch (d.source) {
        case DataSource::kRotated:
            return make_rotated_domains(d.domains, d.clients_per_domain, d.samples_per_client,
                                        d.classes, d.rotation_step_degrees, d.noise_sigma, seed,
                                        static_cast<std::size_t>(d.holdout));
        case DataSource::kRegression:
            return make_regional_regression(d.regions, d.clients_per_region, d.series_len,
                                            d.region_offset, seed, d.samples_per_client,
                                            static_cast<std::size_t>(d.holdout));
        case DataSource::kCsv: {
            FederationSplit split;
            auto clients = load_csv(d.path, d.schema);
            if (d.repartition_dirichlet) {
                std::vector<std::vector<double>> features;
                std::vector<double> labels;
                for (const auto& c : clients)
                    for (std::size_t i = 0; i < c.size(); ++i) {
                        features.push_back(c.features[i]);
                        labels.push_back(c.targets[i][0]);
                    }
                clients = dirichlet_partition(features, labels, d.dirichlet_clients,
                                              d.dirichlet_alpha, seed);
                for (auto& c : clients) c.task = d.schema.task;
            }
            split.in_federation = std::move(clients);
            split.metadata = "csv path=" + d.path;
            return split;
        }
    }
    throw std::logic_error("materialize_split: unknown source");
}

}  // namespace tfl
