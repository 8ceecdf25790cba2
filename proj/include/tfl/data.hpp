#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfl/models.hpp"
#include "tfl/rng.hpp"

namespace tfl {

// One client's local data. Targets are n x 1 (class id) for classification/binary
// and n x output_dim for regression.
struct ClientDataset {
    int client_id = 0;
    std::vector<std::vector<double>> features;
    std::vector<std::vector<double>> targets;
    Task task = Task::kClassification;

    std::size_t size() const { return features.size(); }
};

// In-federation clients train; out-of-federation clients are evaluation-only.
struct FederationSplit {
    std::vector<ClientDataset> in_federation;
    std::vector<ClientDataset> out_of_federation;
    std::string metadata;  // generator name, parameters, seed
};

namespace detail {

// floor(p_k * n) per client, remainder distributed by largest fractional part
// (ties to the lowest client id). Sums to n exactly.
inline std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& props,
                                                         std::size_t n) {
    const std::size_t k = props.size();
    std::vector<std::size_t> counts(k);
    std::vector<double> frac(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double exact = props[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        frac[i] = exact - std::floor(exact);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[order[i % k]] += 1;
    return counts;
}

}  // namespace detail

// Label-skewed split: per class, draw Dirichlet(alpha) proportions over the K clients
// and deal that class's (shuffled) samples out by largest-remainder counts. Clients
// left empty receive one sample moved from the currently largest client. Every input
// sample lands in exactly one client.
inline std::vector<ClientDataset> dirichlet_partition(
    const std::vector<std::vector<double>>& features, const std::vector<double>& labels,
    std::size_t num_clients, double alpha, std::uint64_t seed) {
    if (features.size() != labels.size())
        throw std::invalid_argument("dirichlet_partition: features/labels size mismatch");
    if (num_clients == 0) throw std::invalid_argument("dirichlet_partition: need >= 1 client");
    if (features.size() < num_clients)
        throw std::invalid_argument("dirichlet_partition: fewer samples than clients");
    if (alpha <= 0.0) throw std::invalid_argument("dirichlet_partition: alpha must be positive");

    std::map<double, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(derive_seed(seed, kDataSalt));
    std::vector<std::vector<std::size_t>> members(num_clients);
    for (auto& [label, idx] : by_class) {
        rng.shuffle(idx);
        const auto props = rng.dirichlet(alpha, num_clients);
        const auto counts = detail::largest_remainder_counts(props, idx.size());
        std::size_t cursor = 0;
        for (std::size_t k = 0; k < num_clients; ++k)
            for (std::size_t c = 0; c < counts[k]; ++c) members[k].push_back(idx[cursor++]);
    }

    // Repair empty clients from the largest one (ties to the lowest id).
    for (std::size_t k = 0; k < num_clients; ++k) {
        if (!members[k].empty()) continue;
        std::size_t donor = 0;
        for (std::size_t j = 1; j < num_clients; ++j)
            if (members[j].size() > members[donor].size()) donor = j;
        members[k].push_back(members[donor].back());
        members[donor].pop_back();
    }

    std::vector<ClientDataset> out(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) {
        out[k].client_id = static_cast<int>(k);
        out[k].task = Task::kClassification;
        for (std::size_t i : members[k]) {
            out[k].features.push_back(features[i]);
            out[k].targets.push_back({labels[i]});
        }
    }
    return out;
}

// Rotated 2-D classification domains: class means on the unit circle, rotated by
// domain_index * rotation_step, plus isotropic Gaussian noise. One domain (default
// the last) is held out as the out-of-federation group.
inline FederationSplit make_rotated_domains(std::size_t num_domains,
                                            std::size_t clients_per_domain,
                                            std::size_t samples_per_client,
                                            std::size_t num_classes,
                                            double rotation_step_degrees, double noise_sigma,
                                            std::uint64_t seed,
                                            std::size_t holdout_domain = static_cast<std::size_t>(-1)) {
    if (num_domains < 2) throw std::invalid_argument("make_rotated_domains: need >= 2 domains");
    if (clients_per_domain == 0 || samples_per_client == 0 || num_classes < 2)
        throw std::invalid_argument("make_rotated_domains: bad shape parameters");
    if (holdout_domain == static_cast<std::size_t>(-1)) holdout_domain = num_domains - 1;
    if (holdout_domain >= num_domains)
        throw std::invalid_argument("make_rotated_domains: holdout domain out of range");

    FederationSplit split;
    int next_id = 0;
    for (std::size_t d = 0; d < num_domains; ++d) {
        const double rot = rotation_step_degrees * static_cast<double>(d) * M_PI / 180.0;
        for (std::size_t c = 0; c < clients_per_domain; ++c) {
            ClientDataset ds;
            ds.client_id = next_id++;
            ds.task = Task::kClassification;
            Rng rng(derive_seed(seed, kDataSalt, static_cast<std::uint64_t>(ds.client_id)));
            for (std::size_t s = 0; s < samples_per_client; ++s) {
                const std::size_t label = rng.uniform_index(num_classes);
                const double angle =
                    2.0 * M_PI * static_cast<double>(label) / static_cast<double>(num_classes) + rot;
                ds.features.push_back({std::cos(angle) + noise_sigma * rng.normal(),
                                       std::sin(angle) + noise_sigma * rng.normal()});
                ds.targets.push_back({static_cast<double>(label)});
            }
            if (d == holdout_domain)
                split.out_of_federation.push_back(std::move(ds));
            else
                split.in_federation.push_back(std::move(ds));
        }
    }
    std::ostringstream meta;
    meta << "rotated domains=" << num_domains << " clients_per_domain=" << clients_per_domain
         << " samples_per_client=" << samples_per_client << " classes=" << num_classes
         << " step_deg=" << rotation_step_degrees << " sigma=" << noise_sigma
         << " holdout=" << holdout_domain << " seed=" << seed;
    split.metadata = meta.str();
    return split;
}

// Regional forecasting analogue: each sample is one sinusoidal series with a random
// global phase; region r shifts it by offset r*region_offset and phase r*region_offset.
// Features are the first half of the series, targets the second half. One region
// (default the last) is held out.
inline FederationSplit make_regional_regression(std::size_t num_regions,
                                                std::size_t clients_per_region,
                                                std::size_t series_len, double region_offset,
                                                std::uint64_t seed,
                                                std::size_t samples_per_client = 64,
                                                std::size_t holdout_region = static_cast<std::size_t>(-1)) {
    if (num_regions < 2) throw std::invalid_argument("make_regional_regression: need >= 2 regions");
    if (clients_per_region == 0 || samples_per_client == 0)
        throw std::invalid_argument("make_regional_regression: bad shape parameters");
    if (series_len < 2 || series_len % 2 != 0)
        throw std::invalid_argument("make_regional_regression: series_len must be even and >= 2");
    if (holdout_region == static_cast<std::size_t>(-1)) holdout_region = num_regions - 1;
    if (holdout_region >= num_regions)
        throw std::invalid_argument("make_regional_regression: holdout region out of range");

    const std::size_t half = series_len / 2;
    const double noise = 0.05;
    FederationSplit split;
    int next_id = 0;
    for (std::size_t r = 0; r < num_regions; ++r) {
        const double offset = region_offset * static_cast<double>(r);
        const double phase = region_offset * static_cast<double>(r);
        for (std::size_t c = 0; c < clients_per_region; ++c) {
            ClientDataset ds;
            ds.client_id = next_id++;
            ds.task = Task::kRegression;
            Rng rng(derive_seed(seed, kDataSalt, static_cast<std::uint64_t>(ds.client_id)));
            const double client_phase = rng.uniform(-0.1, 0.1);
            for (std::size_t s = 0; s < samples_per_client; ++s) {
                const double u = rng.uniform(0.0, 2.0 * M_PI);
                std::vector<double> series(series_len);
                for (std::size_t t = 0; t < series_len; ++t)
                    series[t] = std::sin(2.0 * M_PI * static_cast<double>(t) /
                                             static_cast<double>(series_len) +
                                         u + phase + client_phase) +
                                offset + noise * rng.normal();
                ds.features.emplace_back(series.begin(), series.begin() + half);
                ds.targets.emplace_back(series.begin() + half, series.end());
            }
            if (r == holdout_region)
                split.out_of_federation.push_back(std::move(ds));
            else
                split.in_federation.push_back(std::move(ds));
        }
    }
    std::ostringstream meta;
    meta << "regional regression regions=" << num_regions
         << " clients_per_region=" << clients_per_region << " series_len=" << series_len
         << " region_offset=" << region_offset << " samples_per_client=" << samples_per_client
         << " holdout=" << holdout_region << " seed=" << seed;
    split.metadata = meta.str();
    return split;
}

// Column mapping for CSV ingestion; label_col is a single column, so CSV datasets
// are single-output.
struct CsvSchema {
    std::vector<std::string> feature_cols;
    std::string label_col;
    std::string client_col;
    Task task = Task::kClassification;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline double parse_cell(const std::string& cell, std::size_t line_no, const std::string& col) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        throw std::runtime_error("csv: non-numeric value '" + cell + "' in column '" + col +
                                 "' at line " + std::to_string(line_no));
    return v;
}

}  // namespace detail

// Parses a comma-separated file (header row, numeric cells) into per-client datasets,
// grouped by the client column and sorted by client id.
inline std::vector<ClientDataset> load_csv(const std::string& path, const CsvSchema& schema) {
    if (schema.feature_cols.empty()) throw std::invalid_argument("csv: no feature columns");
    std::ifstream file(path);
    if (!file) throw std::runtime_error("csv: cannot open " + path);
    std::string line;
    if (!std::getline(file, line)) throw std::runtime_error("csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_line(line);

    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::runtime_error("csv: missing column '" + name + "' in " + path);
    };
    std::vector<std::size_t> feat_idx;
    for (const auto& name : schema.feature_cols) feat_idx.push_back(column(name));
    const std::size_t label_idx = column(schema.label_col);
    const std::size_t client_idx = column(schema.client_col);

    std::map<long long, ClientDataset> groups;
    std::size_t line_no = 1;
    while (std::getline(file, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("csv: wrong cell count at line " + std::to_string(line_no));
        const double client_val = detail::parse_cell(cells[client_idx], line_no, schema.client_col);
        if (client_val != std::floor(client_val))
            throw std::runtime_error("csv: non-integer client id at line " + std::to_string(line_no));
        const long long cid = static_cast<long long>(client_val);
        const double label = detail::parse_cell(cells[label_idx], line_no, schema.label_col);
        if (schema.task != Task::kRegression && (label < 0.0 || label != std::floor(label)))
            throw std::runtime_error("csv: class label must be a nonnegative integer at line " +
                                     std::to_string(line_no));
        auto& ds = groups[cid];
        std::vector<double> row;
        row.reserve(feat_idx.size());
        for (std::size_t f = 0; f < feat_idx.size(); ++f)
            row.push_back(detail::parse_cell(cells[feat_idx[f]], line_no, schema.feature_cols[f]));
        ds.features.push_back(std::move(row));
        ds.targets.push_back({label});
    }
    if (groups.empty()) throw std::runtime_error("csv: no data rows in " + path);

    std::vector<ClientDataset> out;
    out.reserve(groups.size());
    for (auto& [cid, ds] : groups) {  // std::map iterates ids in ascending order
        ds.client_id = static_cast<int>(cid);
        ds.task = schema.task;
        out.push_back(std::move(ds));
    }
    return out;
}

// Writes single-output datasets in load_csv's format with round-trippable doubles.
inline void save_csv(const std::string& path, const std::vector<ClientDataset>& clients,
                     const CsvSchema& schema) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("csv: cannot write " + path);
    file.precision(17);
    file << schema.client_col << "," << schema.label_col;
    for (const auto& name : schema.feature_cols) file << "," << name;
    file << "\n";
    for (const auto& ds : clients) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.targets[i].size() != 1)
                throw std::invalid_argument("csv: only single-output datasets can be saved");
            if (ds.features[i].size() != schema.feature_cols.size())
                throw std::invalid_argument("csv: feature width does not match schema");
            file << ds.client_id << "," << ds.targets[i][0];
            for (double v : ds.features[i]) file << "," << v;
            file << "\n";
        }
    }
}

}  // namespace tfl
