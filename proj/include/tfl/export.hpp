#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "tfl/topology.hpp"

namespace tfl {

// Topology as JSON: node ids, weighted undirected edge list (k < l), threshold,
// per-node centrality and prior.
inline nlohmann::json topology_to_json(const ClientTopology& g, const CentralityVector& c,
                                       const TopologicalPrior& prior) {
    if (c.values.size() != g.node_count || prior.values.size() != g.node_count)
        throw std::invalid_argument("topology export: size mismatch");
    nlohmann::json doc;
    doc["nodes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < g.node_count; ++i) doc["nodes"].push_back(i);
    doc["edges"] = nlohmann::json::array();
    for (std::size_t i = 0; i < g.node_count; ++i)
        for (std::size_t j = i + 1; j < g.node_count; ++j)
            if (g.at(i, j) != 0.0) doc["edges"].push_back({i, j, g.at(i, j)});
    doc["epsilon"] = g.epsilon;
    doc["centrality"] = c.values;
    doc["prior"] = prior.values;
    return doc;
}

// Graphviz DOT, undirected, edge weights as labels with 4 decimals.
inline std::string topology_to_dot(const ClientTopology& g) {
    std::string out = "graph client_topology {\n";
    for (std::size_t i = 0; i < g.node_count; ++i) out += "  " + std::to_string(i) + ";\n";
    char buf[64];
    for (std::size_t i = 0; i < g.node_count; ++i)
        for (std::size_t j = i + 1; j < g.node_count; ++j)
            if (g.at(i, j) != 0.0) {
                std::snprintf(buf, sizeof(buf), "%.4f", g.at(i, j));
                out += "  " + std::to_string(i) + " -- " + std::to_string(j) + " [label=\"" +
                       buf + "\"];\n";
            }
    out += "}\n";
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    file << content;
}

}  // namespace tfl
