#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfl/params.hpp"
#include "tfl/rng.hpp"

namespace tfl {

enum class SimilarityMetric {
    kDot,     // raw inner product
    kCosine,  // inner product over norms; undefined for zero vectors
    kL1,      // negated L1 distance (larger = more similar)
    kL2,      // negated L2 distance
};

enum class CentralityKind {
    kBetweenness,
    kDegree,
    kCloseness,
};

// Dense symmetric K x K score matrix, row-major.
struct SimilarityMatrix {
    std::size_t node_count = 0;
    std::vector<double> scores;   // node_count * node_count
    SimilarityMetric metric = SimilarityMetric::kDot;
    bool normalized = false;      // min-max rescaled to [0, 1] off-diagonal
    bool degenerate = false;      // all off-diagonal raw scores were identical
    std::size_t pair_evaluations = 0;  // similarity calls spent building this matrix

    double at(std::size_t i, std::size_t j) const { return scores[i * node_count + j]; }
    double& at(std::size_t i, std::size_t j) { return scores[i * node_count + j]; }
};

// Undirected weighted graph from thresholding a normalized similarity matrix.
struct ClientTopology {
    std::size_t node_count = 0;
    std::vector<double> weights;  // node_count * node_count, 0 = no edge
    double epsilon = 0.0;

    double at(std::size_t i, std::size_t j) const { return weights[i * node_count + j]; }
    double& at(std::size_t i, std::size_t j) { return weights[i * node_count + j]; }
    bool empty() const { return node_count == 0; }
};

struct CentralityVector {
    CentralityKind kind = CentralityKind::kBetweenness;
    std::vector<double> values;
};

// Softmax of a centrality vector; strictly positive, sums to 1.
struct TopologicalPrior {
    std::vector<double> values;
};

struct ClusterAssignment {
    std::vector<std::size_t> labels;        // client -> cluster id
    std::vector<ParameterVector> centroids; // one per cluster, same layout as inputs
    std::size_t cluster_count = 0;
};

namespace detail {

// Gathers the coordinate spans selected by the layer filter (all if empty).
inline std::vector<LayerSpan> filtered_spans(const ParameterVector& p,
                                             const std::vector<std::string>& layer_filter) {
    if (layer_filter.empty()) return p.layers;
    std::vector<LayerSpan> spans;
    spans.reserve(layer_filter.size());
    for (const auto& name : layer_filter) spans.push_back(p.layer(name));
    return spans;
}

}  // namespace detail

// Pairwise similarity of two parameter vectors over the (optionally filtered) coordinates.
// l1/l2 are negated distances so that larger always means more similar.
inline double similarity(const ParameterVector& a, const ParameterVector& b,
                         SimilarityMetric metric,
                         const std::vector<std::string>& layer_filter = {}) {
    if (!a.same_layout(b))
        throw std::invalid_argument("similarity: parameter vectors have different layouts");
    const auto spans = detail::filtered_spans(a, layer_filter);
    double dot = 0.0, na = 0.0, nb = 0.0, l1 = 0.0, l2 = 0.0;
    for (const auto& s : spans) {
        for (std::size_t i = s.offset; i < s.offset + s.size; ++i) {
            const double x = a.values[i], y = b.values[i];
            dot += x * y;
            na += x * x;
            nb += y * y;
            const double d = x - y;
            l1 += std::fabs(d);
            l2 += d * d;
        }
    }
    switch (metric) {
        case SimilarityMetric::kDot:
            return dot;
        case SimilarityMetric::kCosine: {
            if (na == 0.0 || nb == 0.0)
                throw std::domain_error("similarity: cosine undefined for zero vector");
            return dot / (std::sqrt(na) * std::sqrt(nb));
        }
        case SimilarityMetric::kL1:
            return -l1;
        case SimilarityMetric::kL2:
            return -std::sqrt(l2);
    }
    throw std::logic_error("similarity: unknown metric");
}

// All-pairs similarity, min-max normalized off-diagonal to [0, 1], zero diagonal.
// A zero-spread score set (e.g. K = 2, or identical models) normalizes to all 0.5
// and sets the degenerate flag.
inline SimilarityMatrix build_similarity_matrix(const std::vector<ParameterVector>& params,
                                                SimilarityMetric metric,
                                                const std::vector<std::string>& layer_filter = {}) {
    const std::size_t k = params.size();
    if (k < 2) throw std::invalid_argument("build_similarity_matrix: need at least 2 clients");
    SimilarityMatrix m;
    m.node_count = k;
    m.metric = metric;
    m.scores.assign(k * k, 0.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double s = similarity(params[i], params[j], metric, layer_filter);
            ++m.pair_evaluations;
            m.at(i, j) = s;
            m.at(j, i) = s;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    }
    const double spread = hi - lo;
    m.degenerate = (spread == 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (i != j) m.at(i, j) = m.degenerate ? 0.5 : (m.at(i, j) - lo) / spread;
    m.normalized = true;
    return m;
}

// Keeps normalized similarities >= epsilon as edge weights; everything else is 0.
inline ClientTopology build_epsilon_graph(const SimilarityMatrix& sim, double epsilon) {
    if (!sim.normalized)
        throw std::invalid_argument("build_epsilon_graph: similarity matrix must be normalized");
    if (epsilon > 1.0)
        throw std::invalid_argument("build_epsilon_graph: epsilon > 1 keeps no edge");
    if (epsilon < 0.0) throw std::invalid_argument("build_epsilon_graph: epsilon must be >= 0");
    ClientTopology g;
    g.node_count = sim.node_count;
    g.epsilon = epsilon;
    g.weights.assign(sim.node_count * sim.node_count, 0.0);
    for (std::size_t i = 0; i < sim.node_count; ++i)
        for (std::size_t j = 0; j < sim.node_count; ++j)
            if (i != j && sim.at(i, j) >= epsilon) g.at(i, j) = sim.at(i, j);
    return g;
}

namespace detail {

inline std::vector<std::vector<std::size_t>> adjacency_list(const ClientTopology& g) {
    std::vector<std::vector<std::size_t>> adj(g.node_count);
    for (std::size_t i = 0; i < g.node_count; ++i)
        for (std::size_t j = 0; j < g.node_count; ++j)
            if (g.at(i, j) != 0.0) adj[i].push_back(j);
    return adj;
}

// Unweighted BFS from src: hop distances (-1 unreachable) and shortest-path counts.
inline void bfs_count(const std::vector<std::vector<std::size_t>>& adj, std::size_t src,
                      std::vector<int>& dist, std::vector<double>& sigma) {
    const std::size_t n = adj.size();
    dist.assign(n, -1);
    sigma.assign(n, 0.0);
    dist[src] = 0;
    sigma[src] = 1.0;
    std::deque<std::size_t> queue{src};
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        for (std::size_t w : adj[v]) {
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
        }
    }
}

}  // namespace detail

// Shortest-path betweenness on the unweighted graph induced by nonzero edges.
// Each unordered pair contributes sigma_st(k)/sigma_st once; the result is divided
// by (K-1)(K-2)/2 so values lie in [0, 1]. Identically zero for K < 3.
// Accumulation is per-pair in (s, t) order so independent oracles can match it exactly.
inline CentralityVector betweenness(const ClientTopology& g) {
    const std::size_t n = g.node_count;
    CentralityVector c;
    c.kind = CentralityKind::kBetweenness;
    c.values.assign(n, 0.0);
    if (n < 3) return c;
    const auto adj = detail::adjacency_list(g);
    std::vector<std::vector<int>> dist(n);
    std::vector<std::vector<double>> sigma(n);
    for (std::size_t s = 0; s < n; ++s) detail::bfs_count(adj, s, dist[s], sigma[s]);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = s + 1; t < n; ++t) {
            if (sigma[s][t] == 0.0) continue;  // unreachable pair
            for (std::size_t k = 0; k < n; ++k) {
                if (k == s || k == t) continue;
                if (dist[s][k] < 0 || dist[k][t] < 0) continue;
                if (dist[s][k] + dist[k][t] != dist[s][t]) continue;
                c.values[k] += sigma[s][k] * sigma[k][t] / sigma[s][t];
            }
        }
    }
    const double pair_norm = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
    for (auto& v : c.values) v /= pair_norm;
    return c;
}

// Fraction of possible neighbors: deg(k) / (K-1).
inline CentralityVector degree_centrality(const ClientTopology& g) {
    const std::size_t n = g.node_count;
    CentralityVector c;
    c.kind = CentralityKind::kDegree;
    c.values.assign(n, 0.0);
    if (n < 2) return c;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t deg = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && g.at(i, j) != 0.0) ++deg;
        c.values[i] = static_cast<double>(deg) / static_cast<double>(n - 1);
    }
    return c;
}

// (K-1)/sum_dist over reachable nodes, scaled by reachable/(K-1); 0 for isolated nodes.
inline CentralityVector closeness_centrality(const ClientTopology& g) {
    const std::size_t n = g.node_count;
    CentralityVector c;
    c.kind = CentralityKind::kCloseness;
    c.values.assign(n, 0.0);
    if (n < 2) return c;
    const auto adj = detail::adjacency_list(g);
    std::vector<int> dist;
    std::vector<double> sigma;
    for (std::size_t i = 0; i < n; ++i) {
        detail::bfs_count(adj, i, dist, sigma);
        double sum = 0.0;
        std::size_t reachable = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || dist[j] < 0) continue;
            sum += dist[j];
            ++reachable;
        }
        if (reachable == 0) continue;
        c.values[i] = (static_cast<double>(n - 1) / sum) *
                      (static_cast<double>(reachable) / static_cast<double>(n - 1));
    }
    return c;
}

inline CentralityVector centrality(const ClientTopology& g, CentralityKind kind) {
    switch (kind) {
        case CentralityKind::kBetweenness: return betweenness(g);
        case CentralityKind::kDegree: return degree_centrality(g);
        case CentralityKind::kCloseness: return closeness_centrality(g);
    }
    throw std::logic_error("centrality: unknown kind");
}

namespace detail {

// Max-shifted softmax; strictly positive, sums to 1.
inline std::vector<double> softmax(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("softmax: empty input");
    const double m = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (auto& x : out) x /= sum;
    return out;
}

}  // namespace detail

inline TopologicalPrior prior_from_centrality(const CentralityVector& c) {
    for (double v : c.values)
        if (!std::isfinite(v)) throw std::invalid_argument("prior_from_centrality: non-finite centrality");
    return TopologicalPrior{detail::softmax(c.values)};
}

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

// Seeded k-means over flattened model weights: k-means++ init (distinct points),
// Lloyd iterations until max centroid shift < 1e-6 or 100 iterations. Empty clusters
// are reseeded with the point farthest from its assigned centroid, so none stay empty.
inline ClusterAssignment cluster_clients(const std::vector<ParameterVector>& params,
                                         std::size_t cluster_count, std::uint64_t seed) {
    const std::size_t k = params.size();
    if (k == 0) throw std::invalid_argument("cluster_clients: no clients");
    if (cluster_count == 0 || cluster_count > k)
        throw std::invalid_argument("cluster_clients: cluster count must be in [1, K]");
    for (const auto& p : params)
        if (!p.same_layout(params.front()))
            throw std::invalid_argument("cluster_clients: parameter layouts differ");

    Rng rng(seed);
    const std::size_t dim = params.front().size();

    // k-means++ seeding over distinct data points.
    std::vector<std::vector<double>> centroids;
    centroids.reserve(cluster_count);
    std::vector<bool> chosen(k, false);
    std::vector<double> d2(k, std::numeric_limits<double>::infinity());
    {
        const std::size_t first = rng.uniform_index(k);
        centroids.push_back(params[first].values);
        chosen[first] = true;
    }
    while (centroids.size() < cluster_count) {
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            d2[i] = chosen[i] ? 0.0
                              : std::min(d2[i], detail::sq_dist(params[i].values, centroids.back()));
            total += d2[i];
        }
        std::size_t pick = k;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (std::size_t i = 0; i < k; ++i) {
                u -= d2[i];
                if (u <= 0.0 && !chosen[i]) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick == k) {  // all remaining points coincide with a centroid
            for (std::size_t i = 0; i < k; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
        }
        centroids.push_back(params[pick].values);
        chosen[pick] = true;
    }

    std::vector<std::size_t> labels(k, 0);
    std::vector<std::size_t> counts(cluster_count, 0);
    for (int iter = 0; iter < 100; ++iter) {
        // Assign to nearest centroid, ties to the lowest cluster id.
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t best = 0;
            double best_d = detail::sq_dist(params[i].values, centroids[0]);
            for (std::size_t c = 1; c < cluster_count; ++c) {
                const double d = detail::sq_dist(params[i].values, centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            labels[i] = best;
        }
        for (std::size_t l : labels) ++counts[l];

        // Reseed each empty cluster with the point farthest from its centroid,
        // stealing only from clusters that keep at least one member.
        for (std::size_t c = 0; c < cluster_count; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = k;
            double far_d = -1.0;
            for (std::size_t i = 0; i < k; ++i) {
                if (counts[labels[i]] < 2) continue;
                const double d = detail::sq_dist(params[i].values, centroids[labels[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == k) break;  // nothing stealable (more clusters than distinct points)
            --counts[labels[far]];
            labels[far] = c;
            counts[c] = 1;
            centroids[c] = params[far].values;
        }

        // Recompute means and measure the largest centroid move.
        std::vector<std::vector<double>> next(cluster_count, std::vector<double>(dim, 0.0));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t d = 0; d < dim; ++d) next[labels[i]][d] += params[i].values[d];
        double shift = 0.0;
        for (std::size_t c = 0; c < cluster_count; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) next[c][d] /= static_cast<double>(counts[c]);
            shift = std::max(shift, std::sqrt(detail::sq_dist(next[c], centroids[c])));
            centroids[c] = std::move(next[c]);
        }
        if (shift < 1e-6) break;
    }

    ClusterAssignment out;
    out.labels = std::move(labels);
    out.cluster_count = cluster_count;
    out.centroids.reserve(cluster_count);
    for (std::size_t c = 0; c < cluster_count; ++c)
        out.centroids.push_back(ParameterVector{centroids[c], params.front().layers});
    return out;
}

// Cluster-level softmax prior spread evenly over each cluster's members:
// p_k = softmax(cluster centrality)_{cluster(k)} / |cluster(k)|.
inline TopologicalPrior clustered_prior(const ClusterAssignment& assignment,
                                        const ClientTopology& cluster_topology,
                                        CentralityKind kind) {
    if (cluster_topology.node_count != assignment.cluster_count)
        throw std::invalid_argument("clustered_prior: topology size != cluster count");
    const auto q = detail::softmax(centrality(cluster_topology, kind).values);
    std::vector<std::size_t> counts(assignment.cluster_count, 0);
    for (std::size_t l : assignment.labels) {
        if (l >= assignment.cluster_count)
            throw std::invalid_argument("clustered_prior: label out of range");
        ++counts[l];
    }
    for (std::size_t c = 0; c < assignment.cluster_count; ++c)
        if (counts[c] == 0) throw std::invalid_argument("clustered_prior: empty cluster");
    TopologicalPrior p;
    p.values.resize(assignment.labels.size());
    for (std::size_t i = 0; i < assignment.labels.size(); ++i)
        p.values[i] = q[assignment.labels[i]] / static_cast<double>(counts[assignment.labels[i]]);
    return p;
}

}  // namespace tfl
