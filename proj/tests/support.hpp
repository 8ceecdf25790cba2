#pragma once

// Shared test oracles. Everything here recomputes expected values from first
// principles (path enumeration, grid search, finite differences, pairwise
// counting) and must stay independent of the library implementations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tfl/models.hpp"
#include "tfl/params.hpp"
#include "tfl/rng.hpp"
#include "tfl/topology.hpp"

namespace support {

// Single-layer parameter vector wrapping raw values.
inline tfl::ParameterVector make_pv(std::vector<double> values) {
    tfl::ParameterVector p;
    p.layers = {{"all", 0, values.size()}};
    p.values = std::move(values);
    return p;
}

// Unweighted graph from an explicit edge list; weights are 1.
inline tfl::ClientTopology make_graph(std::size_t n,
                                      const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                      double weight = 1.0) {
    tfl::ClientTopology g;
    g.node_count = n;
    g.weights.assign(n * n, 0.0);
    for (auto [i, j] : edges) {
        g.weights[i * n + j] = weight;
        g.weights[j * n + i] = weight;
    }
    return g;
}

namespace detail {

// All simple paths from s to t, found by exhaustive DFS. Fine for n <= 8.
inline void all_simple_paths(const tfl::ClientTopology& g, std::size_t t,
                             std::vector<std::size_t>& path, std::vector<bool>& used,
                             std::vector<std::vector<std::size_t>>& out) {
    const std::size_t v = path.back();
    if (v == t) {
        out.push_back(path);
        return;
    }
    for (std::size_t w = 0; w < g.node_count; ++w) {
        if (used[w] || g.at(v, w) == 0.0) continue;
        used[w] = true;
        path.push_back(w);
        all_simple_paths(g, t, path, used, out);
        path.pop_back();
        used[w] = false;
    }
}

}  // namespace detail

// Betweenness by brute-force shortest-path enumeration. Accumulates one
// fraction per (s < t) pair with the inner node index ascending, then divides
// by (K-1)(K-2)/2, so results match the library bitwise on exact-count graphs.
inline std::vector<double> oracle_betweenness(const tfl::ClientTopology& g) {
    const std::size_t n = g.node_count;
    std::vector<double> c(n, 0.0);
    if (n < 3) return c;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = s + 1; t < n; ++t) {
            std::vector<std::vector<std::size_t>> paths;
            std::vector<std::size_t> path{s};
            std::vector<bool> used(n, false);
            used[s] = true;
            detail::all_simple_paths(g, t, path, used, paths);
            if (paths.empty()) continue;
            std::size_t best = std::numeric_limits<std::size_t>::max();
            for (const auto& p : paths) best = std::min(best, p.size());
            double total = 0.0;
            std::vector<double> through(n, 0.0);
            for (const auto& p : paths) {
                if (p.size() != best) continue;
                total += 1.0;
                for (std::size_t i = 1; i + 1 < p.size(); ++i) through[p[i]] += 1.0;
            }
            for (std::size_t k = 0; k < n; ++k) {
                if (k == s || k == t || through[k] == 0.0) continue;
                c[k] += through[k] / total;
            }
        }
    }
    const double pair_norm = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
    for (auto& v : c) v /= pair_norm;
    return c;
}

// All-pairs shortest path lengths via Floyd-Warshall; -1 when unreachable.
inline std::vector<std::vector<int>> oracle_distances(const tfl::ClientTopology& g) {
    const std::size_t n = g.node_count;
    const int inf = std::numeric_limits<int>::max() / 4;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && g.at(i, j) != 0.0) d[i][j] = 1;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    for (auto& row : d)
        for (auto& v : row)
            if (v >= inf) v = -1;
    return d;
}

inline std::vector<double> oracle_closeness(const tfl::ClientTopology& g) {
    const std::size_t n = g.node_count;
    std::vector<double> c(n, 0.0);
    if (n < 2) return c;
    const auto d = oracle_distances(g);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        double reach = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || d[i][j] < 0) continue;
            sum += d[i][j];
            reach += 1.0;
        }
        if (reach > 0.0)
            c[i] = (static_cast<double>(n - 1) / sum) * (reach / static_cast<double>(n - 1));
    }
    return c;
}

inline std::vector<double> oracle_degree(const tfl::ClientTopology& g) {
    const std::size_t n = g.node_count;
    std::vector<double> c(n, 0.0);
    if (n < 2) return c;
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && g.at(i, j) != 0.0) deg += 1.0;
        c[i] = deg / static_cast<double>(n - 1);
    }
    return c;
}

// Euclidean projection onto the probability simplex by refined grid search,
// for K = 2 or 3. Final grid resolution ~1e-9, so coordinates are good to
// well under 1e-6.
inline std::vector<double> grid_project(const std::vector<double>& v) {
    auto objective2 = [&](double a) {
        const double d0 = a - v[0];
        const double d1 = (1.0 - a) - v[1];
        return d0 * d0 + d1 * d1;
    };
    if (v.size() == 2) {
        double lo = 0.0, hi = 1.0, best = 0.0;
        for (int level = 0; level < 9; ++level) {
            const double step = (hi - lo) / 100.0;
            double best_obj = std::numeric_limits<double>::infinity();
            for (int i = 0; i <= 100; ++i) {
                const double a = lo + step * i;
                const double obj = objective2(a);
                if (obj < best_obj) {
                    best_obj = obj;
                    best = a;
                }
            }
            lo = std::max(0.0, best - step);
            hi = std::min(1.0, best + step);
        }
        return {best, 1.0 - best};
    }
    if (v.size() != 3) throw std::invalid_argument("grid_project: only K = 2 or 3");
    auto objective3 = [&](double a, double b) {
        const double d0 = a - v[0];
        const double d1 = b - v[1];
        const double d2 = (1.0 - a - b) - v[2];
        return d0 * d0 + d1 * d1 + d2 * d2;
    };
    double alo = 0.0, ahi = 1.0, blo = 0.0, bhi = 1.0;
    double ba = 0.0, bb = 0.0;
    for (int level = 0; level < 9; ++level) {
        const double astep = (ahi - alo) / 60.0;
        const double bstep = (bhi - blo) / 60.0;
        double best_obj = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 60; ++i) {
            const double a = alo + astep * i;
            for (int j = 0; j <= 60; ++j) {
                const double b = blo + bstep * j;
                if (a + b > 1.0 + 1e-15) break;
                const double obj = objective3(a, b);
                if (obj < best_obj) {
                    best_obj = obj;
                    ba = a;
                    bb = b;
                }
            }
        }
        alo = std::max(0.0, ba - astep);
        ahi = std::min(1.0, ba + astep);
        blo = std::max(0.0, bb - bstep);
        bhi = std::min(1.0, bb + bstep);
    }
    return {ba, bb, 1.0 - ba - bb};
}

// KKT certificate for x = P_simplex(v): x on the simplex and a threshold tau
// with x_i = max(v_i - tau, 0).
inline bool kkt_holds(const std::vector<double>& v, const std::vector<double>& x, double tol) {
    double sum = 0.0;
    for (double xi : x) {
        if (xi < 0.0) return false;
        sum += xi;
    }
    if (std::abs(sum - 1.0) > 1e-9) return false;
    double tau = 0.0;
    bool seen = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0) continue;
        const double t = v[i] - x[i];
        if (seen && std::abs(t - tau) > tol) return false;
        tau = seen ? tau : t;
        seen = true;
    }
    if (!seen) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] <= 0.0 && v[i] > tau + tol) return false;
    return true;
}

// Central finite-difference gradient of a scalar function.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       const std::vector<double>& x, double h) {
    std::vector<double> g(x.size());
    std::vector<double> p = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        p[i] = xi + h;
        const double up = f(p);
        p[i] = xi - h;
        const double down = f(p);
        p[i] = xi;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// Largest relative deviation between two gradients, scaled by the larger norm.
inline double gradient_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        scale += std::max(a[i] * a[i], b[i] * b[i]);
    }
    return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

// ROC-AUC by O(n^2) pairwise comparison: wins plus half ties over P * N.
inline double oracle_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double numer = 0.0, pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 1) {
            pos += 1.0;
            continue;
        }
        neg += 1.0;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 1) continue;
            if (scores[j] > scores[i]) numer += 1.0;
            else if (scores[j] == scores[i]) numer += 0.5;
        }
    }
    return numer / (pos * neg);
}

// Naive pairwise similarity on flattened values plus explicit min-max pass.
// Returns the normalized matrix, or all 0.5 off-diagonal when the spread is 0.
inline std::vector<std::vector<double>> naive_similarity(
    const std::vector<tfl::ParameterVector>& params, tfl::SimilarityMetric metric) {
    const std::size_t k = params.size();
    auto raw_score = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0.0, na = 0.0, nb = 0.0, l1 = 0.0, l2 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
            l1 += std::abs(a[i] - b[i]);
            l2 += (a[i] - b[i]) * (a[i] - b[i]);
        }
        switch (metric) {
            case tfl::SimilarityMetric::kDot: return dot;
            case tfl::SimilarityMetric::kCosine: return dot / (std::sqrt(na) * std::sqrt(nb));
            case tfl::SimilarityMetric::kL1: return -l1;
            default: return -std::sqrt(l2);
        }
    };
    std::vector<std::vector<double>> raw(k, std::vector<double>(k, 0.0));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double s = raw_score(params[i].values, params[j].values);
            raw[i][j] = raw[j][i] = s;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    }
    std::vector<std::vector<double>> out(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            out[i][j] = (hi == lo) ? 0.5 : (raw[i][j] - lo) / (hi - lo);
        }
    return out;
}

// Ten linear-regression clients trained locally from a shared init: clients
// 0-4 each regress on a distinct weight vector, clients 5-9 share one. All
// target vectors have norm 2 so dot and cosine orderings agree.
inline std::vector<tfl::ParameterVector> train_two_group_clients(std::uint64_t seed) {
    const std::size_t d = 4;
    std::vector<std::vector<double>> targets_w(10, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < 4; ++i) targets_w[i][i] = 2.0;
    targets_w[4][0] = -2.0;
    for (std::size_t i = 5; i < 10; ++i) targets_w[i].assign(d, 1.0);

    tfl::ModelSpec spec;
    spec.kind = tfl::ModelKind::kLinearRegression;
    spec.input_dim = d;
    spec.output_dim = 1;
    const auto init = tfl::init_params(spec, tfl::derive_seed(seed, 11, 0));

    std::vector<tfl::ParameterVector> models;
    for (std::size_t c = 0; c < 10; ++c) {
        tfl::Rng rng(tfl::derive_seed(seed, 77, c));
        std::vector<std::vector<double>> xs(64, std::vector<double>(d));
        std::vector<std::vector<double>> ys(64, std::vector<double>(1));
        for (std::size_t i = 0; i < 64; ++i) {
            double y = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                xs[i][j] = rng.normal();
                y += targets_w[c][j] * xs[i][j];
            }
            ys[i][0] = y;
        }
        tfl::LocalTrainConfig cfg;
        cfg.epochs = 60;
        cfg.batch_size = 8;
        cfg.eta_theta = 0.05;
        cfg.seed = tfl::derive_seed(seed, 78, c);
        models.push_back(
            tfl::local_train(spec, init, xs, ys, tfl::Task::kRegression, cfg).params);
    }
    return models;
}

}  // namespace support
