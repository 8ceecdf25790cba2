#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "tfl/rng.hpp"
#include "tfl/topology.hpp"

namespace {

using support::make_graph;
using support::make_pv;
using tfl::CentralityKind;
using tfl::SimilarityMetric;

TEST(Similarity, DotProductExample) {
    EXPECT_EQ(tfl::similarity(make_pv({1.0, 2.0}), make_pv({3.0, 4.0}), SimilarityMetric::kDot),
              11.0);
}

TEST(Similarity, CosineOfIdenticalVectorsIsOne) {
    const auto v = make_pv({0.3, -1.2, 2.5});
    EXPECT_NEAR(tfl::similarity(v, v, SimilarityMetric::kCosine), 1.0, 1e-12);
}

TEST(Similarity, CosineRejectsZeroVector) {
    EXPECT_THROW(
        tfl::similarity(make_pv({0.0, 0.0}), make_pv({1.0, 0.0}), SimilarityMetric::kCosine),
        std::domain_error);
}

TEST(Similarity, NegativeL2DistanceExample) {
    EXPECT_DOUBLE_EQ(
        tfl::similarity(make_pv({1.0, 0.0}), make_pv({0.0, 1.0}), SimilarityMetric::kL2),
        -std::sqrt(2.0));
}

TEST(Similarity, NegativeL1DistanceExample) {
    EXPECT_EQ(tfl::similarity(make_pv({1.0, 2.0}), make_pv({3.0, 4.0}), SimilarityMetric::kL1),
              -4.0);
}

TEST(Similarity, LayoutMismatchThrows) {
    tfl::ParameterVector a = make_pv({1.0, 2.0});
    tfl::ParameterVector b;
    b.values = {1.0, 2.0};
    b.layers = {{"w", 0, 1}, {"b", 1, 1}};
    EXPECT_THROW(tfl::similarity(a, b, SimilarityMetric::kDot), std::invalid_argument);
}

TEST(Similarity, LayerFilterRestrictsComparedSpans) {
    tfl::ParameterVector a;
    a.values = {1.0, 2.0, 100.0};
    a.layers = {{"w", 0, 2}, {"b", 2, 1}};
    tfl::ParameterVector b;
    b.values = {3.0, 4.0, -100.0};
    b.layers = a.layers;
    EXPECT_EQ(tfl::similarity(a, b, SimilarityMetric::kDot, {"w"}), 11.0);
    EXPECT_THROW(tfl::similarity(a, b, SimilarityMetric::kDot, {"missing"}),
                 std::invalid_argument);
}

TEST(SimilarityMatrix, TwoClientsAreAlwaysDegenerate) {
    const auto m = tfl::build_similarity_matrix({make_pv({1.0, 0.0}), make_pv({0.0, 1.0})},
                                                SimilarityMetric::kDot);
    EXPECT_TRUE(m.degenerate);
    EXPECT_TRUE(m.normalized);
    EXPECT_EQ(m.at(0, 0), 0.0);
    EXPECT_EQ(m.at(0, 1), 0.5);
    EXPECT_EQ(m.at(1, 0), 0.5);
    EXPECT_EQ(m.pair_evaluations, 1u);
}

TEST(SimilarityMatrix, IdenticalClientsAreDegenerate) {
    const auto v = make_pv({1.0, 2.0, 3.0});
    const auto m = tfl::build_similarity_matrix({v, v, v}, SimilarityMetric::kL2);
    EXPECT_TRUE(m.degenerate);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m.at(i, j), i == j ? 0.0 : 0.5);
}

TEST(SimilarityMatrix, NormalizedScoresSpanUnitInterval) {
    tfl::Rng rng(42);
    std::vector<tfl::ParameterVector> params;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.uniform(-2.0, 2.0);
        params.push_back(make_pv(v));
    }
    const auto m = tfl::build_similarity_matrix(params, SimilarityMetric::kL2);
    EXPECT_FALSE(m.degenerate);
    EXPECT_EQ(m.pair_evaluations, 15u);
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(m.at(i, i), 0.0);
        for (std::size_t j = 0; j < 6; ++j) {
            if (i == j) continue;
            EXPECT_EQ(m.at(i, j), m.at(j, i));
            EXPECT_GE(m.at(i, j), 0.0);
            EXPECT_LE(m.at(i, j), 1.0);
            lo = std::min(lo, m.at(i, j));
            hi = std::max(hi, m.at(i, j));
        }
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 1.0);
}

TEST(SimilarityMatrix, MatchesNaivePairwiseOracle) {
    tfl::Rng rng(321);
    for (auto metric : {SimilarityMetric::kDot, SimilarityMetric::kCosine, SimilarityMetric::kL1,
                        SimilarityMetric::kL2}) {
        std::vector<tfl::ParameterVector> params;
        for (int i = 0; i < 5; ++i) {
            std::vector<double> v(7);
            for (auto& x : v) x = rng.uniform(-1.0, 1.0) + 0.01;
            params.push_back(make_pv(v));
        }
        const auto got = tfl::build_similarity_matrix(params, metric);
        const auto want = support::naive_similarity(params, metric);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(got.at(i, j), want[i][j], 1e-12);
    }
}

TEST(SimilarityMatrix, NeedsAtLeastTwoClients) {
    EXPECT_THROW(tfl::build_similarity_matrix({make_pv({1.0})}, SimilarityMetric::kDot),
                 std::invalid_argument);
}

TEST(EpsilonGraph, RequiresNormalizedScores) {
    tfl::SimilarityMatrix m;
    m.node_count = 2;
    m.scores = {0.0, 3.0, 3.0, 0.0};
    m.normalized = false;
    EXPECT_THROW(tfl::build_epsilon_graph(m, 0.5), std::invalid_argument);
}

TEST(EpsilonGraph, RejectsEpsilonOutsideUnitInterval) {
    const auto m = tfl::build_similarity_matrix({make_pv({1.0}), make_pv({2.0})},
                                                SimilarityMetric::kDot);
    EXPECT_THROW(tfl::build_epsilon_graph(m, 1.5), std::invalid_argument);
    EXPECT_THROW(tfl::build_epsilon_graph(m, -0.1), std::invalid_argument);
}

TEST(EpsilonGraph, ThresholdIsInclusive) {
    std::vector<tfl::ParameterVector> params{make_pv({0.0}), make_pv({1.0}), make_pv({3.0})};
    const auto m = tfl::build_similarity_matrix(params, SimilarityMetric::kL2);
    // Raw scores: -1 (0,1), -3 (0,2), -2 (1,2); normalized: 1, 0, 0.5.
    const auto g1 = tfl::build_epsilon_graph(m, 1.0);
    EXPECT_EQ(g1.at(0, 1), 1.0);
    EXPECT_EQ(g1.at(0, 2), 0.0);
    EXPECT_EQ(g1.at(1, 2), 0.0);
    const auto g05 = tfl::build_epsilon_graph(m, 0.5);
    EXPECT_EQ(g05.at(0, 1), 1.0);
    EXPECT_EQ(g05.at(1, 2), 0.5);
    EXPECT_EQ(g05.at(0, 2), 0.0);
}

TEST(EpsilonGraph, ZeroEpsilonKeepsAllScores) {
    std::vector<tfl::ParameterVector> params{make_pv({0.0}), make_pv({1.0}), make_pv({3.0})};
    const auto m = tfl::build_similarity_matrix(params, SimilarityMetric::kL2);
    const auto g = tfl::build_epsilon_graph(m, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(g.at(i, j), m.at(i, j));
}

TEST(Betweenness, PathGraphCenterCarriesAllPairs) {
    const auto c = tfl::betweenness(make_graph(3, {{0, 1}, {1, 2}}));
    EXPECT_EQ(c.values, (std::vector<double>{0.0, 1.0, 0.0}));
}

TEST(Betweenness, StarCenterIsMaximal) {
    const auto c = tfl::betweenness(make_graph(4, {{0, 1}, {0, 2}, {0, 3}}));
    EXPECT_EQ(c.values, (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(Betweenness, CompleteGraphIsAllZero) {
    const auto c = tfl::betweenness(make_graph(3, {{0, 1}, {0, 2}, {1, 2}}));
    EXPECT_EQ(c.values, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Betweenness, CycleSplitsShortestPaths) {
    // C4: opposite corners have two shortest paths, each interior node carries 1/2.
    const auto c = tfl::betweenness(make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}));
    const auto want = support::oracle_betweenness(make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}));
    EXPECT_EQ(c.values, want);
    for (double v : c.values) EXPECT_DOUBLE_EQ(v, 0.5 / 3.0);
}

TEST(Betweenness, FixedFiveNodeGraph) {
    const auto g = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 3}});
    const auto c = tfl::betweenness(g);
    EXPECT_EQ(c.values, (std::vector<double>{0.0, 0.5, 0.0, 0.5, 0.0}));
    EXPECT_EQ(c.values, support::oracle_betweenness(g));
}

TEST(Betweenness, TinyGraphsAreZero) {
    EXPECT_EQ(tfl::betweenness(make_graph(2, {{0, 1}})).values, (std::vector<double>{0.0, 0.0}));
}

TEST(Betweenness, DisconnectedPairsContributeNothing) {
    // Two components: a path 0-1-2 and an isolated edge 3-4.
    const auto g = make_graph(5, {{0, 1}, {1, 2}, {3, 4}});
    EXPECT_EQ(tfl::betweenness(g).values, support::oracle_betweenness(g));
}

TEST(Betweenness, MatchesPathEnumerationOracleExactly) {
    tfl::Rng rng(2718);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t n = 3 + rng.uniform_index(5);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (rng.uniform() < 0.45) edges.push_back({i, j});
        const auto g = make_graph(n, edges);
        EXPECT_EQ(tfl::betweenness(g).values, support::oracle_betweenness(g));
    }
}

TEST(DegreeCentrality, StarDegrees) {
    const auto c = tfl::degree_centrality(make_graph(4, {{0, 1}, {0, 2}, {0, 3}}));
    EXPECT_EQ(c.values[0], 1.0);
    for (int i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(c.values[i], 1.0 / 3.0);
}

TEST(ClosenessCentrality, PathCenterIsOne) {
    const auto c = tfl::closeness_centrality(make_graph(3, {{0, 1}, {1, 2}}));
    EXPECT_EQ(c.values[1], 1.0);
    EXPECT_DOUBLE_EQ(c.values[0], 2.0 / 3.0);
}

TEST(ClosenessCentrality, IsolatedNodeScoresZero) {
    const auto c = tfl::closeness_centrality(make_graph(3, {{0, 1}}));
    EXPECT_EQ(c.values[2], 0.0);
}

TEST(Centrality, MatchesIndependentOracles) {
    tfl::Rng rng(1123);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 3 + rng.uniform_index(5);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (rng.uniform() < 0.4) edges.push_back({i, j});
        const auto g = make_graph(n, edges);
        const auto deg = tfl::centrality(g, CentralityKind::kDegree).values;
        const auto clo = tfl::centrality(g, CentralityKind::kCloseness).values;
        const auto deg_want = support::oracle_degree(g);
        const auto clo_want = support::oracle_closeness(g);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_DOUBLE_EQ(deg[i], deg_want[i]);
            EXPECT_NEAR(clo[i], clo_want[i], 1e-15);
        }
    }
}

TEST(Prior, SoftmaxExample) {
    const auto p = tfl::prior_from_centrality({CentralityKind::kDegree, {0.0, std::log(3.0)}});
    EXPECT_NEAR(p.values[0], 0.25, 1e-15);
    EXPECT_NEAR(p.values[1], 0.75, 1e-15);
}

TEST(Prior, ShiftInvariantAndNormalized) {
    tfl::Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.uniform(-3.0, 3.0);
        auto shifted = v;
        for (auto& x : shifted) x += 17.5;
        const auto a = tfl::prior_from_centrality({CentralityKind::kDegree, v}).values;
        const auto b = tfl::prior_from_centrality({CentralityKind::kDegree, shifted}).values;
        double sum = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            EXPECT_NEAR(a[i], b[i], 1e-12);
            sum += a[i];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(Prior, EqualCentralityGivesUniform) {
    const auto p = tfl::prior_from_centrality({CentralityKind::kDegree, {0.4, 0.4, 0.4, 0.4}});
    for (double x : p.values) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(Clustering, EachPointItsOwnClusterWhenCEqualsK) {
    std::vector<tfl::ParameterVector> params{make_pv({0.0, 0.0}), make_pv({5.0, 0.0}),
                                             make_pv({0.0, 5.0})};
    const auto a = tfl::cluster_clients(params, 3, 7);
    EXPECT_EQ(a.cluster_count, 3u);
    std::vector<std::size_t> counts(3, 0);
    for (std::size_t k = 0; k < 3; ++k) {
        ++counts[a.labels[k]];
        EXPECT_EQ(a.centroids[a.labels[k]].values, params[k].values);
    }
    EXPECT_EQ(counts, (std::vector<std::size_t>{1, 1, 1}));
}

TEST(Clustering, SingleClusterCentroidIsMean) {
    std::vector<tfl::ParameterVector> params{make_pv({1.0, 3.0}), make_pv({3.0, 5.0}),
                                             make_pv({5.0, 1.0})};
    const auto a = tfl::cluster_clients(params, 1, 7);
    EXPECT_EQ(a.labels, (std::vector<std::size_t>{0, 0, 0}));
    EXPECT_DOUBLE_EQ(a.centroids[0].values[0], 3.0);
    EXPECT_DOUBLE_EQ(a.centroids[0].values[1], 3.0);
}

TEST(Clustering, RecoversTwoSeparatedBlobs) {
    tfl::Rng rng(55);
    std::vector<tfl::ParameterVector> params;
    for (int i = 0; i < 8; ++i) {
        const double cx = i < 4 ? -10.0 : 10.0;
        params.push_back(make_pv({cx + rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)}));
    }
    const auto a = tfl::cluster_clients(params, 2, 99);
    for (int i = 1; i < 4; ++i) EXPECT_EQ(a.labels[i], a.labels[0]);
    for (int i = 5; i < 8; ++i) EXPECT_EQ(a.labels[i], a.labels[4]);
    EXPECT_NE(a.labels[0], a.labels[4]);
}

TEST(Clustering, DeterministicGivenSeed) {
    tfl::Rng rng(4);
    std::vector<tfl::ParameterVector> params;
    for (int i = 0; i < 12; ++i)
        params.push_back(make_pv({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}));
    const auto a = tfl::cluster_clients(params, 4, 31);
    const auto b = tfl::cluster_clients(params, 4, 31);
    EXPECT_EQ(a.labels, b.labels);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(a.centroids[c].values, b.centroids[c].values);
}

TEST(Clustering, NoClusterLeftEmpty) {
    tfl::Rng rng(66);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<tfl::ParameterVector> params;
        const std::size_t k = 5 + rng.uniform_index(6);
        for (std::size_t i = 0; i < k; ++i)
            params.push_back(make_pv({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}));
        const std::size_t c = 2 + rng.uniform_index(k - 2);
        const auto a = tfl::cluster_clients(params, c, rng.next_u64());
        std::vector<std::size_t> counts(c, 0);
        for (auto l : a.labels) {
            ASSERT_LT(l, c);
            ++counts[l];
        }
        for (auto n : counts) EXPECT_GT(n, 0u);
    }
}

TEST(ClusteredPrior, SplitsClusterMassEvenly) {
    tfl::ClusterAssignment a;
    a.labels = {0, 0, 1, 1, 1};
    a.cluster_count = 2;
    // Two-node cluster graph: betweenness is zero for both, so the cluster prior is uniform.
    const auto g = make_graph(2, {{0, 1}}, 0.5);
    const auto p = tfl::clustered_prior(a, g, CentralityKind::kBetweenness);
    EXPECT_DOUBLE_EQ(p.values[0], 0.25);
    EXPECT_DOUBLE_EQ(p.values[1], 0.25);
    EXPECT_DOUBLE_EQ(p.values[2], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(p.values[3], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(p.values[4], 1.0 / 6.0);
}

TEST(ClusteredPrior, RejectsMismatchedTopology) {
    tfl::ClusterAssignment a;
    a.labels = {0, 1};
    a.cluster_count = 2;
    EXPECT_THROW(tfl::clustered_prior(a, make_graph(3, {}), CentralityKind::kDegree),
                 std::invalid_argument);
}

TEST(TwoGroupClients, SharedGroupOutscoresOutsidersOnEveryMetric) {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto models = support::train_two_group_clients(seed);
        for (auto metric : {SimilarityMetric::kDot, SimilarityMetric::kCosine,
                            SimilarityMetric::kL1, SimilarityMetric::kL2}) {
            const auto m = tfl::build_similarity_matrix(models, metric);
            double within_min = 1.0, cross_max = 0.0;
            for (std::size_t j = 5; j < 9; ++j) within_min = std::min(within_min, m.at(9, j));
            for (std::size_t j = 0; j < 5; ++j) cross_max = std::max(cross_max, m.at(9, j));
            EXPECT_GT(within_min, cross_max)
                << "metric " << static_cast<int>(metric) << " seed " << seed;
        }
    }
}

}  // namespace
