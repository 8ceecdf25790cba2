#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tfl {

// Fraction of correct predictions.
inline double accuracy(const std::vector<std::size_t>& predicted,
                       const std::vector<std::size_t>& actual) {
    if (predicted.size() != actual.size()) throw std::invalid_argument("accuracy: size mismatch");
    if (predicted.empty()) throw std::invalid_argument("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == actual[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

// Mean squared error over all outputs of all samples.
inline double mse(const std::vector<std::vector<double>>& predicted,
                  const std::vector<std::vector<double>>& actual) {
    if (predicted.size() != actual.size()) throw std::invalid_argument("mse: size mismatch");
    if (predicted.empty()) throw std::invalid_argument("mse: empty input");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i].size() != actual[i].size())
            throw std::invalid_argument("mse: output width mismatch");
        for (std::size_t j = 0; j < predicted[i].size(); ++j) {
            const double d = predicted[i][j] - actual[i][j];
            total += d * d;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("mse: empty outputs");
    return total / static_cast<double>(count);
}

// Rank-based ROC-AUC with average ranks for ties; ties contribute 0.5, matching the
// pairwise definition (wins + 0.5 * ties) / (positives * negatives) exactly.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
    if (scores.empty()) throw std::invalid_argument("roc_auc: empty input");
    std::size_t pos = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("roc_auc: labels must be 0/1");
        pos += static_cast<std::size_t>(y);
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("roc_auc: needs both a positive and a negative");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of positive ranks, with tied scores sharing the average rank of their block.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1) pos_rank_sum += avg_rank;
        i = j;
    }
    const double numer =
        pos_rank_sum - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
    return numer / (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace tfl
