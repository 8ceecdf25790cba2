#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tfl/rng.hpp"

namespace tfl {

// Client mixture weights; on the probability simplex (nonnegative, sums to 1 within 1e-12).
using LambdaWeights = std::vector<double>;

struct DualConfig {
    double q = 0.1;            // KL regularizer strength toward the prior
    double eta_lambda = 0.1;   // dual ascent step size
    double clamp_floor = 1e-12;  // lambda floor inside logs
};

// Euclidean projection onto the probability simplex (sorted-threshold algorithm).
// Inputs already on the simplex are returned unchanged, which makes the projection
// exactly idempotent.
inline std::vector<double> project_simplex(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("project_simplex: empty input");
    double sum = 0.0;
    bool nonneg = true;
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument("project_simplex: non-finite input");
        if (x < 0.0) nonneg = false;
        sum += x;
    }
    if (nonneg && std::fabs(sum - 1.0) <= 1e-12) return v;

    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double prefix = 0.0, tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {  // tau from the largest feasible support
        prefix += sorted[j];
        const double t = (prefix - 1.0) / static_cast<double>(j + 1);
        if (sorted[j] - t > 0.0) tau = t;
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - tau, 0.0);
    return out;
}

namespace detail {

// Clamp lambda away from zero and renormalize, so logs stay finite.
// Requires 0 < floor < 1/K so clamping cannot invert the ordering.
inline std::vector<double> clamp_weights(const std::vector<double>& lam, double floor) {
    if (!(floor > 0.0) || floor >= 1.0 / static_cast<double>(lam.size()))
        throw std::invalid_argument("clamp_floor must lie in (0, 1/K)");
    std::vector<double> out(lam.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < lam.size(); ++i) {
        out[i] = std::max(lam[i], floor);
        sum += out[i];
    }
    for (auto& x : out) x /= sum;
    return out;
}

}  // namespace detail

// KL(lambda || p) with lambda clamped to clamp_floor and renormalized. p must be
// strictly positive. Returns a finite, nonnegative value.
inline double kl_divergence(const LambdaWeights& lam, const std::vector<double>& p,
                            double clamp_floor = 1e-12) {
    if (lam.size() != p.size()) throw std::invalid_argument("kl_divergence: size mismatch");
    if (lam.empty()) throw std::invalid_argument("kl_divergence: empty input");
    for (double x : p)
        if (x <= 0.0) throw std::invalid_argument("kl_divergence: prior must be strictly positive");
    const auto l = detail::clamp_weights(lam, clamp_floor);
    double kl = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) kl += l[i] * std::log(l[i] / p[i]);
    return std::max(kl, 0.0);
}

// Gradient of F(lambda) = sum_k lambda_k f_k - q * KL(lambda || p) in lambda:
// g_k = f_k - q * (ln(lambda_k / p_k) + 1), with lambda clamped as in kl_divergence.
inline std::vector<double> lambda_gradient(const std::vector<double>& losses,
                                           const LambdaWeights& lam,
                                           const std::vector<double>& p, double q,
                                           double clamp_floor = 1e-12) {
    if (losses.size() != lam.size() || lam.size() != p.size())
        throw std::invalid_argument("lambda_gradient: size mismatch");
    if (lam.empty()) throw std::invalid_argument("lambda_gradient: empty input");
    for (double x : p)
        if (x <= 0.0) throw std::invalid_argument("lambda_gradient: prior must be strictly positive");
    const auto l = detail::clamp_weights(lam, clamp_floor);
    std::vector<double> g(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i)
        g[i] = losses[i] - q * (std::log(l[i] / p[i]) + 1.0);
    return g;
}

// One projected dual ascent step: P_simplex(lambda + eta_lambda * grad).
inline LambdaWeights update_lambda(const LambdaWeights& lam, const std::vector<double>& losses,
                                   const std::vector<double>& p, const DualConfig& cfg) {
    const auto g = lambda_gradient(losses, lam, p, cfg.q, cfg.clamp_floor);
    std::vector<double> step(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) step[i] = lam[i] + cfg.eta_lambda * g[i];
    return project_simplex(step);
}

// Sequential weighted sampling of m distinct clients, proportional to lambda.
// Once every positive-mass client is taken, the remainder is drawn uniformly from
// the zero-mass ones. Returns ids in draw order.
inline std::vector<std::size_t> sample_clients(const LambdaWeights& lam, std::size_t m,
                                               std::uint64_t seed) {
    const std::size_t k = lam.size();
    if (m == 0) throw std::invalid_argument("sample_clients: m must be >= 1");
    if (m > k) throw std::invalid_argument("sample_clients: m exceeds client count");
    for (double x : lam)
        if (!(x >= 0.0)) throw std::invalid_argument("sample_clients: negative or NaN weight");

    Rng rng(seed);
    std::vector<std::size_t> remaining(k);
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<std::size_t> picked;
    picked.reserve(m);
    while (picked.size() < m) {
        double total = 0.0;
        for (std::size_t id : remaining) total += lam[id];
        std::size_t slot = remaining.size();
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (std::size_t s = 0; s < remaining.size(); ++s) {
                u -= lam[remaining[s]];
                if (u <= 0.0 && lam[remaining[s]] > 0.0) {
                    slot = s;
                    break;
                }
            }
            if (slot == remaining.size()) {  // fp tail: take the last positive-mass client
                for (std::size_t s = remaining.size(); s-- > 0;)
                    if (lam[remaining[s]] > 0.0) {
                        slot = s;
                        break;
                    }
            }
        } else {
            slot = rng.uniform_index(remaining.size());
        }
        picked.push_back(remaining[slot]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(slot));
    }
    return picked;
}

}  // namespace tfl
