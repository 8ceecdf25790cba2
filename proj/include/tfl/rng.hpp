#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace tfl {

// SplitMix64 finalizer; used to mix seed material into well-spread streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from (base, a, b), e.g. (run_seed, client, round).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ (a + 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ (b + 0xd1b54a32d192ed03ULL));
    return h;
}

// Stream salts so co-located draws (sampling vs. training vs. clustering) never alias.
inline constexpr std::uint64_t kInitSalt = 0x494e4954ULL;     // model init
inline constexpr std::uint64_t kSampleSalt = 0x53414d50ULL;   // client sampling
inline constexpr std::uint64_t kClusterSalt = 0x434c5553ULL;  // kmeans
inline constexpr std::uint64_t kDataSalt = 0x44415441ULL;     // synthetic data

// Deterministic RNG: mt19937_64 (sequence pinned by the standard) plus hand-rolled
// distributions, so results do not depend on the stdlib's distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased-enough index in [0, n) via 128-bit multiply (Lemire).
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller, second deviate cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted through Gamma(shape+1).
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Dirichlet(alpha) over k components.
    std::vector<double> dirichlet(double alpha, std::size_t k) {
        if (k == 0) throw std::invalid_argument("dirichlet: k must be positive");
        std::vector<double> w(k);
        double sum = 0.0;
        for (auto& v : w) {
            v = gamma(alpha);
            sum += v;
        }
        if (sum <= 0.0) {  // all gammas underflowed; fall back to uniform
            for (auto& v : w) v = 1.0 / static_cast<double>(k);
            return w;
        }
        for (auto& v : w) v /= sum;
        return w;
    }

    // Fisher-Yates using uniform_index, independent of std::shuffle's draw pattern.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tfl
