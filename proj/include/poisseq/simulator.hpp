#ifndef POISSEQ_SIMULATOR_HPP
#define POISSEQ_SIMULATOR_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "poisseq/core_data.hpp"
#include "poisseq/error.hpp"

/**
 * @file simulator.hpp
 *
 * @brief Negative binomial count data with class-specific feature ratios.
 *
 * X_ij | y_i = k ~ NB(mean s_i g_j d_kj, variance mu + mu^2 phi) with
 * s_i ~ Uniform(0.2, 2.2), g_j ~ Exponential(mean 25), and for
 * differentially expressed features log d_kj ~ Normal(0, sigma^2).
 *
 * Every random quantity is drawn from a generator seeded by
 * (seed, stream, index), so output depends only on the seed and is the same
 * however the work is split. Streams are stable within this implementation;
 * the standard library distributions are not bit-compatible across
 * toolchains.
 */

namespace poisseq {

struct SimulationConfig {
    std::size_t n = 12;
    std::size_t p = 10000;
    std::size_t K = 3;
    double phi = 0.0;
    double sigma = 0.05;
    double de_prob = 0.3;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(phi >= 0.0) || !std::isfinite(phi)) throw ValidationError("phi must be >= 0");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be > 0");
        if (!(de_prob >= 0.0 && de_prob <= 1.0)) throw ValidationError("de_prob must lie in [0, 1]");
        if (K < 1) throw ValidationError("K must be >= 1");
        if (n < K) throw ValidationError("n must be >= K");
        if (p < 1) throw ValidationError("p must be >= 1");
    }
};

struct SimulationTruth {
    std::vector<double> s;
    std::vector<double> g;
    /// K x p row-major.
    std::vector<double> d;
    std::vector<bool> de_mask;
};

struct SimulatedDataset {
    LabeledDataset data;
    SimulationTruth truth;
    SimulationConfig config;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { population = 1, size_factors = 2, counts = 3, test_set = 4 };

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream, std::uint64_t index) {
    const std::uint64_t key =
        splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
    return std::mt19937_64(key);
}

} // namespace detail

/// One NB(mu, phi) draw as a Gamma-Poisson mixture; phi = 0 is Poisson(mu).
template <typename Rng>
double sample_negative_binomial(Rng& rng, double mu, double phi) {
    double lambda = mu;
    if (phi > 0.0) {
        std::gamma_distribution<double> gamma(1.0 / phi, mu * phi);
        lambda = gamma(rng);
    }
    if (!(lambda > 0.0)) return 0.0;
    std::poisson_distribution<long long> poisson(lambda);
    return static_cast<double>(poisson(rng));
}

/// Draws feature rates g, class ratios d and the DE mask.
inline SimulationTruth simulate_population(const SimulationConfig& config) {
    config.validate();
    SimulationTruth truth;
    truth.g.resize(config.p);
    truth.d.assign(config.K * config.p, 1.0);
    truth.de_mask.assign(config.p, false);
    for (std::size_t j = 0; j < config.p; ++j) {
        auto rng = detail::make_stream(config.seed, detail::Stream::population, j);
        truth.g[j] = std::exponential_distribution<double>(1.0 / 25.0)(rng);
        truth.de_mask[j] = std::bernoulli_distribution(config.de_prob)(rng);
        if (truth.de_mask[j]) {
            std::normal_distribution<double> z(0.0, config.sigma);
            for (std::size_t k = 0; k < config.K; ++k) truth.d[k * config.p + j] = std::exp(z(rng));
        }
    }
    return truth;
}

/**
 * @brief Draws n fresh samples from a fixed population.
 *
 * Labels are assigned round-robin (sample i gets class i mod K); size factors
 * and counts come from streams keyed by `sample_seed`.
 */
inline SimulatedDataset draw_samples(const SimulationConfig& config, SimulationTruth population,
                                     std::uint64_t sample_seed, const std::string& id_prefix = "s") {
    const std::size_t n = config.n;
    const std::size_t p = config.p;
    population.s.resize(n);
    auto size_rng = detail::make_stream(sample_seed, detail::Stream::size_factors, 0);
    std::uniform_real_distribution<double> uniform(0.2, 2.2);
    for (auto& s : population.s) s = uniform(size_rng);

    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % config.K;

    std::vector<double> values(n * p);
    for (std::size_t j = 0; j < p; ++j) {
        auto rng = detail::make_stream(sample_seed, detail::Stream::counts, j);
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = population.s[i] * population.g[j] * population.d[labels[i] * p + j];
            values[i * p + j] = sample_negative_binomial(rng, mu, config.phi);
        }
    }

    CountMatrix matrix(n, p, std::move(values), CountMatrix::default_ids(id_prefix, n),
                       CountMatrix::default_ids("f", p));
    LabeledDataset data(std::move(matrix), std::move(labels),
                        CountMatrix::default_ids("class", config.K));
    return SimulatedDataset{std::move(data), std::move(population), config};
}

inline SimulatedDataset simulate(const SimulationConfig& config) {
    return draw_samples(config, simulate_population(config), config.seed);
}

/**
 * @brief Independent test set from the same population as `train`.
 *
 * g, d and the DE mask are shared; size factors and counts are redrawn.
 */
inline SimulatedDataset simulate_test_set(const SimulatedDataset& train, std::uint64_t seed) {
    auto population = train.truth;
    population.s.clear();
    const std::uint64_t sample_seed = detail::splitmix64(
        seed ^ static_cast<std::uint64_t>(detail::Stream::test_set) * 0x2545f4914f6cdd1dULL);
    return draw_samples(train.config, std::move(population), sample_seed, "t");
}

/// simulate(config) plus a test set of the same size.
inline std::pair<SimulatedDataset, SimulatedDataset> split_train_test(const SimulationConfig& config) {
    auto train = simulate(config);
    auto test = simulate_test_set(train, config.seed);
    return {std::move(train), std::move(test)};
}

} // namespace poisseq

#endif
