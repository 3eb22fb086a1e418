#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "poisseq/simulator.hpp"

using namespace poisseq;

namespace {

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

Moments nb_moments(double mu, double phi, std::uint64_t seed, int draws) {
    std::mt19937_64 rng(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < draws; ++t) {
        const double x = sample_negative_binomial(rng, mu, phi);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / draws;
    return {mean, (sum_sq - draws * mean * mean) / (draws - 1)};
}

SimulationConfig small(double phi = 0.0, std::uint64_t seed = 1) {
    SimulationConfig c;
    c.n = 12;
    c.p = 3000;
    c.phi = phi;
    c.seed = seed;
    return c;
}

} // namespace

TEST(NegativeBinomial, PoissonMoments) {
    const int draws = 100000;
    const double mu = 7.5;
    const auto m = nb_moments(mu, 0.0, 1, draws);
    const double se_mean = std::sqrt(mu / draws);
    EXPECT_NEAR(m.mean, mu, 4 * se_mean);
    // Var of the sample variance for Poisson: (mu + 2 mu^2) / draws.
    EXPECT_NEAR(m.variance, mu, 4 * std::sqrt((mu + 2 * mu * mu) / draws));
}

TEST(NegativeBinomial, OverdispersedMoments) {
    const int draws = 100000;
    const double mu = 50.0, phi = 1.0;
    const auto m = nb_moments(mu, phi, 2, draws);
    const double var = mu + mu * mu * phi;
    EXPECT_DOUBLE_EQ(var, 2550.0);
    EXPECT_NEAR(m.mean, mu, 4 * std::sqrt(var / draws));
    // Heavy-tailed: allow 4 SE using a loose 5x kurtosis bound.
    EXPECT_NEAR(m.variance, var, 4 * std::sqrt(10.0 * var * var / draws));
}

TEST(NegativeBinomial, SmallDispersion) {
    const int draws = 100000;
    const double mu = 20.0, phi = 0.01;
    const auto m = nb_moments(mu, phi, 3, draws);
    const double var = mu + mu * mu * phi;
    EXPECT_NEAR(m.mean, mu, 4 * std::sqrt(var / draws));
    EXPECT_NEAR(m.variance, var, 4 * std::sqrt((var + 2 * var * var) / draws));
}

TEST(Simulate, ShapesAndLabels) {
    const auto sim = simulate(small());
    EXPECT_EQ(sim.data.matrix().num_samples(), 12u);
    EXPECT_EQ(sim.data.matrix().num_features(), 3000u);
    EXPECT_EQ(sim.data.num_classes(), 3u);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(sim.data.members(k).size(), 4u);
    EXPECT_EQ(sim.data.class_names()[0], "class1");
    EXPECT_EQ(sim.truth.s.size(), 12u);
    for (double s : sim.truth.s) {
        EXPECT_GE(s, 0.2);
        EXPECT_LT(s, 2.2);
    }
    for (double v : sim.data.matrix().values()) EXPECT_EQ(v, std::floor(v));
}

TEST(Simulate, Deterministic) {
    const auto a = simulate(small(0.1, 9));
    const auto b = simulate(small(0.1, 9));
    EXPECT_EQ(a.data.matrix(), b.data.matrix());
    EXPECT_EQ(a.truth.g, b.truth.g);
    const auto c = simulate(small(0.1, 10));
    EXPECT_NE(a.truth.g, c.truth.g);
    EXPECT_FALSE(a.data.matrix() == c.data.matrix());
}

TEST(Simulate, TestSetSharesPopulation) {
    const auto [train, test] = split_train_test(small(0.01, 4));
    EXPECT_EQ(train.truth.g, test.truth.g);
    EXPECT_EQ(train.truth.d, test.truth.d);
    EXPECT_EQ(train.truth.de_mask, test.truth.de_mask);
    EXPECT_NE(train.truth.s, test.truth.s);
    EXPECT_FALSE(train.data.matrix() == test.data.matrix());
    EXPECT_EQ(test.data.labels(), train.data.labels());
    EXPECT_EQ(test.data.matrix().sample_ids()[0], "t1");
}

TEST(Simulate, DeFractionAndNullFeatures) {
    auto c = small();
    c.p = 20000;
    const auto truth = simulate_population(c);
    std::size_t de = 0;
    for (std::size_t j = 0; j < c.p; ++j) {
        if (truth.de_mask[j]) {
            ++de;
        } else {
            for (std::size_t k = 0; k < c.K; ++k) EXPECT_EQ(truth.d[k * c.p + j], 1.0);
        }
    }
    const double expected = c.de_prob * c.p;
    EXPECT_NEAR(static_cast<double>(de), expected, 4 * std::sqrt(expected * (1 - c.de_prob)));
}

TEST(Simulate, GammaMeanOfFeatureRates) {
    auto c = small();
    c.p = 40000;
    const auto truth = simulate_population(c);
    double sum = 0.0;
    for (double g : truth.g) sum += g;
    EXPECT_NEAR(sum / c.p, 25.0, 4 * 25.0 / std::sqrt(static_cast<double>(c.p)));
}

TEST(Simulate, ClassMeansAgreeOnNullFeatures) {
    auto c = small(0.0, 5);
    c.n = 300;
    c.p = 400;
    const auto sim = simulate(c);
    const auto& m = sim.data.matrix();
    // Normalised class totals on null features should match across classes.
    std::vector<double> class_s(3, 0.0);
    for (std::size_t i = 0; i < c.n; ++i) class_s[sim.data.labels()[i]] += sim.truth.s[i];
    for (std::size_t j = 0; j < c.p; ++j) {
        if (sim.truth.de_mask[j] || sim.truth.g[j] < 5.0) continue;
        std::vector<double> totals(3, 0.0);
        for (std::size_t i = 0; i < c.n; ++i) totals[sim.data.labels()[i]] += m(i, j);
        for (std::size_t k = 0; k < 3; ++k) {
            const double mu = class_s[k] * sim.truth.g[j];
            EXPECT_NEAR(totals[k], mu, 5 * std::sqrt(mu));
        }
    }
}

TEST(SimulationConfigTest, Validation) {
    auto c = small();
    c.phi = -1;
    EXPECT_THROW(simulate(c), ValidationError);
    c = small();
    c.sigma = 0;
    EXPECT_THROW(simulate(c), ValidationError);
    c = small();
    c.n = 2;
    EXPECT_THROW(simulate(c), ValidationError);
    c = small();
    c.de_prob = 1.5;
    EXPECT_THROW(simulate(c), ValidationError);
    c = small();
    c.p = 0;
    EXPECT_THROW(simulate(c), ValidationError);
}
