#include <gtest/gtest.h>

#include <cmath>

#include "poisseq/power_transform.hpp"
#include "poisseq/simulator.hpp"

using namespace poisseq;

namespace {

CountMatrix simulated(double phi, double de_prob, std::uint64_t seed, std::size_t n = 12,
                      std::size_t p = 2000) {
    SimulationConfig c;
    c.n = n;
    c.p = p;
    c.phi = phi;
    c.de_prob = de_prob;
    c.seed = seed;
    return simulate(c).data.matrix();
}

} // namespace

TEST(GofStatistic, RankOneIsZero) {
    const auto m = CountMatrix::from_rows({{1, 2, 3}, {2, 4, 6}, {5, 10, 15}});
    EXPECT_NEAR(gof_statistic(m), 0.0, 1e-12);
}

TEST(GofStatistic, IdentityTwoByTwo) {
    EXPECT_DOUBLE_EQ(gof_statistic(CountMatrix::from_rows({{1, 0}, {0, 1}})), 2.0);
    const auto r = find_alpha(CountMatrix::from_rows({{1, 0}, {0, 1}}), 0.0);
    EXPECT_DOUBLE_EQ(r.target, 1.0);
}

TEST(GofStatistic, ZeroMarginsRejected) {
    EXPECT_THROW(gof_statistic(CountMatrix::from_rows({{1, 0}, {2, 0}})), ValidationError);
    EXPECT_THROW(gof_statistic(CountMatrix::from_rows({{0, 0}, {2, 1}})), ValidationError);
    EXPECT_THROW(find_alpha(CountMatrix::from_rows({{0, 0}, {2, 1}})), ValidationError);
}

TEST(GofStatistic, PoissonDataNearDegreesOfFreedom) {
    double ratio_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = simulated(0.0, 0.0, seed);
        const auto r = find_alpha(m);
        ratio_sum += r.statistic / r.target;
    }
    EXPECT_NEAR(ratio_sum / 10.0, 1.0, 0.02);
}

TEST(ApplyAlpha, Examples) {
    const auto m = CountMatrix::from_rows({{4, 9}, {0, 1}});
    EXPECT_EQ(apply_alpha(m, 1.0), m);
    const auto h = apply_alpha(m, 0.5);
    EXPECT_EQ(h.values()[0], 2.0);
    EXPECT_EQ(h.values()[1], 3.0);
    EXPECT_EQ(h.values()[2], 0.0);
    EXPECT_EQ(h.values()[3], 1.0);
    EXPECT_THROW(apply_alpha(m, 0.0), ValidationError);
    EXPECT_THROW(apply_alpha(m, 1.5), ValidationError);
}

TEST(FindAlpha, PoissonDataKeepsAlphaOne) {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto r = find_alpha(simulated(0.0, 0.0, seed));
        EXPECT_EQ(r.alpha, 1.0) << "seed " << seed;
        EXPECT_FALSE(r.overdispersed);
        EXPECT_TRUE(r.converged);
    }
}

TEST(FindAlpha, OverdispersedDataConverges) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto r = find_alpha(simulated(1.0, 0.3, seed));
        EXPECT_LT(r.alpha, 1.0);
        EXPECT_TRUE(r.overdispersed);
        ASSERT_TRUE(r.converged);
        EXPECT_LE(std::abs(r.statistic - r.target), 1e-3 * r.target);
        EXPECT_GE(r.alpha, kAlphaMin);
    }
}

TEST(FindAlpha, PreservesZerosAndShape) {
    const auto m = simulated(1.0, 0.3, 7, 8, 500);
    const auto r = find_alpha(m);
    ASSERT_EQ(r.matrix.num_samples(), m.num_samples());
    ASSERT_EQ(r.matrix.num_features(), m.num_features());
    for (std::size_t k = 0; k < m.values().size(); ++k) {
        EXPECT_EQ(m.values()[k] == 0.0, r.matrix.values()[k] == 0.0);
        EXPECT_EQ(r.matrix.values()[k], std::pow(m.values()[k], r.alpha));
    }
}

TEST(FindAlpha, Deterministic) {
    const auto m = simulated(0.5, 0.3, 3);
    const auto a = find_alpha(m);
    const auto b = find_alpha(m);
    EXPECT_EQ(a.alpha, b.alpha);
    EXPECT_EQ(a.statistic, b.statistic);
}

TEST(FindAlpha, NonincreasingInDispersion) {
    double previous = 1.0;
    for (const double phi : {0.01, 0.1, 1.0}) {
        const auto r = find_alpha(simulated(phi, 0.3, 11));
        EXPECT_LE(r.alpha, previous) << "phi " << phi;
        previous = r.alpha;
    }
}

TEST(FindAlpha, ZeroFeaturesExcluded) {
    auto rows = std::vector<std::vector<double>>{{4, 0, 7, 1}, {2, 0, 9, 3}, {6, 0, 2, 5}};
    const auto r = find_alpha(CountMatrix::from_rows(rows), 0.0);
    EXPECT_EQ(r.zero_features, 1u);
    EXPECT_DOUBLE_EQ(r.target, 4.0);
    EXPECT_EQ(r.matrix.num_features(), 4u);
}

TEST(FindAlpha, LiteralRuleWithZeroDeviate) {
    int searched = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = simulated(0.0, 0.0, seed);
        const auto kept = find_alpha(m);
        const auto strict = find_alpha(m, 0.0);
        if (kept.statistic > kept.target) {
            ++searched;
            EXPECT_LT(strict.alpha, 1.0);
            EXPECT_TRUE(strict.overdispersed);
        } else {
            EXPECT_EQ(strict.alpha, 1.0);
        }
    }
    EXPECT_GT(searched, 0);
}

TEST(PearsonNullSd, LargeMeansMatchChiSquared) {
    // Equal large cells: each contributes about 2, so sd is sqrt(2 df).
    std::vector<std::vector<double>> rows(4, std::vector<double>(50, 1e6));
    const auto m = CountMatrix::from_rows(rows);
    std::vector<std::size_t> columns(50);
    for (std::size_t j = 0; j < 50; ++j) columns[j] = j;
    EXPECT_NEAR(pearson_null_sd(m, columns), std::sqrt(2.0 * 3 * 49), 1e-4);
}

TEST(PearsonNullSd, CalibratedOnPoissonData) {
    // Standardized statistics on pure Poisson data have roughly unit spread.
    double sum = 0.0, sum_sq = 0.0;
    const int reps = 60;
    for (int r = 0; r < reps; ++r) {
        const auto m = simulated(0.0, 0.0, 100 + r, 12, 1000);
        const auto res = find_alpha(m);
        std::vector<std::size_t> columns;
        for (std::size_t j = 0; j < m.num_features(); ++j) {
            if (m.column_sums()[j] > 0.0) columns.push_back(j);
        }
        const double z = (res.statistic - res.target) / pearson_null_sd(m, columns);
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / reps;
    const double sd = std::sqrt(sum_sq / reps - mean * mean);
    EXPECT_NEAR(mean, 0.0, 0.5);
    EXPECT_GT(sd, 0.6);
    EXPECT_LT(sd, 1.4);
}
