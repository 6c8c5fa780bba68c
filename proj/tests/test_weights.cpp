#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "recur/weights.hpp"

using namespace recur;

TEST(EstimateWeight, TwoPoints) {
    const std::vector<double> d{1.0, 3.0};
    const auto w = estimate_weight(d);
    EXPECT_DOUBLE_EQ(w.mu, 2.0);
    EXPECT_DOUBLE_EQ(w.sigma, 1.0);
}

TEST(EstimateWeight, ThreePairExample) {
    const std::vector<double> d{1.0, 3.0, 2.0};
    const auto w = estimate_weight(d);
    EXPECT_DOUBLE_EQ(w.mu, 2.0);
    EXPECT_NEAR(w.sigma, std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(EstimateWeight, ConstantIsDegenerate) {
    const std::vector<double> d{0.7, 0.7, 0.7, 0.7};
    EXPECT_THROW(estimate_weight(d), DegenerateWeight);
    const std::vector<double> one{2.0};
    EXPECT_THROW(estimate_weight(one), DegenerateWeight);
    EXPECT_THROW(estimate_weight(std::vector<double>{}), InvalidInput);
}

TEST(EstimateWeight, DuplicatedMultisetIsIdentical) {
    std::mt19937_64 gen(5);
    std::exponential_distribution<double> expo;
    std::vector<double> d(40);
    for (auto& v : d) v = expo(gen);
    std::vector<double> dd = d;
    dd.insert(dd.end(), d.begin(), d.end());
    const auto a = estimate_weight(d);
    const auto b = estimate_weight(dd);
    EXPECT_NEAR(a.mu, b.mu, 1e-15 * a.mu);
    EXPECT_NEAR(a.sigma, b.sigma, 1e-14 * a.sigma);
    const auto o = oracle::moment_weight(d);
    EXPECT_NEAR(a.mu, o.mu, 1e-14);
    EXPECT_NEAR(a.sigma, o.sigma, 1e-14);
}

TEST(WeightCdf, KnownValues) {
    const GaussianWeight w{2.0, 1.0};
    EXPECT_DOUBLE_EQ(weight_cdf(w, 2.0), 0.5);
    EXPECT_NEAR(weight_cdf(w, 3.0), 0.8413447460685429, 1e-15);
    EXPECT_NEAR(weight_cdf(w, 0.0), 0.022750131948179195, 1e-16);
    EXPECT_EQ(weight_cdf(w, std::numeric_limits<double>::infinity()), 1.0);
    EXPECT_EQ(weight_cdf(w, -std::numeric_limits<double>::infinity()), 0.0);
    EXPECT_NEAR(weight_cdf(w, 1e6), 1.0, 1e-16);
}

TEST(WeightCdf, SurvivalComplementsCdf) {
    const GaussianWeight w{0.3, 2.5};
    for (double z = -20.0; z <= 20.0; z += 0.37) EXPECT_NEAR(w.cdf(z) + w.survival(z), 1.0, 1e-15);
}

TEST(WeightCdf, Monotone) {
    const GaussianWeight w{1.0, 0.4};
    double prev = 0.0;
    for (double z = -5.0; z <= 7.0; z += 1e-3) {
        const double g = weight_cdf(w, z);
        EXPECT_GE(g, prev);
        prev = g;
    }
}

TEST(WeightCdf, DensityIntegratesToOne) {
    const GaussianWeight w{4.0, 0.5};
    double sum = 0.0;
    const double h = 1e-3;
    for (double z = 0.0; z < 8.0; z += h) sum += w.density(z + 0.5 * h) * h;
    EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(WeightCdf, ScaleEquivariance) {
    std::mt19937_64 gen(6);
    std::gamma_distribution<double> gamma(2.0, 1.0);
    std::vector<double> d(30);
    for (auto& v : d) v = gamma(gen);
    const auto w = estimate_weight(d);
    for (double c : {0.01, 3.0, 100.0}) {
        std::vector<double> dc = d;
        for (auto& v : dc) v *= c;
        const auto wc = estimate_weight(dc);
        EXPECT_NEAR(wc.mu, c * w.mu, 1e-13 * c * w.mu);
        EXPECT_NEAR(wc.sigma, c * w.sigma, 1e-13 * c * w.sigma);
        for (double z : d) EXPECT_NEAR(weight_cdf(wc, c * z), weight_cdf(w, z), 1e-12);
    }
}
