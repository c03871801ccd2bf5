#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "ihope/forest.hpp"
#include "ihope/random.hpp"
#include "test_util.hpp"

using namespace ihope;

namespace {

struct Data {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
};

// y depends on feature `signal` only; the rest is uniform noise.
Data planted(std::size_t n, std::size_t p, std::size_t signal, std::uint64_t seed, bool regression) {
    Rng rng(seed);
    Data d;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(p);
        for (auto &v : x) v = uniform01(rng);
        d.y.push_back(regression ? 3.0 * x[signal] : (x[signal] > 0.5 ? 1.0 : 0.0));
        d.X.push_back(std::move(x));
    }
    return d;
}

ForestConfig small(ForestMode mode, std::uint64_t seed = 1) {
    ForestConfig c;
    c.n_trees = 60;
    c.mode = mode;
    c.seed = seed;
    return c;
}

double sum(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Forest, PlantedClassificationFeatureDominates) {
    const auto d = planted(500, 5, 2, 10, false);
    const auto m = fit_forest(d.X, d.y, small(ForestMode::Classification));
    EXPECT_FALSE(m.degenerate);
    EXPECT_NEAR(sum(m.importances), 1.0, 1e-12);
    EXPECT_GT(m.importances[2], 0.9);
    for (double v : m.importances) EXPECT_GE(v, 0.0);
}

TEST(Forest, PlantedRegressionFeatureDominates) {
    const auto d = planted(500, 5, 0, 11, true);
    const auto m = fit_forest(d.X, d.y, small(ForestMode::Regression));
    EXPECT_GT(m.importances[0], 0.9);
    EXPECT_EQ(m.n_classes, 0u);
    double err = 0;
    for (std::size_t i = 0; i < 50; ++i) err += std::abs(predict(m, d.X[i]) - d.y[i]);
    EXPECT_LT(err / 50, 0.15);
}

TEST(Forest, ConstantTargetIsDegenerateUniform) {
    auto d = planted(100, 4, 0, 12, true);
    std::fill(d.y.begin(), d.y.end(), 2.0);
    const auto m = fit_forest(d.X, d.y, small(ForestMode::Regression));
    EXPECT_TRUE(m.degenerate);
    for (double v : m.importances) EXPECT_DOUBLE_EQ(v, 0.25);
    EXPECT_DOUBLE_EQ(predict(m, d.X[0]), 2.0);
}

TEST(Forest, UnusedConstantFeatureGetsZero) {
    auto d = planted(300, 4, 1, 13, false);
    for (auto &x : d.X) x[3] = 0.7;
    const auto m = fit_forest(d.X, d.y, small(ForestMode::Classification));
    EXPECT_EQ(m.importances[3], 0.0);
}

TEST(Forest, NoiseTargetSpreadsImportance) {
    Rng rng(14);
    Data d;
    for (int i = 0; i < 400; ++i) {
        d.X.push_back({uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng)});
        d.y.push_back(static_cast<double>(uniform_index(rng, 2)));
    }
    const auto m = fit_forest(d.X, d.y, small(ForestMode::Classification));
    for (double v : m.importances) EXPECT_LT(v, 0.5);
}

TEST(Forest, DeterministicForSeedAndSensitiveToIt) {
    const auto d = planted(200, 6, 4, 15, false);
    const auto a = fit_forest(d.X, d.y, small(ForestMode::Classification, 5));
    const auto b = fit_forest(d.X, d.y, small(ForestMode::Classification, 5));
    const auto c = fit_forest(d.X, d.y, small(ForestMode::Classification, 6));
    EXPECT_EQ(a.training_digest, b.training_digest);
    EXPECT_EQ(a.importances, b.importances);
    EXPECT_EQ(forest_to_json_text(a), forest_to_json_text(b));
    EXPECT_NE(a.importances, c.importances);
}

TEST(Forest, JsonRoundTripPredictsIdentically) {
    const auto d = planted(200, 3, 1, 16, false);
    const auto m = fit_forest(d.X, d.y, small(ForestMode::Classification));
    const auto back = forest_from_json_text(forest_to_json_text(m));
    EXPECT_EQ(back.importances, m.importances);
    EXPECT_EQ(back.training_digest, m.training_digest);
    for (const auto &x : d.X) EXPECT_EQ(predict_class(back, x), predict_class(m, x));
}

TEST(Forest, RespectsMaxDepth) {
    const auto d = planted(300, 4, 0, 17, true);
    auto cfg = small(ForestMode::Regression);
    cfg.max_depth = 3;
    const auto m = fit_forest(d.X, d.y, cfg);
    for (const auto &t : m.trees) EXPECT_LE(t.depth(), 3u);
}

TEST(Forest, Errors) {
    const auto d = planted(20, 3, 0, 18, false);
    EXPECT_IHOPE_ERROR(fit_forest({}, {}, small(ForestMode::Classification)), ErrorCode::EmptyData);
    EXPECT_IHOPE_ERROR(fit_forest(d.X, std::span<const double>(d.y).first(5), small(ForestMode::Classification)),
                       ErrorCode::LengthMismatch);
    auto bad = small(ForestMode::Classification);
    bad.n_trees = 0;
    EXPECT_IHOPE_ERROR(fit_forest(d.X, d.y, bad), ErrorCode::InvalidConfig);
    const auto m = fit_forest(d.X, d.y, small(ForestMode::Classification));
    EXPECT_IHOPE_ERROR(predict(m, std::vector<double>{1.0}), ErrorCode::ArityMismatch);
}

TEST(FeaturesPerSplit, Resolve) {
    EXPECT_EQ(FeaturesPerSplit::sqrt().resolve(35), 6u);
    EXPECT_EQ(FeaturesPerSplit::sqrt().resolve(36), 6u);
    EXPECT_EQ(FeaturesPerSplit::sqrt().resolve(1), 1u);
    EXPECT_EQ(FeaturesPerSplit::all().resolve(7), 7u);
    EXPECT_EQ(FeaturesPerSplit::fixed(3).resolve(7), 3u);
}
