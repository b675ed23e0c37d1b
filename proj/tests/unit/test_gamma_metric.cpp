#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include <holderlab/gamma_metric.hpp>
#include <holderlab/metric_suite.hpp>

using namespace holderlab;

TEST(GammaMetric, RejectsZeroGamma) {
    EXPECT_THROW(GammaMetric(0.0), InputError);
    EXPECT_THROW(GammaMetric(std::nan("")), InputError);
}

TEST(GammaMetric, IdentityCase) {
    const GammaMetric m(1.0);
    EXPECT_EQ(m.dist(Point2{0.3, -0.7}, Point2{0.3, -0.7}), 0.0);
}

TEST(GammaMetric, ClosedFormExample) {
    const GammaMetric m(2.0);
    EXPECT_DOUBLE_EQ(m.dist(Point2{1.0, 0.0}, Point2{0.0, 0.0}), 3.0);
    // brute-force directional supremum agrees
    EXPECT_NEAR(directional_sup(2.0, {1.0, 0.0}, {0.0, 0.0}, 100'000, 0.123), 3.0, 3e-9);
}

TEST(GammaMetric, NegativeGammaUsesAbsoluteValue) {
    EXPECT_DOUBLE_EQ(GammaMetric(-2.0).dist(Point2{1.0, 0.0}, Point2{0.0, 0.0}), 3.0);
}

TEST(GammaMetric, RuntimeDimensionMismatch) {
    const GammaMetric m(1.0);
    const std::vector<double> a{1.0, 2.0}, b{1.0, 2.0, 3.0};
    EXPECT_THROW(m.dist(std::span<const double>(a), std::span<const double>(b)), InputError);
    const std::vector<double> c{0.0, 0.0};
    EXPECT_DOUBLE_EQ(m.dist(std::span<const double>(a), std::span<const double>(c)), std::sqrt(5.0) + 5.0);
}

TEST(GammaMetric, ThreeDimensionalPoints) {
    const GammaMetric m(1.5);
    const Vec<3> a{1.0, 2.0, 2.0}, b{0.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(m.dist(a, b), 1.5 * 3.0 + 9.0);
}

TEST(Bounds, Examples) {
    const GammaMetric m(2.0);
    const auto same = m.bounds(Point2{0.4, 0.1}, Point2{0.4, 0.1});
    EXPECT_EQ(same.lower, 0.0);
    EXPECT_EQ(same.upper, 0.0);
    const auto b = m.bounds(Point2{1.0, 0.0}, Point2{0.0, 0.0});
    EXPECT_DOUBLE_EQ(b.lower, 2.0);
    EXPECT_DOUBLE_EQ(b.upper, 3.0);
    EXPECT_DOUBLE_EQ(m.dist(Point2{1.0, 0.0}, Point2{0.0, 0.0}), b.upper);  // attained
}

TEST(Comparability, Examples) {
    const auto k = GammaMetric(2.0).euclidean_comparability(1.0);
    EXPECT_DOUBLE_EQ(k.kappa1, 0.25);
    EXPECT_DOUBLE_EQ(k.kappa2, 0.5);
    const auto small = GammaMetric(1.0).euclidean_comparability(1e-12);
    EXPECT_NEAR(small.kappa1, 1.0, 1e-11);
    EXPECT_DOUBLE_EQ(small.kappa2, 1.0);
    EXPECT_THROW(GammaMetric(1.0).euclidean_comparability(0.0), InputError);
}

TEST(Comparability, SandwichOnRandomPairs) {
    for (auto [gamma, R] : {std::pair{2.0, 1.0}, std::pair{3.0, 2.0}}) {
        const GammaMetric m(gamma);
        const auto k = m.euclidean_comparability(R);
        Rng rng(11);
        for (int t = 0; t < 10'000; ++t) {
            const Point2 x = uniform_in_disc(rng, R), y = uniform_in_disc(rng, R);
            const double d = m(x, y), e = euclidean(x, y);
            ASSERT_LE(k.kappa1 * d, e * (1.0 + 1e-14));
            ASSERT_LE(e, k.kappa2 * d * (1.0 + 1e-14));
        }
    }
}

TEST(Diam, SmallClouds) {
    const GammaMetric m(1.0);
    EXPECT_EQ(diam(m, PointCloud<2>{{0.5, 0.5}}).value, 0.0);
    EXPECT_DOUBLE_EQ(diam(m, PointCloud<2>{{1.0, 0.0}, {0.0, 0.0}}).value, 2.0);
    const auto d = diam(m, PointCloud<2>{{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}});
    EXPECT_DOUBLE_EQ(d.value, 6.0);
    EXPECT_FALSE(d.subsampled);
    EXPECT_THROW(diam(m, PointCloud<2>{}), InputError);
}

TEST(Diam, PermutationAndInclusion) {
    const GammaMetric m(2.5);
    Rng rng(5);
    PointCloud<2> cloud;
    for (int i = 0; i < 300; ++i) cloud.push_back(uniform_in_disc(rng, 2.0));
    const double full = diam(m, cloud).value;
    PointCloud<2> rev(cloud.rbegin(), cloud.rend());
    EXPECT_EQ(diam(m, rev).value, full);
    const PointCloud<2> half(cloud.begin(), cloud.begin() + 150);
    EXPECT_LE(diam(m, half).value, full);
}

TEST(Diam, LargeCloudIsFlaggedAndAccurate) {
    const GammaMetric m(1.0);
    PointCloud<2> cloud;
    for (int i = 0; i < 80; ++i)
        for (int j = 0; j < 80; ++j) cloud.push_back({-1.0 + 2.0 * i / 79.0, -1.0 + 2.0 * j / 79.0});
    const auto d = diam(m, cloud);
    EXPECT_TRUE(d.subsampled);
    double exact = 0.0;
    for (std::size_t a = 0; a < cloud.size(); ++a)
        for (std::size_t b = a + 1; b < cloud.size(); ++b) exact = std::max(exact, m(cloud[a], cloud[b]));
    EXPECT_LE(d.value, exact);
    EXPECT_GE(d.value, exact * (1.0 - 1e-3));
}

TEST(GreedyCover, Examples) {
    const GammaMetric m(2.0);
    EXPECT_EQ(greedy_cover(m, PointCloud<2>{{0.3, 0.3}}, 0.1).size(), 1u);
    const PointCloud<2> pair{{1.0, 0.0}, {0.0, 0.0}};
    EXPECT_EQ(greedy_cover(m, pair, 1.0).size(), 2u);
    EXPECT_EQ(greedy_cover(m, pair, 4.0).size(), 1u);
    EXPECT_THROW(greedy_cover(m, pair, 0.0), InputError);
}

TEST(GreedyCover, CoversAndIsSeparated) {
    Rng rng(9);
    for (double gamma : {0.5, -2.0, 8.0}) {
        const GammaMetric m(gamma);
        PointCloud<2> cloud;
        for (int i = 0; i < 400; ++i) cloud.push_back(uniform_in_disc(rng, 3.0));
        for (double r : {0.5, 2.0, 7.0}) {
            const auto cover = greedy_cover(m, cloud, r);
            for (std::size_t i = 0; i < cloud.size(); ++i)
                ASSERT_LT(m(cloud[i], cover.centers[cover.assignment[i]]), r);
            for (std::size_t a = 0; a < cover.size(); ++a)
                for (std::size_t b = a + 1; b < cover.size(); ++b) ASSERT_GE(m(cover.centers[a], cover.centers[b]), r);
            EXPECT_LE(cover.size(), packing_number(m, cloud, r));
        }
    }
}

TEST(Packing, Examples) {
    const GammaMetric m(2.0);
    EXPECT_EQ(packing_number(m, PointCloud<2>{{0.0, 0.0}}, 1.0), 1u);
    const PointCloud<2> pair{{1.0, 0.0}, {0.0, 0.0}};
    EXPECT_EQ(packing_number(m, pair, 4.0), 1u);
    EXPECT_EQ(packing_number(m, pair, 2.0), 2u);
}

TEST(CloudCsv, RoundTrip) {
    const PointCloud<2> cloud{{0.1, -0.2}, {1.0 / 3.0, 2e-17}};
    std::stringstream ss;
    write_cloud_csv<2>(ss, cloud);
    EXPECT_EQ(ss.str().substr(0, 6), "x1,x2\n");
    EXPECT_EQ(read_cloud_csv<2>(ss), cloud);
    std::stringstream bad("x1,x2\n1,2,3\n");
    EXPECT_THROW(read_cloud_csv<2>(bad), InputError);
}

TEST(MetricSuite, SmallRunPasses) {
    MetricSuiteOptions o;
    o.triples = 5'000;
    o.pairs = 1'000;
    o.oracle_pairs = 50;
    o.directions = 20'000;
    const auto res = run_metric_suite(o);
    EXPECT_TRUE(res.ok());
    for (const auto& c : res.checks) EXPECT_GT(c.passed, 0u) << c.name;
}
