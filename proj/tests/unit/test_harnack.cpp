#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <holderlab/harnack.hpp>
#include <holderlab/solver.hpp>

using namespace holderlab;

namespace {

double closed_form(double c, double tau, double R) { return 4.0 * std::numbers::pi * c / (c + tau * R); }

}  // namespace

TEST(DiscIntegral, AreaOfDisc) {
    const Grid2D g(129, 129);
    const ScalarField one(g, 1.0);
    EXPECT_NEAR(disc_integral(one, {0.5, 0.5}, 0.3), std::numbers::pi * 0.09, 2e-4);
    EXPECT_NEAR(disc_integral(one, {0.41, 0.52}, 0.2), std::numbers::pi * 0.04, 2e-4);
}

TEST(Khat, ConstantMatchesClosedForm) {
    const Grid2D g(129, 129);
    for (double c : {0.5, 3.0}) {
        const auto r = khat(ScalarField(g, c), {0.5, 0.5}, 0.3, 0.25);
        EXPECT_NEAR(r.khat / closed_form(c, 0.25, 0.3), 1.0, 0.02);
    }
}

TEST(Khat, ZeroFieldGivesZero) {
    const auto r = khat(ScalarField(Grid2D(33, 33), 0.0), {0.5, 0.5}, 0.2, 0.25);
    EXPECT_EQ(r.khat, 0.0);
    EXPECT_DOUBLE_EQ(r.infimum, 0.0);
}

TEST(Khat, FiniteAndMonotone) {
    const Grid2D g(65, 65);
    const auto w = ScalarField::sample(g, [](const Point2& x) { return (x[0] - 0.5) * (x[0] - 0.5) + x[1]; });
    const auto a = khat(w, {0.5, 0.5}, 0.3, 0.2);
    // raise w away from the inner ball: numerator grows, infimum unchanged
    ScalarField w2 = w;
    for (std::size_t n = 0; n < g.size(); ++n)
        if (euclidean(g.node(n), Point2{0.5, 0.5}) > 0.07) w2[n] += 1.0;
    const auto b = khat(w2, {0.5, 0.5}, 0.3, 0.2);
    EXPECT_TRUE(std::isfinite(a.khat));
    EXPECT_DOUBLE_EQ(a.infimum, b.infimum);
    EXPECT_GT(b.khat, a.khat);
}

TEST(Khat, Validation) {
    const ScalarField w(Grid2D(33, 33), 1.0);
    EXPECT_THROW(khat(w, {0.5, 0.5}, 0.2, 0.5), InputError);
    EXPECT_THROW(khat(w, {0.5, 0.5}, 0.2, 0.0), InputError);
    EXPECT_THROW(khat(w, {0.1, 0.5}, 0.2, 0.25), InputError);
    ScalarField neg = w;
    neg[neg.grid().index(16, 16)] = -1.0;
    EXPECT_THROW(khat(neg, {0.5, 0.5}, 0.2, 0.25), InputError);
    // tau R below the spacing around a node: a single node, flagged
    const auto r = khat(w, {0.5, 0.5}, 0.2, 0.05);
    EXPECT_TRUE(r.few_nodes);
    EXPECT_EQ(r.inner_nodes, 1u);
}

TEST(EstimateK, AffineSolutionGivesZero) {
    const Grid2D g(33, 33);
    // psi exactly constant
    const auto pkg = make_psi_package(VectorField(ScalarField(g, 0.3), ScalarField(g, -0.2)));
    const auto balls = sample_balls(g, {8, 3, 0.1, 0.2});
    const auto rep = estimate_K(pkg, balls, 0.25);
    EXPECT_EQ(rep.K, 0.0);
    EXPECT_EQ(rep.samples.size(), 32u);
}

TEST(EstimateK, ShiftInvariantAndDeterministic) {
    const Grid2D g(65, 65);
    const auto u = newton_solve(laplace_spec(), [](const Point2& x) { return std::log(std::hypot(x[0] + 0.1, x[1] + 0.1)); }, g).u;
    const auto pkg = build_psi(u);
    const auto balls = sample_balls(g, {10, 1, 0.1, 0.2});
    const auto a = estimate_K(pkg, balls, 0.25, 1);
    const auto b = estimate_K(pkg, balls, 0.25, 4);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t s = 0; s < a.samples.size(); ++s) EXPECT_EQ(a.samples[s].result.khat, b.samples[s].result.khat);
    for (const auto& s : a.samples) EXPECT_GE(s.result.infimum, -kNegativityTol);
    EXPECT_GT(a.K, 0.0);
    EXPECT_TRUE(std::isfinite(a.K));
}

TEST(EstimateK, StableUnderRefinementOnLaplace) {
    auto K = [](std::size_t n) {
        const Grid2D g(n, n);
        const auto u = newton_solve(laplace_spec(), [](const Point2& x) { return std::log(std::hypot(x[0] + 0.1, x[1] + 0.1)); }, g).u;
        return estimate_K(build_psi(u), sample_balls(g, {20, 1, 0.1, 0.2}), 0.25, 4).K;
    };
    const double k1 = K(65), k2 = K(129);
    EXPECT_NEAR(k2 / k1, 1.0, 0.25);
}
