#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include <holderlab/covering.hpp>
#include <holderlab/field.hpp>

using namespace holderlab;

TEST(Grid2D, Validation) {
    EXPECT_THROW(Grid2D(2, 5), InputError);
    EXPECT_THROW(Grid2D(5, 5, Rect{1.0, 0.0, 0.0, 1.0}), InputError);
    const Grid2D g(5, 3, Rect{0.0, 2.0, -1.0, 1.0});
    EXPECT_DOUBLE_EQ(g.hx(), 0.5);
    EXPECT_DOUBLE_EQ(g.hy(), 1.0);
    EXPECT_EQ(g.node(4, 2), (Point2{2.0, 1.0}));
    EXPECT_EQ(g.index(g.ix(7), g.jy(7)), 7u);
}

TEST(Gradient, ConstantAndAffineAreExact) {
    const Grid2D g(9, 7, Rect{-1.0, 2.0, 0.0, 1.5});
    const auto c = gradient(ScalarField(g, 5.0));
    EXPECT_EQ(c.sup_norm(), 0.0);
    const auto a = gradient(ScalarField::sample(g, [](const Point2& x) { return 2.0 * x[0] + 3.0 * x[1]; }));
    for (std::size_t n = 0; n < g.size(); ++n) {
        EXPECT_NEAR(a.at(n)[0], 2.0, 1e-12);
        EXPECT_NEAR(a.at(n)[1], 3.0, 1e-12);
    }
}

TEST(Gradient, SecondOrderUnderRefinement) {
    constexpr double pi = std::numbers::pi;
    auto err = [&](std::size_t n) {
        const Grid2D g(n, n);
        const auto du = gradient(ScalarField::sample(g, [](const Point2& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); }));
        double e = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const Point2 x = g.node(k);
            e = std::max(e, std::abs(du.at(k)[0] - pi * std::cos(pi * x[0]) * std::sin(pi * x[1])));
            e = std::max(e, std::abs(du.at(k)[1] - pi * std::sin(pi * x[0]) * std::cos(pi * x[1])));
        }
        return e;
    };
    const double ratio = err(33) / err(65);
    EXPECT_GE(ratio, 3.5);
    EXPECT_LE(ratio, 4.5);
}

TEST(Gradient, Linear) {
    const Grid2D g(11, 13);
    const auto u = ScalarField::sample(g, [](const Point2& x) { return std::exp(x[0]) * x[1]; });
    const auto v = ScalarField::sample(g, [](const Point2& x) { return std::cos(3.0 * x[1]) + x[0] * x[0]; });
    ScalarField w(g);
    for (std::size_t n = 0; n < g.size(); ++n) w[n] = 2.5 * u[n] - 1.5 * v[n];
    const auto gu = gradient(u), gv = gradient(v), gw = gradient(w);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (std::size_t c = 0; c < 2; ++c)
            EXPECT_NEAR(gw.at(n)[c], 2.5 * gu.at(n)[c] - 1.5 * gv.at(n)[c], 1e-12 * (1.0 + std::abs(gw.at(n)[c])));
}

TEST(AnalyticHolderField, Values) {
    const Grid2D g(9, 9, Rect{-1.0, 1.0, -1.0, 1.0});
    const auto id = analytic_holder_field(1.0, g);
    for (std::size_t n = 0; n < g.size(); ++n) EXPECT_EQ(id.at(n), g.node(n));
    const Point2 p = holder_profile(0.5, {0.25, 0.0});
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.0);
    EXPECT_EQ(holder_profile(0.3, {0.0, 0.0}), (Point2{0.0, 0.0}));
    EXPECT_THROW(analytic_holder_field(0.0, g), InputError);
    EXPECT_THROW(analytic_holder_field(1.2, g), InputError);
    EXPECT_THROW(analytic_holder_field(0.5, Grid2D(5, 5, Rect{0.5, 1.0, 0.5, 1.0})), InputError);
}

TEST(AnalyticHolderField, QuotientBoundedOnlyAtTrueExponent) {
    auto semi = [](std::size_t n, double alpha) {
        const Grid2D g(n, n, Rect{-1.0, 1.0, -1.0, 1.0});
        const auto psi = analytic_holder_field(0.5, g);
        return holder_seminorm(psi, [](const Point2&) { return true; }, alpha, 50'000'000).value;
    };
    const double at_beta = semi(65, 0.5) / semi(33, 0.5);
    const double above = semi(65, 0.7) / semi(33, 0.7);
    EXPECT_LT(at_beta, 1.05);
    EXPECT_GT(above, 1.1);  // grows like h^-0.2
}

TEST(Restrict, Examples) {
    const Grid2D g(33, 33);
    const auto id = analytic_holder_field(1.0, Grid2D(33, 33, Rect{-1.0, 1.0, -1.0, 1.0}));
    EXPECT_EQ(restrict(id, {0.0, 0.0}, 0.4 * id.grid().h()).size(), 1u);
    const auto psi = VectorField::sample(g, [](const Point2& x) { return x; });
    const auto cloud = restrict(psi, {0.5, 0.5}, 0.3);
    for (const auto& p : cloud) EXPECT_LT(euclidean(p, Point2{0.5, 0.5}), 0.3);
    EXPECT_EQ(cloud.size(), ball_nodes(g, {0.5, 0.5}, 0.3).size());
    EXPECT_THROW(restrict(psi, {0.1, 0.5}, 0.3), InputError);
    EXPECT_THROW(restrict(psi, {0.5, 0.5}, 0.0), InputError);
}

TEST(Restrict, NodeCountAndMonotone) {
    const Grid2D g(129, 129);
    const auto psi = VectorField::sample(g, [](const Point2& x) { return x; });
    const double h = g.h();
    for (double R : {10 * h, 20 * h, 0.4}) {
        const double expected = std::numbers::pi * R * R / (h * h);
        EXPECT_NEAR(static_cast<double>(restrict(psi, {0.5, 0.5}, R).size()), expected, 0.2 * expected);
    }
    std::size_t prev = 0;
    for (double R = 0.01; R < 0.5; R += 0.01) {
        const std::size_t now = restrict(psi, {0.5, 0.5}, R).size();
        EXPECT_GE(now, prev);
        prev = now;
    }
}

TEST(FieldCsv, RoundTripWithHeader) {
    const Grid2D g(4, 3, Rect{0.0, 1.5, -1.0, 1.0});
    const auto f = ScalarField::sample(g, [](const Point2& x) { return x[0] / 3.0 - x[1]; });
    std::stringstream ss;
    ss << "# a comment line\n";
    write_field_csv(ss, f, "u");
    const std::string text = ss.str();
    EXPECT_NE(text.find("nx,4\nny,3\ndomain,0,1.5,-1,1\nfield,u\n"), std::string::npos);
    const NamedField back = read_field_csv(ss);
    EXPECT_EQ(back.name, "u");
    EXPECT_TRUE(back.field.grid() == g);
    for (std::size_t n = 0; n < g.size(); ++n) EXPECT_EQ(back.field[n], f[n]);
    std::stringstream bad("nx,4\nny,3\n");
    EXPECT_THROW(read_field_csv(bad), InputError);
}
