#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <holderlab/config.hpp>
#include <holderlab/solver.hpp>

using namespace holderlab;

TEST(Expression, PrecedenceAndAssociativity) {
    const Point2 x{2.0, 3.0};
    EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*3")(x), 7.0);
    EXPECT_DOUBLE_EQ(Expression::parse("(1 + 2)*3")(x), 9.0);
    EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(x), 512.0);
    EXPECT_DOUBLE_EQ(Expression::parse("-x1^2")(x), -4.0);
    EXPECT_DOUBLE_EQ(Expression::parse("8/2/2")(x), 2.0);
    EXPECT_DOUBLE_EQ(Expression::parse("x - y")(x), -1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("1e-1*x2")(x), 0.30000000000000004);
}

TEST(Expression, FunctionsAndVariables) {
    EXPECT_NEAR(Expression::parse("sin(pi/2) + cos(0) + exp(log(3)) + sqrt(16) + abs(-2) + tan(0)")(Point2{0, 0}), 11.0, 1e-14);
    const auto e = Expression::parse("z + p1*p2");
    EXPECT_TRUE(e.uses_solution());
    EXPECT_FALSE(Expression::parse("x1*x2").uses_solution());
    EXPECT_DOUBLE_EQ(e(Point2{0, 0}, 1.0, {2.0, 3.0}), 7.0);
    EXPECT_DOUBLE_EQ(e(ExprVars{0, 0, 1.0, 2.0, 3.0}), 7.0);
}

TEST(Expression, Errors) {
    for (const char* bad : {"", "1 +", "(1", "foo(1)", "x3", "1 2", "sin 1", "2 ** 3"})
        EXPECT_THROW(Expression::parse(bad), InputError) << bad;
}

TEST(Config, DefaultsAndValues) {
    const auto c = config_from_string(
        "# comment\n[equation]\nspec = minimal_surface\nboundary = 0.2*(x1+x2)\n"
        "[grid]\nnx = 33   # inline comment\nny = 17\ndomain = -1, 1, 0, 2\n"
        "[experiment]\ndecay_center = 0, 1\ndecay_d = 0.5\nd_values = 0.1, 0.2\n");
    EXPECT_EQ(c.equation.spec, "minimal_surface");
    EXPECT_EQ(c.nx, 33u);
    EXPECT_EQ(c.ny, 17u);
    EXPECT_DOUBLE_EQ(c.domain.x_min, -1.0);
    EXPECT_DOUBLE_EQ(c.domain.y_max, 2.0);
    EXPECT_EQ(c.experiment.d_values, (std::vector<double>{0.1, 0.2}));
    EXPECT_DOUBLE_EQ(c.experiment.tau, 0.25);
    EXPECT_FALSE(c.experiment.delta0.has_value());
    EXPECT_EQ(c.output_dir, "runs");
    EXPECT_DOUBLE_EQ(build_boundary(c.equation)({1.0, 2.0}), 0.6);
}

TEST(Config, Rejections) {
    for (const char* bad : {
             "[grid]\nnx = 2\n",
             "[grid]\nsize = 3\n",
             "[gird]\nnx = 9\n",
             "nx = 9\n",
             "[grid]\nnx = 9\nnx = 11\n",
             "[grid]\nnx = nine\n",
             "[grid]\nnx\n",
             "[equation]\nspec = navier_stokes\n",
             "[equation]\na11 = 2\n",
             "[equation]\nboundary = z + 1\n",
             "[equation]\nspec = custom\na11 = 1 +\n",
             "[psi]\nsource = random\n",
             "[psi]\nbeta = 1.5\n",
             "[solver]\nresidual_tol = -1\n",
             "[solver]\ndamping = 1\n",
             "[balls]\nr_min = 0.3\nr_max = 0.1\n",
             "[experiment]\ntau = 0.5\n",
             "[experiment]\ndelta0 = 0.5\n",
             "[experiment]\ndecay_center = 0.1, 0.1\n",
             "[experiment]\nd_values = 0.1, -0.2\n",
         })
        EXPECT_THROW(config_from_string(bad), InputError) << bad;
}

TEST(Config, HashIsCanonical) {
    const auto a = config_from_string("[grid]\nnx = 17\nny = 17\n[balls]\nseed = 4\n");
    const auto b = config_from_string("[balls]\nseed=4\n\n[grid]\nny = 17\n# x\nnx = 17\n");
    const auto c = config_from_string("[grid]\nnx = 17\nny = 17\n[balls]\nseed = 5\n");
    EXPECT_EQ(config_hash(a.canonical), config_hash(b.canonical));
    EXPECT_NE(config_hash(a.canonical), config_hash(c.canonical));
    EXPECT_EQ(config_hash(a.canonical).size(), 16u);
    EXPECT_EQ(config_hash(""), "cbf29ce484222325");
}

TEST(Config, CustomEquationMatchesRegistered) {
    const auto c = config_from_string("[equation]\nspec = custom\na11 = 1\na12 = 0\na22 = 1\nb = 0\nboundary = x1^2 - x2^2\n[grid]\nnx = 17\nny = 17\n");
    const auto spec = build_equation(c.equation);
    EXPECT_EQ(spec.name, "custom");
    const auto sol = newton_solve(spec, build_boundary(c.equation), Grid2D(c.nx, c.ny, c.domain), c.solver);
    for (std::size_t n = 0; n < sol.u.grid().size(); ++n) {
        const Point2 x = sol.u.grid().node(n);
        EXPECT_NEAR(sol.u[n], x[0] * x[0] - x[1] * x[1], 1e-10);
    }
}

TEST(Config, ShippedConfigsLoad) {
    for (const char* name : {"laplace_affine", "laplace_log", "minimal_surface", "mms_quasilinear", "custom", "holder_field"})
        EXPECT_NO_THROW(load_config(std::string(HOLDERLAB_CONFIGS) + "/" + name + ".ini")) << name;
    EXPECT_THROW(load_config("/nonexistent/x.ini"), InputError);
}
