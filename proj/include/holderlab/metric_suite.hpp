#pragma once

// Randomised property checks of dist_gamma: metric axioms, the two-sided
// Euclidean bounds, and the closed form against a brute-force maximum over
// sampled unit directions.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "gamma_metric.hpp"
#include "sampling.hpp"

namespace holderlab {

struct MetricSuiteOptions {
    std::vector<double> gammas{0.5, -0.5, 2.0, -2.0, 8.0};
    double radius = 5.0;
    std::size_t triples = 100'000;
    std::size_t pairs = 10'000;
    std::size_t oracle_pairs = 1'000;
    std::size_t directions = 100'000;
    double oracle_rel_tol = 1e-4;
    std::uint64_t seed = 2024;
};

struct MetricCheck {
    std::string name;
    std::size_t passed = 0;
    std::size_t failed = 0;
    double worst = 0.0;  // largest relative defect seen
};

struct MetricSuiteResult {
    std::vector<MetricCheck> checks;
    bool ok() const {
        for (const auto& c : checks)
            if (c.failed) return false;
        return true;
    }
};

inline Point2 uniform_in_disc(Rng& rng, double R) {
    const double r = R * std::sqrt(rng.uniform()), th = 2.0 * std::numbers::pi * rng.uniform();
    return {r * std::cos(th), r * std::sin(th)};
}

/// sup over `count` equally spaced unit directions (random phase) of
/// |gamma (x1 - x2) . e + |x1|^2 - |x2|^2|.
inline double directional_sup(double gamma, const Point2& x1, const Point2& x2, std::size_t count, double phase) {
    const double ax = gamma * (x1[0] - x2[0]), ay = gamma * (x1[1] - x2[1]);
    const double b = norm_sq(x1) - norm_sq(x2);
    double best = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double th = phase + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
        best = std::max(best, std::abs(ax * std::cos(th) + ay * std::sin(th) + b));
    }
    return best;
}

inline MetricSuiteResult run_metric_suite(const MetricSuiteOptions& o = {}) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    Rng rng(o.seed);
    MetricCheck identity{"identity"}, symmetry{"symmetry"}, positivity{"positivity"}, triangle{"triangle"},
        sandwich{"bounds"}, oracle{"directional_oracle"};
    auto tally = [](MetricCheck& c, bool ok, double defect = 0.0) {
        (ok ? c.passed : c.failed) += 1;
        c.worst = std::max(c.worst, defect);
    };
    for (std::size_t t = 0; t < o.triples; ++t) {
        const GammaMetric m(o.gammas[t % o.gammas.size()]);
        const Point2 x = uniform_in_disc(rng, o.radius), y = uniform_in_disc(rng, o.radius), z = uniform_in_disc(rng, o.radius);
        tally(identity, m(x, x) == 0.0);
        tally(symmetry, m(x, y) == m(y, x));
        tally(positivity, x == y || m(x, y) > 0.0);
        const double lhs = m(x, z), rhs = m(x, y) + m(y, z);
        tally(triangle, lhs <= rhs * (1.0 + 8.0 * eps), rhs > 0.0 ? std::max(0.0, lhs / rhs - 1.0) : 0.0);
    }
    for (std::size_t t = 0; t < o.pairs; ++t) {
        const GammaMetric m(o.gammas[t % o.gammas.size()]);
        const Point2 x = uniform_in_disc(rng, o.radius), y = uniform_in_disc(rng, o.radius);
        const auto b = m.bounds(x, y);
        const double d = m(x, y);
        const double slack = 8.0 * eps * std::max(d, 1.0);
        tally(sandwich, b.lower <= d + slack && d <= b.upper + slack);
    }
    for (std::size_t t = 0; t < o.oracle_pairs; ++t) {
        const double gamma = o.gammas[t % o.gammas.size()];
        const GammaMetric m(gamma);
        const Point2 x = uniform_in_disc(rng, o.radius), y = uniform_in_disc(rng, o.radius);
        const double closed = m(x, y);
        const double sampled = directional_sup(gamma, x, y, o.directions, 2.0 * std::numbers::pi * rng.uniform());
        const double rel = closed > 0.0 ? (closed - sampled) / closed : 0.0;
        tally(oracle, sampled <= closed * (1.0 + 8.0 * eps) && rel <= o.oracle_rel_tol, std::abs(rel));
    }
    return {{identity, symmetry, positivity, triangle, sandwich, oracle}};
}

}  // namespace holderlab
