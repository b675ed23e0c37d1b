#pragma once

// Seeded ball samplers. std::mt19937_64's output sequence is fixed by the
// standard; the distributions below are hand-rolled so samples are identical
// across standard libraries.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "field.hpp"

namespace holderlab {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform in [lo, hi].
    std::size_t index(std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(uniform() * static_cast<double>(hi - lo + 1));
    }

private:
    std::mt19937_64 engine_;
};

struct Ball {
    Point2 center;
    double R = 0.0;
};

struct BallSampler {
    std::size_t count = 20;
    std::uint64_t seed = 1;
    double r_min = 0.1;
    double r_max = 0.2;
};

/// Balls with radius uniform in [r_min, r_max], centred at a grid node chosen
/// uniformly among the nodes for which B(y, R) stays inside the domain.
inline std::vector<Ball> sample_balls(const Grid2D& grid, const BallSampler& s) {
    if (!(s.r_min > 0.0) || s.r_max < s.r_min) throw InputError("ball sampler: need 0 < r_min <= r_max");
    Rng rng(s.seed);
    const Rect& d = grid.domain();
    std::vector<Ball> out;
    out.reserve(s.count);
    for (std::size_t b = 0; b < s.count; ++b) {
        const double R = rng.uniform(s.r_min, s.r_max);
        const auto first = [&](double lo, double h) { return static_cast<std::size_t>(std::ceil(lo / h - 1e-9)); };
        const auto last = [&](double hi, double h) { return static_cast<std::size_t>(std::floor(hi / h + 1e-9)); };
        const std::size_t i0 = first(R, grid.hx()), i1 = last(d.x_max - d.x_min - R, grid.hx());
        const std::size_t j0 = first(R, grid.hy()), j1 = last(d.y_max - d.y_min - R, grid.hy());
        if (R > 0.5 * (d.x_max - d.x_min) || R > 0.5 * (d.y_max - d.y_min) || i0 > i1 || j0 > j1)
            throw InputError(fmt::format("ball sampler: radius {} does not fit in the domain", R));
        const std::size_t i = rng.index(i0, i1), j = rng.index(j0, j1);
        out.push_back({grid.node(i, j), R});
    }
    return out;
}

}  // namespace holderlab
