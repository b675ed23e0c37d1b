#pragma once

// Empirical weak Harnack constants. For a nonnegative w on B(y, R),
//
//     Khat = (tau R)^{-n} int_{B(y, 2 tau R)} w  /  (inf_{B(y, tau R)} w + tau R),
//
// and K is the largest Khat over sampled balls, axes and signs, with
// w = sup_{B(y,R)} v - v for v = +-gamma* psi^k + |psi|^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "field.hpp"
#include "parallel.hpp"
#include "sampling.hpp"
#include "subsolution.hpp"

namespace holderlab {

/// Midpoint rule over grid cells clipped to the closed disc B(c, rho). The
/// cell value is the mean of its corners; straddling cells use the area
/// fraction measured on a sub x sub lattice.
inline double disc_integral(const ScalarField& w, const Point2& c, double rho, int sub = 16) {
    const Grid2D& g = w.grid();
    const double hx = g.hx(), hy = g.hy();
    const Rect& d = g.domain();
    const auto clamp_cell = [](double v, std::size_t n) {
        return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 2)));
    };
    const std::size_t i0 = clamp_cell(std::floor((c[0] - rho - d.x_min) / hx), g.nx());
    const std::size_t i1 = clamp_cell(std::floor((c[0] + rho - d.x_min) / hx), g.nx());
    const std::size_t j0 = clamp_cell(std::floor((c[1] - rho - d.y_min) / hy), g.ny());
    const std::size_t j1 = clamp_cell(std::floor((c[1] + rho - d.y_min) / hy), g.ny());
    const double r2 = rho * rho;
    double total = 0.0;
    for (std::size_t j = j0; j <= j1; ++j)
        for (std::size_t i = i0; i <= i1; ++i) {
            const Point2 lo = g.node(i, j), hi = g.node(i + 1, j + 1);
            const double nx = std::clamp(c[0], lo[0], hi[0]) - c[0], ny = std::clamp(c[1], lo[1], hi[1]) - c[1];
            if (nx * nx + ny * ny >= r2) continue;
            const double fx = std::max(std::abs(lo[0] - c[0]), std::abs(hi[0] - c[0]));
            const double fy = std::max(std::abs(lo[1] - c[1]), std::abs(hi[1] - c[1]));
            const double cell_area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
            double area = cell_area;
            if (fx * fx + fy * fy > r2) {
                int inside = 0;
                for (int a = 0; a < sub; ++a)
                    for (int b = 0; b < sub; ++b) {
                        const double px = lo[0] + (a + 0.5) / sub * (hi[0] - lo[0]) - c[0];
                        const double py = lo[1] + (b + 0.5) / sub * (hi[1] - lo[1]) - c[1];
                        inside += px * px + py * py <= r2;
                    }
                area *= static_cast<double>(inside) / (sub * sub);
            }
            const double mid = 0.25 * (w(i, j) + w(i + 1, j) + w(i, j + 1) + w(i + 1, j + 1));
            total += mid * area;
        }
    return total;
}

struct KhatResult {
    double numerator = 0.0;  // (tau R)^{-n} int_{B(y, 2 tau R)} w
    double infimum = 0.0;    // min over nodes of B(y, tau R)
    double khat = 0.0;
    std::size_t inner_nodes = 0;
    bool few_nodes = false;  // B(y, tau R) holds a single node
};

inline constexpr double kNegativityTol = 1e-12;

inline KhatResult khat(const ScalarField& w, const Point2& y, double R, double tau) {
    if (!(R > 0.0)) throw InputError("khat: radius must be positive");
    if (!(tau > 0.0 && tau < 0.5)) throw InputError(fmt::format("khat: tau = {} not in (0, 1/2)", tau));
    if (!ball_inside(w.grid(), y, R)) throw InputError(fmt::format("khat: B(({}, {}), {}) leaves the domain", y[0], y[1], R));
    for (std::size_t n : ball_nodes(w.grid(), y, R))
        if (w[n] < -kNegativityTol)
            throw InputError(fmt::format("khat: w = {:.3e} < 0 at node {} inside the ball", w[n], n));

    const double tr = tau * R;
    const auto inner = ball_nodes(w.grid(), y, tr);
    if (inner.empty()) throw InputError(fmt::format("khat: B(y, tau R) with tau R = {} contains no grid node", tr));
    KhatResult out;
    out.inner_nodes = inner.size();
    out.few_nodes = inner.size() == 1;
    out.infimum = std::numeric_limits<double>::infinity();
    for (std::size_t n : inner) out.infimum = std::min(out.infimum, w[n]);
    out.numerator = disc_integral(w, y, 2.0 * tr) / (tr * tr);
    out.khat = out.numerator / (out.infimum + tr);
    return out;
}

struct HarnackSample {
    Point2 y;
    double R = 0.0;
    double tau = 0.0;
    std::size_t k = 0;
    int sign = 1;
    KhatResult result;
};

struct HarnackReport {
    std::vector<HarnackSample> samples;
    double K = 0.0;
};

/// For each ball, axis and sign: w = sup_{B(y,R)} v - v, record Khat.
inline HarnackReport estimate_K(const PsiPackage& pkg, std::span<const Ball> balls, double tau, std::size_t workers = 1) {
    const Grid2D& grid = pkg.psi.grid();
    std::array<ScalarField, 4> vs{v_field(pkg, 0, 1), v_field(pkg, 0, -1), v_field(pkg, 1, 1), v_field(pkg, 1, -1)};
    HarnackReport rep;
    rep.samples.resize(balls.size() * 4);
    parallel_for(balls.size(), workers, [&](std::size_t b) {
        const Ball& ball = balls[b];
        const auto nodes = ball_nodes(grid, ball.center, ball.R);
        if (nodes.empty()) throw InputError("estimate_K: ball without grid nodes");
        for (std::size_t c = 0; c < 4; ++c) {
            const ScalarField& v = vs[c];
            double V = -std::numeric_limits<double>::infinity();
            for (std::size_t n : nodes) V = std::max(V, v[n]);
            ScalarField w(grid);
            for (std::size_t n = 0; n < grid.size(); ++n) w[n] = V - v[n];
            rep.samples[4 * b + c] = {ball.center, ball.R, tau, c / 2, c % 2 == 0 ? 1 : -1, khat(w, ball.center, ball.R, tau)};
        }
    });
    for (const auto& s : rep.samples) rep.K = std::max(rep.K, s.result.khat);
    return rep;
}

inline void write_harnack_csv(std::ostream& os, const HarnackReport& rep) {
    os << "y1,y2,R,tau,k,sign,numerator,infimum,khat,inner_nodes,few_nodes\n";
    for (const auto& s : rep.samples)
        os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{},{},{:.17g},{:.17g},{:.17g},{},{}\n", s.y[0], s.y[1], s.R,
                          s.tau, s.k + 1, s.sign, s.result.numerator, s.result.infimum, s.result.khat,
                          s.result.inner_nodes, s.result.few_nodes ? 1 : 0);
}

}  // namespace holderlab
