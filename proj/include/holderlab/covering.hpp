#pragma once

// Oscillation decay of psi measured in dist_{gamma*}:
//
//  * the constant pipeline c0, eps0, delta, delta0 and alpha = log_{delta0}(1/2);
//  * the ball-elimination probe: cover psi(B(y, R)) by N balls of radius
//    eps mu and count how many of them psi(B(y, delta R)) still needs;
//  * the halving property diam psi(B(y, delta0 R)) <= max{diam psi(B(y, R)), 2R} / 2
//    and the empirical delta0 at which it holds;
//  * dyadic decay traces r = delta0^m d with a fitted exponent;
//  * discrete Hoelder seminorms [psi]_{alpha; Omega_d} and their d-scaling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "field.hpp"
#include "gamma_metric.hpp"
#include "parallel.hpp"
#include "sampling.hpp"
#include "subsolution.hpp"

namespace holderlab {

inline double unit_ball_volume(int n) {
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

// ---------------------------------------------------------------------------
// Constants

struct TheoreticalConstants {
    int n = 2;
    double mu = 0.0;
    double K = 0.0;
    std::size_t Nprime = 1;
    std::size_t Ndprime = 1;
    double c0 = 0.0;
    double eps0 = 0.0;
    double delta = 0.0;
    double delta0 = 0.0;      // may underflow to 0; log_delta0 is exact
    double log_delta0 = 0.0;
    double alpha = 0.0;
    bool degenerate = false;  // K == 0 or mu == 0 (psi constant on every ball)
};

inline TheoreticalConstants constants(int n, double mu, double K, std::size_t Nprime, std::size_t Ndprime) {
    if (n < 1) throw InputError("constants: dimension must be positive");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InputError("constants: mu must be finite and nonnegative");
    if (!(K >= 0.0) || !std::isfinite(K)) throw InputError("constants: K must be finite and nonnegative");
    if (Nprime < 1 || Ndprime < 1) throw InputError("constants: N' and N'' must be >= 1");

    TheoreticalConstants c;
    c.n = n;
    c.mu = mu;
    c.K = K;
    c.Nprime = Nprime;
    c.Ndprime = Ndprime;
    const double rn = std::sqrt(static_cast<double>(n));
    const double ball = unit_ball_volume(n);
    const double np = static_cast<double>(Nprime);
    c.c0 = mu / (32.0 * rn);
    const double eps_cap = 1.0 / (128.0 * rn);
    c.degenerate = K == 0.0 || mu == 0.0;
    if (K == 0.0) {
        c.eps0 = eps_cap;
        c.delta = 0.499;
    } else {
        c.eps0 = std::min(0.2 * std::pow(2.0, n - 6) * ball / (rn * K * np), eps_cap);
        // 2 mu >= R gives c0 >= R / (64 sqrt n), which removes R from delta.
        c.delta = std::min(0.499, std::pow(2.0, n - 1) * ball / (64.0 * rn * np * K));
    }
    // Ndprime == 1 would give delta0 = 1; one application of the elimination
    // step is the least the halving argument uses.
    const double steps = static_cast<double>(std::max<std::size_t>(Ndprime, 2) - 1);
    c.log_delta0 = steps * std::log(c.delta);
    c.delta0 = std::exp(c.log_delta0);
    c.alpha = std::log(0.5) / c.log_delta0;
    return c;
}

/// Empty when every invariant of the constant set holds.
inline std::vector<std::string> invariant_violations(const TheoreticalConstants& c) {
    std::vector<std::string> bad;
    const double rn = std::sqrt(static_cast<double>(c.n));
    if (!(c.eps0 > 0.0 && c.eps0 <= 1.0 / (128.0 * rn))) bad.push_back(fmt::format("eps0 = {} outside (0, 1/(128 sqrt n)]", c.eps0));
    if (!(c.delta > 0.0 && c.delta < 0.5)) bad.push_back(fmt::format("delta = {} outside (0, 1/2)", c.delta));
    if (!(c.log_delta0 < std::log(0.5)) || !std::isfinite(c.log_delta0))
        bad.push_back(fmt::format("log delta0 = {} not below log(1/2)", c.log_delta0));
    if (!(c.log_delta0 <= std::log(c.delta) + 1e-12)) bad.push_back("delta0 > delta");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) bad.push_back(fmt::format("alpha = {} outside (0, 1)", c.alpha));
    if (!(std::abs(c.alpha - std::log(0.5) / c.log_delta0) <= 1e-12)) bad.push_back("alpha != log_{delta0}(1/2)");
    return bad;
}

/// The component-oscillation bound max_l osc psi^l <= diam / (2 n M).
inline double component_osc(const PsiPackage& pkg, double cloud_diam) {
    if (!(cloud_diam >= 0.0)) throw InputError("component_osc: diameter must be nonnegative");
    return cloud_diam / (2.0 * static_cast<double>(kDimension) * pkg.M);
}

/// max - min of each component over the nodes of B(y, R).
inline std::array<double, 2> component_oscillations(const VectorField& psi, std::span<const std::size_t> nodes) {
    std::array<double, 2> out{0.0, 0.0};
    for (std::size_t c = 0; c < 2; ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t n : nodes) {
            lo = std::min(lo, psi.component(c)[n]);
            hi = std::max(hi, psi.component(c)[n]);
        }
        if (!nodes.empty()) out[c] = hi - lo;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ball elimination

struct EliminationResult {
    bool valid = false;  // preconditions held
    std::string skip_reason;
    double diam = 0.0;
    double mu = 0.0;
    std::size_t outer_points = 0;
    std::size_t inner_points = 0;
    std::size_t N_outer = 0;
    std::size_t N_inner_needed = 0;
    bool pass = false;
};

namespace detail {

/// Greedy set cover of `targets` by the balls B(centers[s], radius).
inline std::size_t greedy_set_cover(const GammaMetric& m, std::span<const Point2> targets,
                                    std::span<const Point2> centers, double radius) {
    std::vector<std::vector<std::size_t>> members(centers.size());
    for (std::size_t t = 0; t < targets.size(); ++t)
        for (std::size_t s = 0; s < centers.size(); ++s)
            if (m.dist(targets[t], centers[s]) < radius) members[s].push_back(t);
    std::vector<char> covered(targets.size(), 0);
    std::size_t remaining = targets.size(), used = 0;
    while (remaining > 0) {
        std::size_t best = 0, best_gain = 0;
        for (std::size_t s = 0; s < centers.size(); ++s) {
            std::size_t gain = 0;
            for (std::size_t t : members[s]) gain += !covered[t];
            if (gain > best_gain) {
                best_gain = gain;
                best = s;
            }
        }
        if (best_gain == 0) throw std::logic_error("greedy_set_cover: target outside every ball");
        for (std::size_t t : members[best])
            if (!covered[t]) {
                covered[t] = 1;
                --remaining;
            }
        ++used;
    }
    return used;
}

}  // namespace detail

/// Covers psi(B(y, R)) greedily by balls of radius eps mu with mu = diam / 2
/// and counts how many of those balls psi(B(y, delta R)) needs. pass when at
/// least one ball is eliminated. Precondition failures produce a record with
/// valid = false and the reason.
inline EliminationResult ball_elimination_probe(const GammaMetric& m, const VectorField& psi, const Point2& y, double R,
                                                double eps, double delta, double eps0) {
    EliminationResult out;
    auto skip = [&](std::string why) {
        out.skip_reason = std::move(why);
        return out;
    };
    if (!(R > 0.0) || !ball_inside(psi.grid(), y, R)) return skip("ball leaves the domain");
    if (!(delta > 0.0 && delta < 1.0)) return skip("delta outside (0, 1)");
    if (!(eps > 0.0) || eps > eps0) return skip(fmt::format("eps = {} exceeds eps0 = {}", eps, eps0));
    const auto outer = ball_nodes(psi.grid(), y, R);
    const auto inner = ball_nodes(psi.grid(), y, delta * R);
    if (outer.empty()) return skip("outer ball holds no node");
    if (inner.empty()) return skip("inner ball holds no node");

    PointCloud<2> cloud;
    for (std::size_t n : outer) cloud.push_back(psi.at(n));
    out.outer_points = cloud.size();
    out.diam = diam(m, cloud).value;
    out.mu = 0.5 * out.diam;
    if (!(out.diam > 0.0)) return skip("psi is constant on the ball");
    if (!(2.0 * out.mu >= R)) return skip(fmt::format("2 mu = {} < R = {}", 2.0 * out.mu, R));

    const auto cover = greedy_cover(m, cloud, eps * out.mu);
    out.N_outer = cover.size();
    if (out.N_outer < 2) return skip("outer cover has a single ball");

    PointCloud<2> targets;
    for (std::size_t n : inner) targets.push_back(psi.at(n));
    out.inner_points = targets.size();
    out.N_inner_needed = detail::greedy_set_cover(m, targets, cover.centers, cover.radius);
    out.valid = true;
    out.pass = out.N_inner_needed + 1 <= out.N_outer;
    return out;
}

// ---------------------------------------------------------------------------
// Halving

struct HalvingResult {
    double lhs = 0.0;    // diam psi(B(y, delta0 R))
    double rhs = 0.0;    // max{diam psi(B(y, R)), 2R} / 2
    double slack = 0.0;  // 2 h Lip
    bool inner_empty = false;
    bool pass = false;
};

/// Outer-ball quantities reused across trial values of delta0.
struct HalvingBall {
    Point2 y;
    double R = 0.0;
    double outer_diam = 0.0;
    double lip = 0.0;  // max dist_gamma(psi(a), psi(b)) / |a - b| over neighbouring nodes
};

inline HalvingBall prepare_halving(const GammaMetric& m, const VectorField& psi, const Point2& y, double R) {
    const Grid2D& g = psi.grid();
    if (!ball_inside(g, y, R)) throw InputError("halving_check: outer ball leaves the domain");
    const auto nodes = ball_nodes(g, y, R);
    if (nodes.empty()) throw InputError("halving_check: outer ball holds no node");
    PointCloud<2> cloud;
    for (std::size_t n : nodes) cloud.push_back(psi.at(n));
    HalvingBall hb{y, R, diam(m, cloud).value, 0.0};
    for (std::size_t n : nodes) {
        const std::size_t i = g.ix(n), j = g.jy(n);
        if (i + 1 < g.nx()) hb.lip = std::max(hb.lip, m.dist(psi.at(n), psi.at(g.index(i + 1, j))) / g.hx());
        if (j + 1 < g.ny()) hb.lip = std::max(hb.lip, m.dist(psi.at(n), psi.at(g.index(i, j + 1))) / g.hy());
    }
    return hb;
}

inline HalvingResult halving_check(const GammaMetric& m, const VectorField& psi, const HalvingBall& hb, double delta0) {
    HalvingResult out;
    const auto inner = ball_nodes(psi.grid(), hb.y, delta0 * hb.R);
    out.inner_empty = inner.empty();
    if (!inner.empty()) {
        PointCloud<2> cloud;
        for (std::size_t n : inner) cloud.push_back(psi.at(n));
        out.lhs = diam(m, cloud).value;
    }
    out.rhs = 0.5 * std::max(hb.outer_diam, 2.0 * hb.R);
    out.slack = 2.0 * psi.grid().h() * hb.lip;
    out.pass = out.lhs <= out.rhs + out.slack;
    return out;
}

inline HalvingResult halving_check(const GammaMetric& m, const VectorField& psi, const Point2& y, double R,
                                   double delta0) {
    return halving_check(m, psi, prepare_halving(m, psi, y, R), delta0);
}

struct EmpiricalDelta0 {
    double delta0 = 0.0;
    double pass_rate = 0.0;
    std::vector<std::pair<double, double>> trials;  // (fraction, pass rate)
};

inline double halving_pass_rate(const GammaMetric& m, const VectorField& psi, std::span<const HalvingBall> balls,
                                double delta0) {
    if (balls.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& hb : balls) ok += halving_check(m, psi, hb, delta0).pass;
    return static_cast<double>(ok) / static_cast<double>(balls.size());
}

/// Largest radius fraction in (0, 1/2) with halving on >= target of the
/// balls, by bisection.
inline EmpiricalDelta0 empirical_delta0(const GammaMetric& m, const VectorField& psi, std::span<const Ball> balls,
                                        double target = 0.95, int steps = 8, std::size_t workers = 1) {
    std::vector<HalvingBall> prepared(balls.size());
    parallel_for(balls.size(), workers,
                 [&](std::size_t b) { prepared[b] = prepare_halving(m, psi, balls[b].center, balls[b].R); });
    EmpiricalDelta0 out;
    double lo = 0.0, hi = 0.5;
    for (int s = 0; s < steps; ++s) {
        const double mid = 0.5 * (lo + hi);
        const double rate = halving_pass_rate(m, psi, prepared, mid);
        out.trials.emplace_back(mid, rate);
        (rate >= target ? lo : hi) = mid;
    }
    out.delta0 = lo;
    out.pass_rate = lo > 0.0 ? halving_pass_rate(m, psi, prepared, lo) : 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Decay traces

inline constexpr std::size_t kMinTraceNodes = 9;

struct DecayTrace {
    Point2 y;
    double d = 0.0;
    double delta0 = 0.0;
    double M = 1.0;
    double domain_diam = 0.0;
    std::vector<double> radii;      // delta0^m d
    std::vector<double> r_eff;      // largest node distance inside each ball
    std::vector<std::size_t> nodes;
    std::vector<double> diams;
    std::vector<std::array<double, 2>> osc;
    std::vector<bool> halving_pass;  // step m against step m - 1; true at m = 0
    std::vector<double> bound;       // (16 n M^2 + 4 M^2 + 4 diam) d^-alpha r^alpha
    std::vector<bool> bound_pass;
    double alpha_emp = std::numeric_limits<double>::quiet_NaN();
    double alpha_theory = 0.0;
    bool truncated = false;  // stopped early: ball below kMinTraceNodes
};

/// Ordinary least-squares slope of ys against xs.
inline double ls_slope(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

/// Records diam psi(B(y, delta0^m d)) for m = 0..m_max, stopping once a ball
/// holds fewer than kMinTraceNodes nodes. alpha_emp is the slope of
/// log max{diam, 2 r} against log r where r is the realised radius of the
/// discrete ball (the largest node distance inside it): the node set of
/// B(y, r) equals that of every ball with radius in (r_eff, r].
inline DecayTrace decay_trace(const GammaMetric& m, const VectorField& psi, const Point2& y, double d, double delta0,
                              int m_max) {
    const Grid2D& g = psi.grid();
    if (!(d > 0.0) || !ball_inside(g, y, d)) throw InputError("decay_trace: B(y, d) must lie inside the domain");
    if (!(delta0 > 0.0 && delta0 < 0.5)) throw InputError(fmt::format("decay_trace: delta0 = {} not in (0, 1/2)", delta0));
    if (m_max < 0) throw InputError("decay_trace: m_max must be nonnegative");

    DecayTrace t;
    t.y = y;
    t.d = d;
    t.delta0 = delta0;
    t.M = std::max(psi.sup_norm(), 1.0);
    t.domain_diam = g.domain().diameter();
    t.alpha_theory = std::log(0.5) / std::log(delta0);
    const double n = static_cast<double>(kDimension);
    const double C = 16.0 * n * t.M * t.M + 4.0 * t.M * t.M + 4.0 * t.domain_diam;

    double r = d;
    for (int k = 0; k <= m_max; ++k, r *= delta0) {
        const auto nodes = ball_nodes(g, y, r);
        if (nodes.size() < kMinTraceNodes) {
            t.truncated = true;
            break;
        }
        PointCloud<2> cloud;
        double reff = 0.0;
        for (std::size_t nd : nodes) {
            cloud.push_back(psi.at(nd));
            reff = std::max(reff, euclidean(g.node(nd), y));
        }
        const double dm = diam(m, cloud).value;
        t.radii.push_back(r);
        t.r_eff.push_back(reff);
        t.nodes.push_back(nodes.size());
        t.diams.push_back(dm);
        t.osc.push_back(component_oscillations(psi, nodes));
        const std::size_t s = t.diams.size() - 1;
        t.halving_pass.push_back(s == 0 || dm <= 0.5 * std::max(t.diams[s - 1], 2.0 * t.radii[s - 1]));
        const double b = C * std::pow(d, -t.alpha_theory) * std::pow(r, t.alpha_theory);
        t.bound.push_back(b);
        t.bound_pass.push_back(dm <= b);
    }
    std::vector<double> xs, ys;
    for (std::size_t s = 0; s < t.diams.size(); ++s) {
        xs.push_back(std::log(t.r_eff[s]));
        ys.push_back(std::log(std::max(t.diams[s], 2.0 * t.r_eff[s])));
    }
    t.alpha_emp = ls_slope(xs, ys);
    return t;
}

/// Columns y1, y2, r, diam, osc1, osc2, pass, then r_eff and nodes.
inline void write_decay_csv(std::ostream& os, std::span<const DecayTrace> traces, bool header = true) {
    if (header) os << "y1,y2,r,diam,osc1,osc2,pass,r_eff,nodes\n";
    for (const auto& t : traces)
        for (std::size_t s = 0; s < t.radii.size(); ++s)
            os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{:.17g},{}\n", t.y[0], t.y[1],
                              t.radii[s], t.diams[s], t.osc[s][0], t.osc[s][1], t.halving_pass[s] ? 1 : 0, t.r_eff[s],
                              t.nodes[s]);
}

// ---------------------------------------------------------------------------
// Hoelder seminorms

inline constexpr double kConstantTol = 1e-8;

struct HolderResult {
    double value = 0.0;
    bool sampled = false;   // true: stratified lower bound of the sup
    bool constant = false;  // psi constant on the region to kConstantTol: value set to 0
    std::size_t pairs = 0;
    std::size_t nodes = 0;
};

using NodePredicate = std::function<bool(const Point2&)>;

/// sup |psi(x) - psi(y)| / |x - y|^alpha over node pairs of the region.
/// All pairs when their count fits `pair_budget`; otherwise every pair within
/// two grid steps plus an equal share of random pairs per dyadic distance band.
/// A field whose oscillation on the region is below constant_tol max{sup |psi|, 1}
/// is treated as constant: a discrete solution with affine data is affine
/// only to solver precision, and quotients of that residue carry no scaling.
inline HolderResult holder_seminorm(const VectorField& psi, const NodePredicate& region, double alpha,
                                    std::size_t pair_budget = 20'000'000, std::uint64_t seed = 7,
                                    double constant_tol = kConstantTol) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError(fmt::format("holder_seminorm: alpha = {} not in (0, 1]", alpha));
    const Grid2D& g = psi.grid();
    std::vector<std::size_t> nodes;
    std::vector<int> slot(g.size(), -1);
    for (std::size_t n = 0; n < g.size(); ++n)
        if (region(g.node(n))) {
            slot[n] = static_cast<int>(nodes.size());
            nodes.push_back(n);
        }
    if (nodes.empty()) throw InputError("holder_seminorm: empty region");

    HolderResult out;
    out.nodes = nodes.size();
    const auto osc = component_oscillations(psi, nodes);
    if (std::max(osc[0], osc[1]) <= constant_tol * std::max(psi.sup_norm(), 1.0)) {
        out.constant = true;
        return out;
    }
    auto quotient = [&](std::size_t a, std::size_t b) {
        const double dx = euclidean(g.node(a), g.node(b));
        return euclidean(psi.at(a), psi.at(b)) / std::pow(dx, alpha);
    };
    const std::size_t P = nodes.size();
    const double total_pairs = 0.5 * static_cast<double>(P) * static_cast<double>(P - 1);
    if (total_pairs <= static_cast<double>(pair_budget)) {
        for (std::size_t a = 0; a < P; ++a) {
            const Point2 xa = g.node(nodes[a]), pa = psi.at(nodes[a]);
            for (std::size_t b = a + 1; b < P; ++b) {
                const Point2 xb = g.node(nodes[b]), pb = psi.at(nodes[b]);
                const double dpsi = std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
                const double dx2 = (xa[0] - xb[0]) * (xa[0] - xb[0]) + (xa[1] - xb[1]) * (xa[1] - xb[1]);
                out.value = std::max(out.value, dpsi / std::pow(dx2, 0.5 * alpha));
            }
        }
        out.pairs = static_cast<std::size_t>(total_pairs);
        return out;
    }

    out.sampled = true;
    for (std::size_t n : nodes) {
        const long i = static_cast<long>(g.ix(n)), j = static_cast<long>(g.jy(n));
        for (long dj = 0; dj <= 2; ++dj)
            for (long di = -2; di <= 2; ++di) {
                if (dj == 0 && di <= 0) continue;
                const long ii = i + di, jj = j + dj;
                if (ii < 0 || jj < 0 || ii >= static_cast<long>(g.nx()) || jj >= static_cast<long>(g.ny())) continue;
                const std::size_t m2 = g.index(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
                if (slot[m2] < 0) continue;
                out.value = std::max(out.value, quotient(n, m2));
                ++out.pairs;
            }
    }
    Point2 lo = g.node(nodes.front()), hi = lo;
    for (std::size_t n : nodes) {
        const Point2 x = g.node(n);
        lo = {std::min(lo[0], x[0]), std::min(lo[1], x[1])};
        hi = {std::max(hi[0], x[0]), std::max(hi[1], x[1])};
    }
    const double extent = euclidean(lo, hi);
    const int bands = std::max(1, static_cast<int>(std::ceil(std::log2(extent / g.h()))));
    const std::size_t per_band = std::max<std::size_t>(1, (pair_budget > out.pairs ? pair_budget - out.pairs : 0) / bands);
    Rng rng(seed);
    const Rect& dom = g.domain();
    for (int b = 0; b < bands; ++b) {
        const double rmax = extent * std::ldexp(1.0, -b), rmin = 0.5 * rmax;
        for (std::size_t s = 0; s < per_band; ++s) {
            const std::size_t a = nodes[rng.index(0, P - 1)];
            const double r = rng.uniform(rmin, rmax), th = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const Point2 xa = g.node(a);
            const double tx = std::round((xa[0] + r * std::cos(th) - dom.x_min) / g.hx());
            const double ty = std::round((xa[1] + r * std::sin(th) - dom.y_min) / g.hy());
            if (tx < 0 || ty < 0 || tx >= static_cast<double>(g.nx()) || ty >= static_cast<double>(g.ny())) continue;
            const std::size_t bnode = g.index(static_cast<std::size_t>(tx), static_cast<std::size_t>(ty));
            if (slot[bnode] < 0 || bnode == a) continue;
            out.value = std::max(out.value, quotient(a, bnode));
            ++out.pairs;
        }
    }
    return out;
}

/// Omega_d: nodes farther than d from the boundary of the grid rectangle.
inline NodePredicate interior_region(const Grid2D& grid, double d) {
    return [grid, d](const Point2& x) { return grid.boundary_distance(x) > d; };
}

struct ScalingRow {
    double d = 0.0;
    double seminorm = 0.0;
    double product = 0.0;  // seminorm * d^alpha
    bool sampled = false;
    bool constant = false;
};

inline std::vector<ScalingRow> d_scaling_probe(const VectorField& psi, double alpha, std::span<const double> d_values,
                                               std::size_t pair_budget = 20'000'000) {
    std::vector<ScalingRow> rows;
    for (double d : d_values) {
        if (!(d > 0.0)) throw InputError("d_scaling_probe: d must be positive");
        const HolderResult h = holder_seminorm(psi, interior_region(psi.grid(), d), alpha, pair_budget);
        rows.push_back({d, h.value, h.value * std::pow(d, alpha), h.sampled, h.constant});
    }
    return rows;
}

/// max / min of the products; 1 when all vanish (no variation), +inf when
/// only some vanish.
inline double scaling_ratio(std::span<const ScalingRow> rows) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
        lo = std::min(lo, r.product);
        hi = std::max(hi, r.product);
    }
    if (rows.empty() || hi == 0.0) return 1.0;
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Measured stand-ins for N' and N''

/// max over balls of the greedy packing number of psi(B) at separation c0/2,
/// c0 = mu / (32 sqrt n), mu = diam / 2.
inline std::size_t measure_Nprime(const GammaMetric& m, const VectorField& psi, std::span<const Ball> balls,
                                  std::size_t workers = 1) {
    std::vector<std::size_t> counts(balls.size(), 1);
    parallel_for(balls.size(), workers, [&](std::size_t b) {
        const auto cloud = restrict(psi, balls[b].center, balls[b].R);
        const double mu = 0.5 * diam(m, cloud).value;
        if (mu > 0.0) counts[b] = packing_number(m, cloud, mu / (32.0 * std::sqrt(static_cast<double>(kDimension))) / 2.0);
    });
    return balls.empty() ? 1 : *std::max_element(counts.begin(), counts.end());
}

/// max over balls of the greedy cover count of psi(B) at radius eps0 mu.
inline std::size_t measure_Ndprime(const GammaMetric& m, const VectorField& psi, std::span<const Ball> balls,
                                   double eps0, std::size_t workers = 1) {
    std::vector<std::size_t> counts(balls.size(), 1);
    parallel_for(balls.size(), workers, [&](std::size_t b) {
        const auto cloud = restrict(psi, balls[b].center, balls[b].R);
        const double mu = 0.5 * diam(m, cloud).value;
        if (mu > 0.0) counts[b] = greedy_cover(m, cloud, eps0 * mu).size();
    });
    return balls.empty() ? 1 : *std::max_element(counts.begin(), counts.end());
}

}  // namespace holderlab
