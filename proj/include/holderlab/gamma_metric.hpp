#pragma once

// The weighted distance
//
//     dist_g(x1, x2) = sup_{|e| = 1} | g (x1 - x2) . e + |x1|^2 - |x2|^2 |
//
// on R^N, together with diameters, greedy covers and packing numbers of
// finite point clouds. Since a . e sweeps [-|a|, |a|] over the unit sphere,
// the supremum is |g| |x1 - x2| + | |x1|^2 - |x2|^2 |, which is what we
// evaluate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"

namespace holderlab {

template <std::size_t N>
using Vec = std::array<double, N>;

using Point2 = Vec<2>;

template <std::size_t N>
using PointCloud = std::vector<Vec<N>>;

template <std::size_t N>
constexpr double dot(const Vec<N>& a, const Vec<N>& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t N>
constexpr double norm_sq(const Vec<N>& a) noexcept { return dot(a, a); }

template <std::size_t N>
inline double norm(const Vec<N>& a) noexcept { return std::sqrt(norm_sq(a)); }

template <std::size_t N>
inline double euclidean(const Vec<N>& a, const Vec<N>& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

template <std::size_t N>
inline bool all_finite(const Vec<N>& a) noexcept {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

struct DistBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// kappa1 dist <= |x - y| <= kappa2 dist on B(0, R).
struct Comparability {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
};

class GammaMetric {
public:
    explicit GammaMetric(double gamma) : gamma_(gamma) {
        if (!(gamma != 0.0) || !std::isfinite(gamma))
            throw InputError(fmt::format("GammaMetric: gamma must be finite and nonzero, got {}", gamma));
    }

    double gamma() const noexcept { return gamma_; }

    template <std::size_t N>
    double dist(const Vec<N>& x1, const Vec<N>& x2) const noexcept {
        return std::abs(gamma_) * euclidean(x1, x2) + std::abs(norm_sq(x1) - norm_sq(x2));
    }

    template <std::size_t N>
    double operator()(const Vec<N>& x1, const Vec<N>& x2) const noexcept { return dist(x1, x2); }

    /// Runtime-dimension overload.
    double dist(std::span<const double> x1, std::span<const double> x2) const {
        if (x1.size() != x2.size())
            throw InputError(fmt::format("dist: dimension mismatch ({} vs {})", x1.size(), x2.size()));
        double diff_sq = 0.0, n1 = 0.0, n2 = 0.0;
        for (std::size_t i = 0; i < x1.size(); ++i) {
            if (!std::isfinite(x1[i]) || !std::isfinite(x2[i])) throw InputError("dist: non-finite coordinate");
            diff_sq += (x1[i] - x2[i]) * (x1[i] - x2[i]);
            n1 += x1[i] * x1[i];
            n2 += x2[i] * x2[i];
        }
        return std::abs(gamma_) * std::sqrt(diff_sq) + std::abs(n1 - n2);
    }

    template <std::size_t N>
    DistBounds bounds(const Vec<N>& x1, const Vec<N>& x2) const noexcept {
        const double e = euclidean(x1, x2);
        return {std::abs(gamma_) * e, (std::abs(gamma_) + norm(x1) + norm(x2)) * e};
    }

    Comparability euclidean_comparability(double R) const {
        if (!(R > 0.0)) throw InputError("euclidean_comparability: R must be positive");
        return {1.0 / (std::abs(gamma_) + 2.0 * R), 1.0 / std::abs(gamma_)};
    }

private:
    double gamma_;
};

// ---------------------------------------------------------------------------
// Diameters

inline constexpr std::size_t kExactDiameterLimit = 4096;

struct DiamResult {
    double value = 0.0;
    bool subsampled = false;
};

namespace detail {

template <std::size_t N>
double pairwise_max(const GammaMetric& m, std::span<const Vec<N>> pts) {
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, m.dist(pts[i], pts[j]));
    return best;
}

// Points extremal along a fan of directions and in |x|^2. The diameter pair
// of dist_g almost always involves one of them.
template <std::size_t N>
std::vector<std::size_t> extremal_candidates(std::span<const Vec<N>> pts) {
    constexpr int kDirections = 32;
    std::vector<std::size_t> out;
    auto push_extremes = [&](auto&& key) {
        std::size_t lo = 0, hi = 0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const double k = key(pts[i]);
            if (k < key(pts[lo])) lo = i;
            if (k > key(pts[hi])) hi = i;
        }
        out.push_back(lo);
        out.push_back(hi);
    };
    push_extremes([](const Vec<N>& p) { return norm_sq(p); });
    for (std::size_t axis = 0; axis < N; ++axis)
        for (int d = 0; d < kDirections; ++d) {
            const double t = std::numbers::pi * d / kDirections;
            const std::size_t other = (axis + 1) % N;
            push_extremes([&](const Vec<N>& p) {
                return N == 1 ? p[0] : std::cos(t) * p[axis] + std::sin(t) * p[other];
            });
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

/// Largest pairwise distance. Exact up to kExactDiameterLimit points; larger
/// clouds use a strided subsample plus extremal candidates scanned against
/// every point, and the result is flagged.
template <std::size_t N>
DiamResult diam(const GammaMetric& m, std::span<const Vec<N>> cloud) {
    if (cloud.empty()) throw InputError("diam: empty point cloud");
    if (cloud.size() <= kExactDiameterLimit) return {detail::pairwise_max(m, cloud), false};

    const std::size_t stride = (cloud.size() + kExactDiameterLimit - 1) / kExactDiameterLimit;
    std::vector<Vec<N>> sub;
    sub.reserve(kExactDiameterLimit);
    for (std::size_t i = 0; i < cloud.size(); i += stride) sub.push_back(cloud[i]);
    double best = detail::pairwise_max<N>(m, sub);
    for (std::size_t c : detail::extremal_candidates(cloud))
        for (const auto& p : cloud) best = std::max(best, m.dist(cloud[c], p));
    return {best, true};
}

template <std::size_t N>
DiamResult diam(const GammaMetric& m, const PointCloud<N>& cloud) {
    return diam(m, std::span<const Vec<N>>(cloud));
}

// ---------------------------------------------------------------------------
// Covers and packings

template <std::size_t N>
struct CoverResult {
    std::vector<std::size_t> center_indices;  // into the cloud
    PointCloud<N> centers;
    double radius = 0.0;
    std::vector<std::size_t> assignment;  // point index -> position in `centers`

    std::size_t size() const noexcept { return centers.size(); }
};

/// Greedy cover by open dist_g balls. Points are visited in index order; an
/// uncovered point becomes a center and absorbs every point within `radius`.
/// The center set is therefore radius-separated.
template <std::size_t N>
CoverResult<N> greedy_cover(const GammaMetric& m, std::span<const Vec<N>> cloud, double radius) {
    if (!(radius > 0.0)) throw InputError("greedy_cover: radius must be positive");
    constexpr std::size_t unassigned = static_cast<std::size_t>(-1);
    CoverResult<N> out;
    out.radius = radius;
    out.assignment.assign(cloud.size(), unassigned);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (out.assignment[i] != unassigned) continue;
        const std::size_t slot = out.centers.size();
        out.center_indices.push_back(i);
        out.centers.push_back(cloud[i]);
        out.assignment[i] = slot;
        for (std::size_t j = i + 1; j < cloud.size(); ++j)
            if (out.assignment[j] == unassigned && m.dist(cloud[i], cloud[j]) < radius) out.assignment[j] = slot;
    }
    return out;
}

template <std::size_t N>
CoverResult<N> greedy_cover(const GammaMetric& m, const PointCloud<N>& cloud, double radius) {
    return greedy_cover(m, std::span<const Vec<N>>(cloud), radius);
}

/// Size of a greedily built maximal subset with pairwise distances >= separation.
template <std::size_t N>
std::size_t packing_number(const GammaMetric& m, std::span<const Vec<N>> cloud, double separation) {
    if (!(separation > 0.0)) throw InputError("packing_number: separation must be positive");
    std::vector<Vec<N>> chosen;
    for (const auto& p : cloud) {
        const bool separated =
            std::all_of(chosen.begin(), chosen.end(), [&](const Vec<N>& q) { return m.dist(p, q) >= separation; });
        if (separated) chosen.push_back(p);
    }
    return chosen.size();
}

template <std::size_t N>
std::size_t packing_number(const GammaMetric& m, const PointCloud<N>& cloud, double separation) {
    return packing_number(m, std::span<const Vec<N>>(cloud), separation);
}

// ---------------------------------------------------------------------------
// CSV: one point per row, columns x1..xN, with a header row.

template <std::size_t N>
void write_cloud_csv(std::ostream& os, std::span<const Vec<N>> cloud) {
    for (std::size_t i = 0; i < N; ++i) os << (i ? "," : "") << 'x' << (i + 1);
    os << '\n';
    for (const auto& p : cloud) {
        for (std::size_t i = 0; i < N; ++i) os << (i ? "," : "") << fmt::format("{:.17g}", p[i]);
        os << '\n';
    }
}

template <std::size_t N>
PointCloud<N> read_cloud_csv(std::istream& is) {
    PointCloud<N> out;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line[0] == 'x') continue;
        }
        std::stringstream ss(line);
        std::string cell;
        Vec<N> p{};
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= N) throw InputError(fmt::format("cloud CSV: more than {} columns in '{}'", N, line));
            try {
                p[col++] = std::stod(cell);
            } catch (const std::exception&) {
                throw InputError(fmt::format("cloud CSV: bad number '{}'", cell));
            }
        }
        if (col != N) throw InputError(fmt::format("cloud CSV: expected {} columns in '{}'", N, line));
        if (!all_finite(p)) throw InputError("cloud CSV: non-finite coordinate");
        out.push_back(p);
    }
    if (out.empty()) throw InputError("cloud CSV: no points");
    return out;
}

}  // namespace holderlab
