#pragma once

// Uniform tensor grids on a rectangle, nodal scalar/vector fields, discrete
// gradients and restriction of a vector field to a Euclidean ball.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "gamma_metric.hpp"

namespace holderlab {

struct Rect {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

    double diameter() const noexcept { return std::hypot(x_max - x_min, y_max - y_min); }
    bool operator==(const Rect&) const = default;
};

/// nx * ny nodes, node (i, j) at (x_min + i hx, y_min + j hy), stored with i fastest.
class Grid2D {
public:
    Grid2D(std::size_t nx, std::size_t ny, Rect domain = {}) : nx_(nx), ny_(ny), domain_(domain) {
        if (nx < 3 || ny < 3) throw InputError(fmt::format("Grid2D: need at least 3 nodes per axis, got {}x{}", nx, ny));
        if (!(domain.x_max > domain.x_min) || !(domain.y_max > domain.y_min))
            throw InputError("Grid2D: empty domain");
        hx_ = (domain.x_max - domain.x_min) / static_cast<double>(nx - 1);
        hy_ = (domain.y_max - domain.y_min) / static_cast<double>(ny - 1);
    }

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return nx_ * ny_; }
    double hx() const noexcept { return hx_; }
    double hy() const noexcept { return hy_; }
    double h() const noexcept { return std::max(hx_, hy_); }
    const Rect& domain() const noexcept { return domain_; }

    std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx_ + i; }
    std::size_t ix(std::size_t idx) const noexcept { return idx % nx_; }
    std::size_t jy(std::size_t idx) const noexcept { return idx / nx_; }

    Point2 node(std::size_t i, std::size_t j) const noexcept {
        // Last node pinned to the upper bound so domain edges are exact.
        const double x = i + 1 == nx_ ? domain_.x_max : domain_.x_min + static_cast<double>(i) * hx_;
        const double y = j + 1 == ny_ ? domain_.y_max : domain_.y_min + static_cast<double>(j) * hy_;
        return {x, y};
    }
    Point2 node(std::size_t idx) const noexcept { return node(ix(idx), jy(idx)); }

    bool is_boundary(std::size_t i, std::size_t j) const noexcept {
        return i == 0 || j == 0 || i + 1 == nx_ || j + 1 == ny_;
    }

    /// Euclidean distance from p to the domain boundary (p inside).
    double boundary_distance(const Point2& p) const noexcept {
        return std::min({p[0] - domain_.x_min, domain_.x_max - p[0], p[1] - domain_.y_min, domain_.y_max - p[1]});
    }

    bool operator==(const Grid2D& o) const noexcept { return nx_ == o.nx_ && ny_ == o.ny_ && domain_ == o.domain_; }

private:
    std::size_t nx_, ny_;
    Rect domain_;
    double hx_ = 0.0, hy_ = 0.0;
};

class ScalarField {
public:
    explicit ScalarField(Grid2D grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
    ScalarField(Grid2D grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw InputError(fmt::format("ScalarField: {} values for a {}-node grid", values_.size(), grid_.size()));
    }

    template <class F>
    static ScalarField sample(const Grid2D& grid, F&& f) {
        ScalarField out(grid);
        for (std::size_t k = 0; k < grid.size(); ++k) out.values_[k] = f(grid.node(k));
        return out;
    }

    const Grid2D& grid() const noexcept { return grid_; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[grid_.index(i, j)]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[grid_.index(i, j)]; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    Grid2D grid_;
    std::vector<double> values_;
};

/// Two components on a shared grid.
class VectorField {
public:
    VectorField(ScalarField c0, ScalarField c1) : comp_{std::move(c0), std::move(c1)} {
        if (!(comp_[0].grid() == comp_[1].grid())) throw InputError("VectorField: components on different grids");
    }

    template <class F>
    static VectorField sample(const Grid2D& grid, F&& f) {
        ScalarField a(grid), b(grid);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Point2 v = f(grid.node(k));
            a[k] = v[0];
            b[k] = v[1];
        }
        return VectorField(std::move(a), std::move(b));
    }

    const Grid2D& grid() const noexcept { return comp_[0].grid(); }
    const ScalarField& component(std::size_t k) const { return comp_.at(k); }
    Point2 at(std::size_t idx) const noexcept { return {comp_[0][idx], comp_[1][idx]}; }

    double sup_norm() const noexcept {
        double m = 0.0;
        for (std::size_t k = 0; k < grid().size(); ++k) m = std::max(m, norm(at(k)));
        return m;
    }

private:
    std::array<ScalarField, 2> comp_;
};

/// Central differences inside, one-sided three-point stencils on the boundary.
inline VectorField gradient(const ScalarField& u) {
    const Grid2D& g = u.grid();
    ScalarField dx(g), dy(g);
    const std::size_t nx = g.nx(), ny = g.ny();
    const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            if (i == 0)
                dx(i, j) = 0.5 * ihx * (-3.0 * u(0, j) + 4.0 * u(1, j) - u(2, j));
            else if (i + 1 == nx)
                dx(i, j) = 0.5 * ihx * (3.0 * u(i, j) - 4.0 * u(i - 1, j) + u(i - 2, j));
            else
                dx(i, j) = 0.5 * ihx * (u(i + 1, j) - u(i - 1, j));

            if (j == 0)
                dy(i, j) = 0.5 * ihy * (-3.0 * u(i, 0) + 4.0 * u(i, 1) - u(i, 2));
            else if (j + 1 == ny)
                dy(i, j) = 0.5 * ihy * (3.0 * u(i, j) - 4.0 * u(i, j - 1) + u(i, j - 2));
            else
                dy(i, j) = 0.5 * ihy * (u(i, j + 1) - u(i, j - 1));
        }
    return VectorField(std::move(dx), std::move(dy));
}

/// psi(x) = |x|^(beta - 1) x, psi(0) = 0. Hoelder continuous with exponent
/// exactly beta at the origin.
inline Point2 holder_profile(double beta, const Point2& x) noexcept {
    const double r = norm(x);
    if (r == 0.0) return {0.0, 0.0};
    const double s = std::pow(r, beta - 1.0);
    return {s * x[0], s * x[1]};
}

inline VectorField analytic_holder_field(double beta, const Grid2D& grid) {
    if (!(beta > 0.0 && beta <= 1.0)) throw InputError(fmt::format("analytic_holder_field: beta {} not in (0, 1]", beta));
    const Rect& d = grid.domain();
    if (d.x_min > 0.0 || d.x_max < 0.0 || d.y_min > 0.0 || d.y_max < 0.0)
        throw InputError("analytic_holder_field: domain must contain the origin");
    return VectorField::sample(grid, [beta](const Point2& x) { return holder_profile(beta, x); });
}

// ---------------------------------------------------------------------------
// Balls

inline constexpr double kGeometryTol = 1e-12;

inline bool ball_inside(const Grid2D& grid, const Point2& y, double R) noexcept {
    const Rect& d = grid.domain();
    const double tol = kGeometryTol * std::max(1.0, d.diameter());
    return y[0] - R >= d.x_min - tol && y[0] + R <= d.x_max + tol && y[1] - R >= d.y_min - tol &&
           y[1] + R <= d.y_max + tol;
}

/// Indices of nodes strictly inside the open Euclidean ball B(y, R).
inline std::vector<std::size_t> ball_nodes(const Grid2D& grid, const Point2& y, double R) {
    std::vector<std::size_t> out;
    if (!(R > 0.0)) return out;
    const Rect& d = grid.domain();
    const auto lo = [](double v, double h) { return static_cast<long>(std::floor(v / h)); };
    const long i0 = std::max(0L, lo(y[0] - R - d.x_min, grid.hx()));
    const long i1 = std::min(static_cast<long>(grid.nx()) - 1, lo(y[0] + R - d.x_min, grid.hx()) + 1);
    const long j0 = std::max(0L, lo(y[1] - R - d.y_min, grid.hy()));
    const long j1 = std::min(static_cast<long>(grid.ny()) - 1, lo(y[1] + R - d.y_min, grid.hy()) + 1);
    const double r2 = R * R;
    for (long j = j0; j <= j1; ++j)
        for (long i = i0; i <= i1; ++i) {
            const Point2 p = grid.node(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            const double dx = p[0] - y[0], dy = p[1] - y[1];
            if (dx * dx + dy * dy < r2) out.push_back(grid.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
        }
    return out;
}

/// psi sampled at the grid nodes of B(y, R): the discrete image psi(B(y, R)).
inline PointCloud<2> restrict(const VectorField& psi, const Point2& y, double R) {
    if (!(R > 0.0)) throw InputError("restrict: radius must be positive");
    if (!ball_inside(psi.grid(), y, R))
        throw InputError(fmt::format("restrict: B(({}, {}), {}) leaves the domain", y[0], y[1], R));
    const auto nodes = ball_nodes(psi.grid(), y, R);
    if (nodes.empty()) throw InputError(fmt::format("restrict: B(({}, {}), {}) contains no grid node", y[0], y[1], R));
    PointCloud<2> cloud;
    cloud.reserve(nodes.size());
    for (std::size_t k : nodes) cloud.push_back(psi.at(k));
    return cloud;
}

// ---------------------------------------------------------------------------
// CSV: four header lines (nx, ny, domain, field name) then one row of nx
// values per grid line j. Lines starting with '#' are comments.

inline void write_field_csv(std::ostream& os, const ScalarField& f, const std::string& name) {
    const Grid2D& g = f.grid();
    const Rect& d = g.domain();
    os << "nx," << g.nx() << '\n' << "ny," << g.ny() << '\n';
    os << fmt::format("domain,{:.17g},{:.17g},{:.17g},{:.17g}\n", d.x_min, d.x_max, d.y_min, d.y_max);
    os << "field," << name << '\n';
    for (std::size_t j = 0; j < g.ny(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) os << (i ? "," : "") << fmt::format("{:.17g}", f(i, j));
        os << '\n';
    }
}

struct NamedField {
    std::string name;
    ScalarField field;
};

inline NamedField read_field_csv(std::istream& is) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    if (lines.size() < 4) throw InputError("field CSV: truncated header");
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        return cells;
    };
    auto number = [](const std::string& s) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw InputError("");
            return v;
        } catch (const std::exception&) {
            throw InputError(fmt::format("field CSV: bad number '{}'", s));
        }
    };
    const auto nxl = split(lines[0]), nyl = split(lines[1]), dl = split(lines[2]), fl = split(lines[3]);
    if (nxl.size() != 2 || nxl[0] != "nx" || nyl.size() != 2 || nyl[0] != "ny" || dl.size() != 5 ||
        dl[0] != "domain" || fl.size() != 2 || fl[0] != "field")
        throw InputError("field CSV: malformed header");
    const Grid2D grid(static_cast<std::size_t>(number(nxl[1])), static_cast<std::size_t>(number(nyl[1])),
                      Rect{number(dl[1]), number(dl[2]), number(dl[3]), number(dl[4])});
    if (lines.size() != 4 + grid.ny())
        throw InputError(fmt::format("field CSV: expected {} value rows, found {}", grid.ny(), lines.size() - 4));
    ScalarField f(grid);
    for (std::size_t j = 0; j < grid.ny(); ++j) {
        const auto cells = split(lines[4 + j]);
        if (cells.size() != grid.nx()) throw InputError(fmt::format("field CSV: row {} has {} values", j, cells.size()));
        for (std::size_t i = 0; i < grid.nx(); ++i) f(i, j) = number(cells[i]);
    }
    return {fl[1], std::move(f)};
}

}  // namespace holderlab
