#pragma once

// Coefficients of A^{ij}(x, z, p) D_ij u + B(x, z, p) = 0 in two dimensions,
// their first derivatives (analytic when supplied, central differences
// otherwise), a small registry of model equations and the structure probe
// that measures theta_1(rho).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "field.hpp"

namespace holderlab {

/// Symmetric 2x2 matrix.
struct Sym2 {
    double xx = 0.0, xy = 0.0, yy = 0.0;

    static constexpr Sym2 identity() noexcept { return {1.0, 0.0, 1.0}; }

    constexpr double operator()(std::size_t i, std::size_t j) const noexcept {
        return i != j ? xy : (i == 0 ? xx : yy);
    }
    constexpr Sym2 operator+(const Sym2& o) const noexcept { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
    constexpr Sym2 operator-(const Sym2& o) const noexcept { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
    constexpr Sym2 operator*(double s) const noexcept { return {xx * s, xy * s, yy * s}; }

    double frobenius() const noexcept { return std::sqrt(xx * xx + 2.0 * xy * xy + yy * yy); }

    std::array<double, 2> eigenvalues() const noexcept {
        const double mean = 0.5 * (xx + yy);
        const double rad = std::hypot(0.5 * (xx - yy), xy);
        return {mean - rad, mean + rad};
    }
    double lambda_min() const noexcept { return eigenvalues()[0]; }
    double lambda_max() const noexcept { return eigenvalues()[1]; }

    /// A : H = A^{ij} H_ij.
    constexpr double contract(const Sym2& h) const noexcept { return xx * h.xx + 2.0 * xy * h.xy + yy * h.yy; }
};

using Coefficient = std::function<Sym2(const Point2& x, double z, const Point2& p)>;
using Source = std::function<double(const Point2& x, double z, const Point2& p)>;
/// Entry l holds the partial derivative with respect to the l-th variable.
using CoefficientGradient = std::function<std::array<Sym2, 2>(const Point2& x, double z, const Point2& p)>;

struct EquationSpec {
    std::string name;
    Coefficient A;
    Source B;
    CoefficientGradient dA_dp;  // optional
    Coefficient dA_dz;          // optional
    CoefficientGradient dA_dx;  // optional
};

namespace detail {

inline double fd_step(double v) noexcept { return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(v)); }

}  // namespace detail

inline std::array<Sym2, 2> coefficient_dp(const EquationSpec& s, const Point2& x, double z, const Point2& p) {
    if (s.dA_dp) return s.dA_dp(x, z, p);
    std::array<Sym2, 2> out;
    for (std::size_t l = 0; l < 2; ++l) {
        const double h = detail::fd_step(p[l]);
        Point2 hi = p, lo = p;
        hi[l] += h;
        lo[l] -= h;
        out[l] = (s.A(x, z, hi) - s.A(x, z, lo)) * (0.5 / h);
    }
    return out;
}

inline Sym2 coefficient_dz(const EquationSpec& s, const Point2& x, double z, const Point2& p) {
    if (s.dA_dz) return s.dA_dz(x, z, p);
    const double h = detail::fd_step(z);
    return (s.A(x, z + h, p) - s.A(x, z - h, p)) * (0.5 / h);
}

inline std::array<Sym2, 2> coefficient_dx(const EquationSpec& s, const Point2& x, double z, const Point2& p) {
    if (s.dA_dx) return s.dA_dx(x, z, p);
    std::array<Sym2, 2> out;
    for (std::size_t l = 0; l < 2; ++l) {
        const double h = detail::fd_step(x[l]);
        Point2 hi = x, lo = x;
        hi[l] += h;
        lo[l] -= h;
        out[l] = (s.A(hi, z, p) - s.A(lo, z, p)) * (0.5 / h);
    }
    return out;
}

/// A evaluated with a positivity check; `where` names the evaluation site.
inline Sym2 checked_coefficient(const EquationSpec& s, const Point2& x, double z, const Point2& p,
                                const std::string& where) {
    const Sym2 a = s.A(x, z, p);
    const double lam = a.lambda_min();
    if (!(lam > 0.0))
        throw StructureError(fmt::format("{}: coefficient matrix of '{}' not positive definite at {} "
                                         "(x = ({:.6g}, {:.6g}), z = {:.6g}, p = ({:.6g}, {:.6g}), lambda = {:.6g})",
                                         s.name, s.name, where, x[0], x[1], z, p[0], p[1], lam));
    return a;
}

// ---------------------------------------------------------------------------
// Model equations

inline EquationSpec laplace_spec() {
    EquationSpec s;
    s.name = "laplace";
    s.A = [](const Point2&, double, const Point2&) { return Sym2::identity(); };
    s.B = [](const Point2&, double, const Point2&) { return 0.0; };
    s.dA_dp = [](const Point2&, double, const Point2&) { return std::array<Sym2, 2>{}; };
    s.dA_dz = [](const Point2&, double, const Point2&) { return Sym2{}; };
    s.dA_dx = [](const Point2&, double, const Point2&) { return std::array<Sym2, 2>{}; };
    return s;
}

/// (1 + |p|^2) I - p (x) p.
inline EquationSpec minimal_surface_spec() {
    EquationSpec s;
    s.name = "minimal_surface";
    s.A = [](const Point2&, double, const Point2& p) {
        const double q = 1.0 + norm_sq(p);
        return Sym2{q - p[0] * p[0], -p[0] * p[1], q - p[1] * p[1]};
    };
    s.B = [](const Point2&, double, const Point2&) { return 0.0; };
    // d/dp_l [(1 + |p|^2) d_ij - p_i p_j] = 2 p_l d_ij - d_il p_j - p_i d_jl
    s.dA_dp = [](const Point2&, double, const Point2& p) {
        return std::array<Sym2, 2>{Sym2{2.0 * p[0] - 2.0 * p[0], -p[1], 2.0 * p[0]},
                                   Sym2{2.0 * p[1], -p[0], 2.0 * p[1] - 2.0 * p[1]}};
    };
    s.dA_dz = [](const Point2&, double, const Point2&) { return Sym2{}; };
    s.dA_dx = [](const Point2&, double, const Point2&) { return std::array<Sym2, 2>{}; };
    return s;
}

/// (1 + |p|^2) I with B = 0; the base of the manufactured problem.
inline EquationSpec isotropic_quasilinear_spec() {
    EquationSpec s;
    s.name = "quasilinear";
    s.A = [](const Point2&, double, const Point2& p) { return Sym2::identity() * (1.0 + norm_sq(p)); };
    s.B = [](const Point2&, double, const Point2&) { return 0.0; };
    s.dA_dp = [](const Point2&, double, const Point2& p) {
        return std::array<Sym2, 2>{Sym2::identity() * (2.0 * p[0]), Sym2::identity() * (2.0 * p[1])};
    };
    s.dA_dz = [](const Point2&, double, const Point2&) { return Sym2{}; };
    s.dA_dx = [](const Point2&, double, const Point2&) { return std::array<Sym2, 2>{}; };
    return s;
}

/// A twice differentiable function given with its gradient and Hessian.
struct ManufacturedSolution {
    std::function<double(const Point2&)> value;
    std::function<Point2(const Point2&)> gradient;
    std::function<Sym2(const Point2&)> hessian;
};

inline ManufacturedSolution sine_product_solution() {
    constexpr double pi = std::numbers::pi;
    ManufacturedSolution u;
    u.value = [](const Point2& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    u.gradient = [](const Point2& x) {
        return Point2{pi * std::cos(pi * x[0]) * std::sin(pi * x[1]), pi * std::sin(pi * x[0]) * std::cos(pi * x[1])};
    };
    u.hessian = [](const Point2& x) {
        const double s = std::sin(pi * x[0]) * std::sin(pi * x[1]);
        return Sym2{-pi * pi * s, pi * pi * std::cos(pi * x[0]) * std::cos(pi * x[1]), -pi * pi * s};
    };
    return u;
}

/// Replaces B by B - [A(x, u*, Du*) : D^2 u* + B(x, u*, Du*)] so that u*
/// solves the modified equation exactly.
inline EquationSpec mms_source(const EquationSpec& spec, const ManufacturedSolution& u_star) {
    EquationSpec out = spec;
    out.name = spec.name + "+mms";
    out.B = [A = spec.A, B = spec.B, u_star](const Point2& x, double z, const Point2& p) {
        const double zs = u_star.value(x);
        const Point2 ps = u_star.gradient(x);
        return B(x, z, p) - (A(x, zs, ps).contract(u_star.hessian(x)) + B(x, zs, ps));
    };
    return out;
}

inline EquationSpec mms_quasilinear_spec() {
    EquationSpec s = mms_source(isotropic_quasilinear_spec(), sine_product_solution());
    s.name = "mms_quasilinear";
    return s;
}

inline const std::vector<std::string>& registered_specs() {
    static const std::vector<std::string> names{"laplace", "minimal_surface", "mms_quasilinear"};
    return names;
}

inline EquationSpec make_spec(const std::string& name) {
    if (name == "laplace") return laplace_spec();
    if (name == "minimal_surface") return minimal_surface_spec();
    if (name == "mms_quasilinear") return mms_quasilinear_spec();
    throw InputError(fmt::format("unknown equation '{}' (known: laplace, minimal_surface, mms_quasilinear)", name));
}

// ---------------------------------------------------------------------------
// Structure probe

struct StructureBounds {
    double rho = 0.0;
    double theta1 = 0.0;
    double lambda_min = 0.0;  // smallest minimal eigenvalue seen
    double Lambda_max = 0.0;  // largest maximal eigenvalue seen
    std::size_t samples = 0;
};

/// One argument (x, z, p) of the coefficients.
struct StructureSample {
    Point2 x;
    double z = 0.0;
    Point2 p;
};

inline double radical_inverse(std::size_t index, std::size_t base) noexcept {
    double inv = 1.0 / static_cast<double>(base), f = inv, out = 0.0;
    while (index > 0) {
        out += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return out;
}

/// Halton points of {|z| + |p| <= rho} x domain, by rejection from the box.
inline std::vector<StructureSample> structure_samples(const Rect& domain, double rho, std::size_t count) {
    std::vector<StructureSample> out;
    out.reserve(count);
    for (std::size_t k = 1; out.size() < count; ++k) {
        StructureSample s;
        s.x = {domain.x_min + radical_inverse(k, 2) * (domain.x_max - domain.x_min),
               domain.y_min + radical_inverse(k, 3) * (domain.y_max - domain.y_min)};
        s.z = rho * (2.0 * radical_inverse(k, 5) - 1.0);
        s.p = {rho * (2.0 * radical_inverse(k, 7) - 1.0), rho * (2.0 * radical_inverse(k, 11) - 1.0)};
        if (std::abs(s.z) + norm(s.p) <= rho) out.push_back(s);
    }
    return out;
}

/// max of (|A| + |D_p A| + |D_z A| + |D_x A| + |B|) / lambda over the samples
/// with |z| + |p| <= rho. Matrix and derivative-array norms are Frobenius.
inline StructureBounds theta1_probe(const EquationSpec& spec, double rho, std::span<const StructureSample> samples) {
    StructureBounds out;
    out.rho = rho;
    out.lambda_min = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        if (std::abs(s.z) + norm(s.p) > rho) continue;
        const Sym2 a = spec.A(s.x, s.z, s.p);
        const auto [lam, Lam] = a.eigenvalues();
        if (!(lam > 0.0))
            throw StructureError(fmt::format("theta1_probe: lambda = {:.6g} <= 0 at x = ({:.6g}, {:.6g}), z = {:.6g}, "
                                             "p = ({:.6g}, {:.6g})",
                                             lam, s.x[0], s.x[1], s.z, s.p[0], s.p[1]));
        const auto dp = coefficient_dp(spec, s.x, s.z, s.p);
        const auto dx = coefficient_dx(spec, s.x, s.z, s.p);
        const double dp_norm = std::hypot(dp[0].frobenius(), dp[1].frobenius());
        const double dx_norm = std::hypot(dx[0].frobenius(), dx[1].frobenius());
        const double total = a.frobenius() + dp_norm + coefficient_dz(spec, s.x, s.z, s.p).frobenius() + dx_norm +
                             std::abs(spec.B(s.x, s.z, s.p));
        out.theta1 = std::max(out.theta1, total / lam);
        out.lambda_min = std::min(out.lambda_min, lam);
        out.Lambda_max = std::max(out.Lambda_max, Lam);
        ++out.samples;
    }
    if (out.samples == 0) throw InputError("theta1_probe: no sample inside {|z| + |p| <= rho}");
    return out;
}

inline StructureBounds theta1_probe(const EquationSpec& spec, const Rect& domain, double rho, std::size_t samples) {
    if (samples < 1) throw InputError("theta1_probe: need at least one sample");
    if (!(rho >= 0.0)) throw InputError("theta1_probe: rho must be nonnegative");
    const auto pts = structure_samples(domain, rho, samples);
    return theta1_probe(spec, rho, pts);
}

}  // namespace holderlab
