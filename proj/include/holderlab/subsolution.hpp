#pragma once

// Auxiliary functions v = gamma D_k u + |Du|^2 of a solution u and the
// divergence-form data (a, f, g) for which
//
//     D_i(a^{ij} D_j v) >= g + D_i f^i      (weakly)
//
// with
//     a^{ij} = e^{2 chi v} A^{ij},  f^i = -e^{2 chi v} ft^i,
//     g      = -(e^{2 chi v} / lambda) (chi sum |ft^i|^2 + sum |Bm^{ij}|^2 + sum |gt^j|^2),
//     ft^i   = (2 D_i u + gamma d^{ik}) B,
//     Bm^{ij}= (2 D_l u + gamma d^{lk}) dl A^{ij} - 2 d^{ij} B,
//     gt^j   = di A^{ij},   dl h = D_{x_l} h + p_l D_z h,
//     chi    = sup (1 + lambda^{-2} sum_{ijl} |D_{p_l} A^{ij} - D_{p_j} A^{il}|^2).
//
// All coefficients carry the common factor e^{2 chi v}, which overflows for
// moderate v. DivergenceData stores the exponent 2 chi v and the unweighted
// parts.
// Lower-order terms b, c, d of the general divergence form vanish here and
// are not stored.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "equation.hpp"
#include "error.hpp"
#include "field.hpp"

namespace holderlab {

inline constexpr std::size_t kDimension = 2;

struct PsiPackage {
    VectorField psi;
    double M = 1.0;           // max{sup |psi|, 1}
    double gamma_star = 8.0;  // 4 n M
};

inline PsiPackage make_psi_package(VectorField psi) {
    const double M = std::max(psi.sup_norm(), 1.0);
    return {std::move(psi), M, 4.0 * static_cast<double>(kDimension) * M};
}

inline PsiPackage build_psi(const ScalarField& u) { return make_psi_package(gradient(u)); }

namespace detail {

inline void check_axis(std::size_t k) {
    if (k >= kDimension) throw InputError(fmt::format("axis index {} out of range (0..{})", k, kDimension - 1));
}
inline void check_sign(int sign) {
    if (sign != 1 && sign != -1) throw InputError(fmt::format("sign must be +1 or -1, got {}", sign));
}

}  // namespace detail

/// sign * gamma * psi^k + |psi|^2, nodewise (k is 0-based).
inline ScalarField v_field(const VectorField& psi, std::size_t k, int sign, double gamma) {
    detail::check_axis(k);
    detail::check_sign(sign);
    ScalarField v(psi.grid());
    for (std::size_t n = 0; n < v.grid().size(); ++n) {
        const Point2 q = psi.at(n);
        v[n] = sign * gamma * q[k] + norm_sq(q);
    }
    return v;
}

inline ScalarField v_field(const PsiPackage& pkg, std::size_t k, int sign) {
    return v_field(pkg.psi, k, sign, pkg.gamma_star);
}

/// sum_{i,j,l} |D_{p_l} A^{ij} - D_{p_j} A^{il}|^2.
/// max over nodes and axes of |v_+ + v_- - 2|psi|^2| / (gamma* |psi^k| + |psi|^2).
/// The sum is exact up to the two roundings of v_+ and v_-, so the result is
/// at most 2 eps.
inline double v_sum_defect(const PsiPackage& pkg) {
    double worst = 0.0;
    for (std::size_t k = 0; k < kDimension; ++k) {
        const ScalarField vp = v_field(pkg, k, 1), vm = v_field(pkg, k, -1);
        for (std::size_t n = 0; n < vp.grid().size(); ++n) {
            const double s = norm_sq(pkg.psi.at(n));
            const double scale = pkg.gamma_star * std::abs(pkg.psi.component(k)[n]) + s;
            if (scale > 0.0) worst = std::max(worst, std::abs(vp[n] + vm[n] - 2.0 * s) / scale);
            else if (vp[n] + vm[n] != 0.0) return std::numeric_limits<double>::infinity();
        }
    }
    return worst;
}

inline double antisymmetric_p_bracket(const std::array<Sym2, 2>& dp) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t l = 0; l < 2; ++l) {
                const double d = dp[l](i, j) - dp[j](i, l);
                s += d * d;
            }
    return s;
}

inline double chi(const EquationSpec& spec, const ScalarField& u, const VectorField& du) {
    const Grid2D& g = u.grid();
    double out = 1.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Point2 x = g.node(n), p = du.at(n);
        const double lam = spec.A(x, u[n], p).lambda_min();
        if (!(lam > 0.0)) throw StructureError(fmt::format("chi: lambda = {:.6g} <= 0 at node {}", lam, n));
        out = std::max(out, 1.0 + antisymmetric_p_bracket(coefficient_dp(spec, x, u[n], p)) / (lam * lam));
    }
    return out;
}

inline double chi(const EquationSpec& spec, const ScalarField& u) { return chi(spec, u, gradient(u)); }

struct DivergenceData {
    Grid2D grid;
    std::size_t k = 0;
    double gamma = 0.0;  // signed weight: v = gamma D_k u + |Du|^2
    double chi = 1.0;
    ScalarField v;
    ScalarField log_weight;           // 2 chi v
    std::array<ScalarField, 3> A;     // xx, xy, yy of A(x, u, Du)
    std::array<ScalarField, 2> f_unweighted;  // f^i e^{-2 chi v} = -ft^i
    ScalarField g_unweighted;                  // g e^{-2 chi v}
    double sigma_star = 1.0;  // max Lambda / lambda of a
    double nu = 0.0;          // max (sum |f^i| + |g|) / lambda of a

    Sym2 A_at(std::size_t n) const noexcept { return {A[0][n], A[1][n], A[2][n]}; }
    double weight(std::size_t n) const noexcept { return std::exp(log_weight[n]); }
    Sym2 a(std::size_t n) const noexcept { return A_at(n) * weight(n); }
    Point2 f(std::size_t n) const noexcept {
        return {f_unweighted[0][n] * weight(n), f_unweighted[1][n] * weight(n)};
    }
    double g(std::size_t n) const noexcept { return g_unweighted[n] * weight(n); }
};

/// Coefficients for v = sign gamma D_k u + |Du|^2 (k is 0-based).
inline DivergenceData divergence_data(const EquationSpec& spec, const ScalarField& u, std::size_t k, double gamma,
                                      int sign) {
    detail::check_axis(k);
    detail::check_sign(sign);
    const Grid2D& grid = u.grid();
    const VectorField du = gradient(u);
    const double gam = sign * gamma;
    const double ch = chi(spec, u, du);

    DivergenceData d{grid,
                     k,
                     gam,
                     ch,
                     v_field(du, k, 1, gam),
                     ScalarField(grid),
                     {ScalarField(grid), ScalarField(grid), ScalarField(grid)},
                     {ScalarField(grid), ScalarField(grid)},
                     ScalarField(grid)};

    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Point2 x = grid.node(n), p = du.at(n);
        const double z = u[n];
        const Sym2 A = spec.A(x, z, p);
        const auto [lam, Lam] = A.eigenvalues();
        if (!(lam > 0.0)) throw StructureError(fmt::format("divergence_data: lambda = {:.6g} <= 0 at node {}", lam, n));
        const double B = spec.B(x, z, p);
        const auto dx = coefficient_dx(spec, x, z, p);
        const Sym2 dz = coefficient_dz(spec, x, z, p);
        const std::array<Sym2, 2> delta{dx[0] + dz * p[0], dx[1] + dz * p[1]};

        std::array<double, 2> coef{};  // 2 D_l u + gamma d^{lk}
        for (std::size_t l = 0; l < 2; ++l) coef[l] = 2.0 * p[l] + (l == k ? gam : 0.0);

        double ft_sq = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const double ft = coef[i] * B;
            d.f_unweighted[i][n] = -ft;
            ft_sq += ft * ft;
        }
        double bm_sq = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                double bm = -2.0 * (i == j ? 1.0 : 0.0) * B;
                for (std::size_t l = 0; l < 2; ++l) bm += coef[l] * delta[l](i, j);
                bm_sq += bm * bm;
            }
        double gt_sq = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
            double gt = 0.0;
            for (std::size_t i = 0; i < 2; ++i) gt += delta[i](i, j);
            gt_sq += gt * gt;
        }
        d.g_unweighted[n] = -(ch * ft_sq + bm_sq + gt_sq) / lam;
        d.log_weight[n] = 2.0 * ch * d.v[n];
        d.A[0][n] = A.xx;
        d.A[1][n] = A.xy;
        d.A[2][n] = A.yy;
        d.sigma_star = std::max(d.sigma_star, Lam / lam);
        const double lower = std::abs(d.f_unweighted[0][n]) + std::abs(d.f_unweighted[1][n]) + std::abs(d.g_unweighted[n]);
        d.nu = std::max(d.nu, lower / lam);
    }
    return d;
}

struct WeakCheckResult {
    double max_violation = -std::numeric_limits<double>::infinity();
    bool pass = false;
    std::size_t worst_node = 0;
    ScalarField violation;  // normalised per tested node, 0 elsewhere

    /// Positive part of the worst value; 0 when the inequality holds everywhere.
    double excess() const noexcept { return std::max(0.0, max_violation); }
};

/// Tests the weak inequality at every interior node against the nonnegative
/// test function phi = e^{-2 chi (v - v_node)} hat_node. The exponential
/// factors of a, f, g and phi cancel, leaving
///
///     int gu hat - int fu . (D hat - 2 chi hat Dv) + int A Dv . (D hat - 2 chi hat Dv) <= tol
///
/// (gu, fu: unweighted g, f), which is smooth at any grid resolution. The
/// plain hat would need h |2 chi Dv| << 1 to resolve e^{2 chi v}. Integrals
/// use bilinear interpolation and 2x2 Gauss points on the four adjacent
/// cells; each node's value is divided by int hat = hx hy.
///
/// Only nodes whose hat support avoids the boundary nodes are tested: there
/// psi comes from one-sided stencils whose O(h^2) error differs from the
/// interior one, and the weak second derivative turns that mismatch into an
/// O(1) defect.
inline WeakCheckResult weak_subsolution_check(const DivergenceData& data, const ScalarField& v, double tol) {
    if (!(v.grid() == data.grid)) throw InputError("weak_subsolution_check: v and coefficients on different grids");
    const Grid2D& g = data.grid;
    const double hx = g.hx(), hy = g.hy();
    const double two_chi = 2.0 * data.chi;
    const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    if (g.nx() < 5 || g.ny() < 5) throw InputError("weak_subsolution_check: need at least 5 nodes per axis");

    WeakCheckResult out{-std::numeric_limits<double>::infinity(), false, 0, ScalarField(g)};
    for (std::size_t j = 2; j + 2 < g.ny(); ++j)
        for (std::size_t i = 2; i + 2 < g.nx(); ++i) {
            double acc = 0.0;
            for (std::size_t cj = j - 1; cj <= j; ++cj)
                for (std::size_t ci = i - 1; ci <= i; ++ci) {
                    // corner (a, b) of the cell is node (ci + a, cj + b)
                    std::size_t corner[2][2];
                    for (std::size_t a = 0; a < 2; ++a)
                        for (std::size_t b = 0; b < 2; ++b) corner[a][b] = g.index(ci + a, cj + b);
                    const std::size_t sa = i - ci, sb = j - cj;  // the tested node's corner
                    for (double xi : gp)
                        for (double eta : gp) {
                            const double wx[2] = {1.0 - xi, xi}, wy[2] = {1.0 - eta, eta};
                            const double dwx[2] = {-1.0 / hx, 1.0 / hx}, dwy[2] = {-1.0 / hy, 1.0 / hy};
                            auto interp = [&](const ScalarField& f) {
                                double s = 0.0;
                                for (std::size_t a = 0; a < 2; ++a)
                                    for (std::size_t b = 0; b < 2; ++b) s += wx[a] * wy[b] * f[corner[a][b]];
                                return s;
                            };
                            Point2 dv{0.0, 0.0};
                            for (std::size_t a = 0; a < 2; ++a)
                                for (std::size_t b = 0; b < 2; ++b) {
                                    dv[0] += dwx[a] * wy[b] * v[corner[a][b]];
                                    dv[1] += wx[a] * dwy[b] * v[corner[a][b]];
                                }
                            const double hat = wx[sa] * wy[sb];
                            const Point2 dphi{dwx[sa] * wy[sb] - two_chi * hat * dv[0],
                                              wx[sa] * dwy[sb] - two_chi * hat * dv[1]};
                            const Sym2 A{interp(data.A[0]), interp(data.A[1]), interp(data.A[2])};
                            const Point2 adv{A.xx * dv[0] + A.xy * dv[1], A.xy * dv[0] + A.yy * dv[1]};
                            const Point2 fu{interp(data.f_unweighted[0]), interp(data.f_unweighted[1])};
                            acc += 0.25 * (interp(data.g_unweighted) * hat - dot(fu, dphi) + dot(adv, dphi));
                        }
                }
            out.violation(i, j) = acc;
            if (acc > out.max_violation) {
                out.max_violation = acc;
                out.worst_node = g.index(i, j);
            }
        }
    out.pass = out.max_violation <= tol;
    return out;
}

/// Per-field debug dump: x, y, v, 2 chi v, A, unweighted f and g.
inline void write_divergence_csv(std::ostream& os, const DivergenceData& d) {
    os << "x,y,v,log_weight,A11,A12,A22,f1_unweighted,f2_unweighted,g_unweighted\n";
    for (std::size_t n = 0; n < d.grid.size(); ++n) {
        const Point2 x = d.grid.node(n);
        os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", x[0],
                          x[1], d.v[n], d.log_weight[n], d.A[0][n], d.A[1][n], d.A[2][n], d.f_unweighted[0][n],
                          d.f_unweighted[1][n], d.g_unweighted[n]);
    }
}

}  // namespace holderlab
