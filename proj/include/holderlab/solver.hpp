#pragma once

// Finite-difference residual of A^{ij}(x, u, Du) D_ij u + B(x, u, Du) on the
// interior nodes of a rectangle and a damped Newton solver for the Dirichlet
// problem. The Jacobian is built column-block-wise by forward differences:
// the residual at a node reads only its 3x3 neighbourhood, so the nodes of
// one (i mod 3, j mod 3) colour class can be perturbed together.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "equation.hpp"
#include "error.hpp"
#include "field.hpp"

namespace holderlab {

struct SolverOptions {
    int max_newton_iters = 50;
    double residual_tol = 1e-8;
    double damping = 0.5;  // backtracking factor
    double linear_solver_tol = 1e-10;
    int max_backtracks = 40;
};

inline void validate(const SolverOptions& o) {
    if (o.max_newton_iters < 1) throw InputError("solver: max_newton_iters must be >= 1");
    if (!(o.residual_tol > 0.0)) throw InputError("solver: residual_tol must be positive");
    if (!(o.damping > 0.0 && o.damping < 1.0)) throw InputError("solver: damping must lie in (0, 1)");
    if (!(o.linear_solver_tol > 0.0)) throw InputError("solver: linear_solver_tol must be positive");
}

struct NodeDerivatives {
    Point2 x;
    double z;
    Point2 p;
    Sym2 hess;
};

/// Central first, second and cross differences at interior node (i, j).
inline NodeDerivatives interior_derivatives(const ScalarField& u, std::size_t i, std::size_t j) noexcept {
    const Grid2D& g = u.grid();
    const double hx = g.hx(), hy = g.hy();
    NodeDerivatives d;
    d.x = g.node(i, j);
    d.z = u(i, j);
    d.p = {(u(i + 1, j) - u(i - 1, j)) / (2.0 * hx), (u(i, j + 1) - u(i, j - 1)) / (2.0 * hy)};
    d.hess.xx = (u(i + 1, j) - 2.0 * d.z + u(i - 1, j)) / (hx * hx);
    d.hess.yy = (u(i, j + 1) - 2.0 * d.z + u(i, j - 1)) / (hy * hy);
    d.hess.xy = (u(i + 1, j + 1) - u(i + 1, j - 1) - u(i - 1, j + 1) + u(i - 1, j - 1)) / (4.0 * hx * hy);
    return d;
}

inline double node_residual(const EquationSpec& spec, const ScalarField& u, std::size_t i, std::size_t j) {
    const NodeDerivatives d = interior_derivatives(u, i, j);
    const Sym2 a = checked_coefficient(spec, d.x, d.z, d.p, fmt::format("node ({}, {})", i, j));
    return a.contract(d.hess) + spec.B(d.x, d.z, d.p);
}

/// A^{ij} D_ij u + B at interior nodes, 0 on the boundary.
inline ScalarField residual(const EquationSpec& spec, const ScalarField& u) {
    const Grid2D& g = u.grid();
    ScalarField r(g);
    for (std::size_t j = 1; j + 1 < g.ny(); ++j)
        for (std::size_t i = 1; i + 1 < g.nx(); ++i) r(i, j) = node_residual(spec, u, i, j);
    return r;
}

using BoundaryData = std::function<double(const Point2&)>;

struct SolveResult {
    ScalarField u;
    int iterations = 0;
    std::vector<double> residual_history;  // max-norm residual per accepted iterate

    double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

namespace detail {

class InteriorNumbering {
public:
    explicit InteriorNumbering(const Grid2D& g) : g_(g) {}
    std::size_t count() const noexcept { return (g_.nx() - 2) * (g_.ny() - 2); }
    std::size_t operator()(std::size_t i, std::size_t j) const noexcept { return (j - 1) * (g_.nx() - 2) + (i - 1); }

private:
    Grid2D g_;
};

inline Eigen::SparseMatrix<double> fd_jacobian(const EquationSpec& spec, const ScalarField& u, const ScalarField& r0) {
    const Grid2D& g = u.grid();
    const InteriorNumbering num(g);
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(num.count() * 9);
    ScalarField up = u;
    for (std::size_t ci = 0; ci < 3; ++ci)
        for (std::size_t cj = 0; cj < 3; ++cj) {
            std::vector<std::pair<std::size_t, double>> perturbed;  // grid index, step
            for (std::size_t j = 1 + cj; j + 1 < g.ny(); j += 3)
                for (std::size_t i = 1 + ci; i + 1 < g.nx(); i += 3) {
                    const double step = sqrt_eps * std::max(1.0, std::abs(u(i, j)));
                    up(i, j) = u(i, j) + step;
                    perturbed.emplace_back(g.index(i, j), step);
                }
            for (auto [idx, step] : perturbed) {
                const std::size_t i = g.ix(idx), j = g.jy(idx);
                for (std::size_t jj = j - 1; jj <= j + 1; ++jj)
                    for (std::size_t ii = i - 1; ii <= i + 1; ++ii) {
                        if (g.is_boundary(ii, jj)) continue;
                        const double rp = node_residual(spec, up, ii, jj);
                        const double entry = (rp - r0(ii, jj)) / step;
                        if (entry != 0.0) trips.emplace_back(num(ii, jj), num(i, j), entry);
                    }
            }
            for (auto [idx, step] : perturbed) up[idx] = u[idx];
        }
    Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(num.count()), static_cast<Eigen::Index>(num.count()));
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

}  // namespace detail

/// Damped Newton from an initial iterate whose boundary values are kept.
inline SolveResult newton_iterate(const EquationSpec& spec, ScalarField u, const SolverOptions& opts) {
    validate(opts);
    const Grid2D& g = u.grid();
    const detail::InteriorNumbering num(g);
    SolveResult out{u, 0, {}};

    ScalarField r = residual(spec, u);
    double rnorm = r.max_abs();
    out.residual_history.push_back(rnorm);
    for (int it = 0; it < opts.max_newton_iters; ++it) {
        if (rnorm <= opts.residual_tol) {
            out.u = std::move(u);
            out.iterations = it;
            return out;
        }
        const Eigen::SparseMatrix<double> J = detail::fd_jacobian(spec, u, r);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(num.count()));
        for (std::size_t j = 1; j + 1 < g.ny(); ++j)
            for (std::size_t i = 1; i + 1 < g.nx(); ++i) rhs[static_cast<Eigen::Index>(num(i, j))] = -r(i, j);

        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success)
            throw ConvergenceError(fmt::format("newton: singular Jacobian at iteration {}", it), rnorm, it);
        const Eigen::VectorXd step = lu.solve(rhs);
        const double lin_res = (J * step - rhs).lpNorm<Eigen::Infinity>();
        if (!(lin_res <= opts.linear_solver_tol * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())))
            throw ConvergenceError(fmt::format("newton: linear solve residual {:.3e} at iteration {}", lin_res, it),
                                   rnorm, it);

        double t = 1.0;
        bool accepted = false;
        for (int b = 0; b <= opts.max_backtracks; ++b, t *= opts.damping) {
            ScalarField trial = u;
            for (std::size_t j = 1; j + 1 < g.ny(); ++j)
                for (std::size_t i = 1; i + 1 < g.nx(); ++i) trial(i, j) += t * step[static_cast<Eigen::Index>(num(i, j))];
            ScalarField rt = residual(spec, trial);
            const double tn = rt.max_abs();
            if (tn < rnorm) {
                u = std::move(trial);
                r = std::move(rt);
                rnorm = tn;
                accepted = true;
                break;
            }
        }
        out.residual_history.push_back(rnorm);
        if (!accepted)
            throw ConvergenceError(
                fmt::format("newton: stagnated at residual {:.3e} after {} iterations (tolerance {:.3e})", rnorm, it + 1,
                            opts.residual_tol),
                rnorm, it + 1);
    }
    if (rnorm <= opts.residual_tol) {
        out.u = std::move(u);
        out.iterations = opts.max_newton_iters;
        return out;
    }
    throw ConvergenceError(fmt::format("newton: residual {:.3e} above tolerance {:.3e} after {} iterations", rnorm,
                                       opts.residual_tol, opts.max_newton_iters),
                           rnorm, opts.max_newton_iters);
}

/// Boundary nodes set from `boundary`, interior zero.
inline ScalarField boundary_field(const Grid2D& grid, const BoundaryData& boundary) {
    ScalarField u(grid);
    for (std::size_t j = 0; j < grid.ny(); ++j)
        for (std::size_t i = 0; i < grid.nx(); ++i)
            if (grid.is_boundary(i, j)) u(i, j) = boundary(grid.node(i, j));
    return u;
}

/// Discrete harmonic function with the given boundary values.
inline ScalarField harmonic_extension(const Grid2D& grid, const BoundaryData& boundary, SolverOptions opts = {}) {
    opts.residual_tol = std::max(opts.residual_tol, 1e-10);
    return newton_iterate(laplace_spec(), boundary_field(grid, boundary), opts).u;
}

/// Dirichlet problem, started from the harmonic extension of the data.
inline SolveResult newton_solve(const EquationSpec& spec, const BoundaryData& boundary, const Grid2D& grid,
                                const SolverOptions& opts = {}) {
    validate(opts);
    return newton_iterate(spec, harmonic_extension(grid, boundary, opts), opts);
}

}  // namespace holderlab
