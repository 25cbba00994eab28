#pragma once

#include <array>
#include <vector>

#include "memflow/field.hpp"
#include "memflow/linear.hpp"

namespace memflow {

/// Boundary closure for the pressure(-correction) Poisson solve.
/// Dirichlet uses `value`, or a per-face `profile` when non-empty.
struct PoissonBc {
    enum class Kind { NeumannZero, Dirichlet };
    Kind kind = Kind::NeumannZero;
    double value = 0.0;
    std::vector<double> profile;

    static PoissonBc neumann() { return {}; }
    static PoissonBc dirichlet(double v) { return {Kind::Dirichlet, v, {}}; }
    static PoissonBc dirichlet(std::vector<double> prof) {
        return {Kind::Dirichlet, 0.0, std::move(prof)};
    }
    double at(int idx) const { return profile.empty() ? value : profile[idx]; }
};

using PoissonBcs = std::array<PoissonBc, 4>;  // indexed by Side: Left, Right, Bottom, Top

/// Finite-volume solve of div(coeff * grad p) = rhs with a five-point stencil,
/// two-point face gradients and half-cell Dirichlet closures. The assembled
/// system is SPD and solved with preconditioned conjugate gradients; the
/// stopping residual is max(atol, rtol * |b|_2) in the 2-norm of the
/// flux-imbalance rows, so atol directly bounds per-cell imbalance.
///
/// Used both for the projection pressure correction (coeff = dt / (rho * c0),
/// rhs = divergence of the provisional flux) and standalone.
inline std::pair<ScalarField, SolveInfo> poisson_solve(const Grid& g, double coeff,
                                                       const ScalarField& rhs,
                                                       const PoissonBcs& bcs, double rtol,
                                                       double atol, int max_iter,
                                                       const ScalarField* guess = nullptr) {
    bool any_dirichlet = false;
    for (const auto& bc : bcs)
        if (bc.kind == PoissonBc::Kind::Dirichlet) any_dirichlet = true;
    if (!any_dirichlet)
        throw std::invalid_argument("poisson_solve: at least one fixed-value side required");

    const int n = g.cells();
    const double cx = coeff * g.area_x() / g.dx;  // interior x-face conductance
    const double cy = coeff * g.area_y() / g.dy;
    const double vol = g.volume();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * 5);
    Vec b = Vec::Zero(n);

    auto bc_of = [&](Side s) -> const PoissonBc& { return bcs[static_cast<int>(s)]; };

    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int c = g.cell(i, j);
            double diag = 0.0;
            b[c] = -rhs(i, j) * vol;
            if (i > 0) {
                trip.emplace_back(c, g.cell(i - 1, j), -cx);
                diag += cx;
            } else if (bc_of(Side::Left).kind == PoissonBc::Kind::Dirichlet) {
                diag += 2.0 * cx;
                b[c] += 2.0 * cx * bc_of(Side::Left).at(j);
            }
            if (i < g.nx - 1) {
                trip.emplace_back(c, g.cell(i + 1, j), -cx);
                diag += cx;
            } else if (bc_of(Side::Right).kind == PoissonBc::Kind::Dirichlet) {
                diag += 2.0 * cx;
                b[c] += 2.0 * cx * bc_of(Side::Right).at(j);
            }
            if (j > 0) {
                trip.emplace_back(c, g.cell(i, j - 1), -cy);
                diag += cy;
            } else if (bc_of(Side::Bottom).kind == PoissonBc::Kind::Dirichlet) {
                diag += 2.0 * cy;
                b[c] += 2.0 * cy * bc_of(Side::Bottom).at(i);
            }
            if (j < g.ny - 1) {
                trip.emplace_back(c, g.cell(i, j + 1), -cy);
                diag += cy;
            } else if (bc_of(Side::Top).kind == PoissonBc::Kind::Dirichlet) {
                diag += 2.0 * cy;
                b[c] += 2.0 * cy * bc_of(Side::Top).at(i);
            }
            trip.emplace_back(c, c, diag);
        }
    }

    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());

    const double bnorm = b.norm();
    const double tol_eff = std::max(rtol, (bnorm > 0.0 ? atol / bnorm : rtol));

    Vec x;
    Vec g0;
    const Vec* gp = nullptr;
    if (guess) {
        g0 = Vec::Zero(n);
        for (int c = 0; c < n; ++c) g0[c] = guess->cell[c];
        gp = &g0;
    }
    SolveInfo info = solve_cg(A, b, x, tol_eff, max_iter, gp);
    if (!info.converged)
        throw SolverError("poisson_solve: conjugate gradients did not reach tolerance",
                          info.residual, info.iterations);

    ScalarField p(g, 0.0);
    for (int c = 0; c < n; ++c) p.cell[c] = x[c];
    auto close = [&](Side s) {
        const auto& bc = bc_of(s);
        if (bc.kind == PoissonBc::Kind::Dirichlet) {
            switch (s) {
                case Side::Left:
                    for (int j = 0; j < g.ny; ++j) p.bnd_left[j] = bc.at(j);
                    break;
                case Side::Right:
                    for (int j = 0; j < g.ny; ++j) p.bnd_right[j] = bc.at(j);
                    break;
                case Side::Bottom:
                    for (int i = 0; i < g.nx; ++i) p.bnd_bottom[i] = bc.at(i);
                    break;
                case Side::Top:
                    for (int i = 0; i < g.nx; ++i) p.bnd_top[i] = bc.at(i);
                    break;
            }
        } else {
            p.copy_to_boundary(s);
        }
    };
    close(Side::Left);
    close(Side::Right);
    close(Side::Bottom);
    close(Side::Top);
    return {std::move(p), info};
}

} // namespace memflow
