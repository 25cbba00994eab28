#pragma once

#include <cmath>

#include "memflow/field.hpp"

namespace memflow {

/// Per-cell sum of outward face fluxes divided by cell volume.
/// With flux in [m^3/s] the result is [1/s]. Boundary arrays of the result
/// are left at zero; only cell values are meaningful.
inline ScalarField divergence(const Grid& g, const FaceField& flux) {
    ScalarField out(g, 0.0);
    const double inv_vol = 1.0 / g.volume();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = (flux.x(i + 1, j) - flux.x(i, j) +
                         flux.y(i, j + 1) - flux.y(i, j)) * inv_vol;
    return out;
}

/// Green-Gauss cell gradient. Interior face values are arithmetic means of
/// the adjacent cells; boundary faces use the stored boundary values, so the
/// caller's closure determines behaviour there. Exact for linear fields.
inline CellVectorField gradient(const Grid& g, const ScalarField& phi) {
    CellVectorField grad(g);
    const double ax = g.area_x(), ay = g.area_y();
    const double inv_vol = 1.0 / g.volume();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double pc = phi(i, j);
            const double pw = (i > 0) ? 0.5 * (pc + phi(i - 1, j)) : phi.bnd_left[j];
            const double pe = (i < g.nx - 1) ? 0.5 * (pc + phi(i + 1, j)) : phi.bnd_right[j];
            const double ps = (j > 0) ? 0.5 * (pc + phi(i, j - 1)) : phi.bnd_bottom[i];
            const double pn = (j < g.ny - 1) ? 0.5 * (pc + phi(i, j + 1)) : phi.bnd_top[i];
            const int c = g.cell(i, j);
            grad.x[c] = (pe - pw) * ax * inv_vol;
            grad.y[c] = (pn - ps) * ay * inv_vol;
        }
    }
    return grad;
}

/// Five-point Laplacian with constant coefficient: sum over faces of
/// coeff * A * (dphi/dn) / V. Interior face-normal gradients are two-point
/// central; boundary faces use the stored boundary value over the half-cell
/// distance, so a zero-gradient closure (boundary value copied from the
/// cell) contributes exactly zero. Exact for quadratics in interior cells.
inline ScalarField laplacian(const Grid& g, const ScalarField& phi, double coeff = 1.0) {
    ScalarField out(g, 0.0);
    const double cx = coeff * g.area_x() / g.volume();   // per unit dx gradient
    const double cy = coeff * g.area_y() / g.volume();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double pc = phi(i, j);
            const double gw = (i > 0) ? (phi(i - 1, j) - pc) / g.dx
                                      : (phi.bnd_left[j] - pc) / (0.5 * g.dx);
            const double ge = (i < g.nx - 1) ? (phi(i + 1, j) - pc) / g.dx
                                             : (phi.bnd_right[j] - pc) / (0.5 * g.dx);
            const double gs = (j > 0) ? (phi(i, j - 1) - pc) / g.dy
                                      : (phi.bnd_bottom[i] - pc) / (0.5 * g.dy);
            const double gn = (j < g.ny - 1) ? (phi(i, j + 1) - pc) / g.dy
                                             : (phi.bnd_top[i] - pc) / (0.5 * g.dy);
            out(i, j) = (ge + gw) * cx + (gn + gs) * cy;
        }
    }
    return out;
}

/// Limited face value for advection: upwind + 0.5 * psi(r) * (downwind - upwind)
/// with the van Leer limiter psi(r) = (r + |r|) / (1 + |r|) and
/// r = (upwind - far_upwind) / (downwind - upwind). A vanishing denominator
/// (flat downwind gradient) falls back to pure upwind. The result always lies
/// within [min, max] of the three inputs.
inline double tvd_face_value(double upwind, double downwind, double far_upwind) {
    const double d = downwind - upwind;
    if (d == 0.0) return upwind;
    const double r = (upwind - far_upwind) / d;
    const double psi = (r + std::fabs(r)) / (1.0 + std::fabs(r));
    return upwind + 0.5 * psi * d;
}

} // namespace memflow
