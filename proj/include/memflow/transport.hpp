#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "memflow/field.hpp"
#include "memflow/flow.hpp"
#include "memflow/linear.hpp"
#include "memflow/operators.hpp"

namespace memflow {

struct SpeciesSpec {
    std::string name;
    double D = 0.0;      ///< diffusivity [m^2/s]
    bool solid = false;  ///< solids precipitate at the membrane, no bulk transport
};

/// Species boundary closure for one side.
/// Dirichlet: fixed per-face values (inlet, or a prescribed wall value).
/// ZeroGradient: advective outflow only (outlet, impermeable walls).
/// MembraneFlux: total face out-flux density alpha * phi_P + beta, supplied
/// per face and species by the membrane closure solve.
enum class TransportBcKind { Dirichlet, ZeroGradient, MembraneFlux };

struct TransportControls {
    double lin_tol = 1e-10;
    int lin_max_iter = 20000;
    bool clamp_negative = true;
};

/// Per-species accounting of one implicit transport step. All flux terms are
/// evaluated at the solved end-of-step field, so the discrete identity
///   sum_c V (c0 phi^{n+1} - c1 phi^n + c2 phi^{n-1}) / dt
///     + outflow + membrane_outflow - inflow = 0
/// holds to the linear-solver residual; `discrete_residual` reports the
/// left-hand side. `clamped` is mass added afterwards by the negativity clamp
/// and is excluded from the identity.
struct SpeciesBalance {
    double inflow = 0.0;             ///< [mol/s] through Dirichlet sides, net in
    double outflow = 0.0;            ///< [mol/s] through zero-gradient sides
    double membrane_outflow = 0.0;   ///< [mol/s] through membrane-closure sides
    double content = 0.0;            ///< [mol] at end of step, before clamping
    double discrete_residual = 0.0;  ///< [mol/s]
    double clamped = 0.0;            ///< [mol]
    SolveInfo lin;
};

/// Implicit finite-volume transport of several dilute species sharing one
/// advecting flux field. Advection is an implicit first-order upwind matrix
/// plus an explicit deferred limited correction; diffusion is central.
/// Solid-flagged species are carried for bookkeeping but never solved; their
/// fields stay at the initial value.
class TransportSolver {
public:
    TransportSolver(const Grid& g, std::vector<SpeciesSpec> specs,
                    const TransportControls& ctl = {})
        : g_(g), specs_(std::move(specs)), ctl_(ctl) {
        const int ns = n_species();
        cur_.reserve(ns);
        for (int s = 0; s < ns; ++s) cur_.emplace_back(g_, 0.0);
        prev_ = cur_;
        prev2_ = cur_;
        bal_.resize(ns);
        // Channel defaults; tests and the column configuration override.
        kind_[side(Side::Left)] = TransportBcKind::Dirichlet;
        kind_[side(Side::Right)] = TransportBcKind::ZeroGradient;
        kind_[side(Side::Bottom)] = TransportBcKind::MembraneFlux;
        kind_[side(Side::Top)] = TransportBcKind::ZeroGradient;
        for (int s = 0; s < ns; ++s) {
            dir_[side(Side::Left)].push_back(std::vector<double>(g_.ny, 0.0));
            dir_[side(Side::Right)].push_back(std::vector<double>(g_.ny, 0.0));
            dir_[side(Side::Bottom)].push_back(std::vector<double>(g_.nx, 0.0));
            dir_[side(Side::Top)].push_back(std::vector<double>(g_.nx, 0.0));
            alpha_.push_back(std::vector<double>(g_.nx, 0.0));
            beta_.push_back(std::vector<double>(g_.nx, 0.0));
        }
    }

    int n_species() const { return static_cast<int>(specs_.size()); }
    const SpeciesSpec& species(int s) const { return specs_[s]; }
    const Grid& grid() const { return g_; }

    ScalarField& field(int s) { return cur_[s]; }
    const ScalarField& field(int s) const { return cur_[s]; }
    const ScalarField& previous(int s) const { return prev_[s]; }
    const SpeciesBalance& balance(int s) const { return bal_[s]; }

    void set_uniform(int s, double value) {
        cur_[s].fill(value);
        prev_[s] = cur_[s];
        prev2_[s] = cur_[s];
    }

    void set_bc(Side sd, TransportBcKind kind) { kind_[side(sd)] = kind; }
    TransportBcKind bc(Side sd) const { return kind_[side(sd)]; }

    void set_dirichlet_values(Side sd, int s, std::vector<double> values) {
        dir_[side(sd)][s] = std::move(values);
    }

    /// Membrane out-flux closure per bottom face: out density = alpha*phi_P + beta.
    void set_membrane_closure(int s, std::vector<double> alpha, std::vector<double> beta) {
        alpha_[s] = std::move(alpha);
        beta_[s] = std::move(beta);
    }

    /// Rotate time levels; call once per time step before the solve.
    void begin_step() {
        prev2_ = prev_;
        prev_ = cur_;
    }

    /// One implicit step of every dissolved species against the given flux.
    void step(double dt, const TimeScheme& ts, const FaceField& flux) {
        for (int s = 0; s < n_species(); ++s) {
            if (specs_[s].solid) {
                bal_[s] = SpeciesBalance{};
                bal_[s].content = total_content(s);
                continue;
            }
            solve_species(s, dt, ts, flux);
        }
    }

    double total_content(int s) const {
        double m = 0.0;
        for (double x : cur_[s].cell) m += x;
        return m * g_.volume();
    }

    double min_value(int s) const {
        return *std::min_element(cur_[s].cell.begin(), cur_[s].cell.end());
    }
    double max_value(int s) const {
        return *std::max_element(cur_[s].cell.begin(), cur_[s].cell.end());
    }

    /// Fill boundary-face arrays from the closures (membrane side is owned by
    /// the caller, which knows the solved face concentrations).
    void apply_bcs() {
        for (int s = 0; s < n_species(); ++s) {
            auto one = [&](Side sd) {
                switch (kind_[side(sd)]) {
                    case TransportBcKind::Dirichlet:
                        boundary_array(cur_[s], sd) = dir_[side(sd)][s];
                        break;
                    case TransportBcKind::ZeroGradient:
                        cur_[s].copy_to_boundary(sd);
                        break;
                    case TransportBcKind::MembraneFlux:
                        break;
                }
            };
            one(Side::Left);
            one(Side::Right);
            one(Side::Bottom);
            one(Side::Top);
        }
    }

    void set_boundary_values(Side sd, int s, const std::vector<double>& values) {
        boundary_array(cur_[s], sd) = values;
    }

private:
    static int side(Side s) { return static_cast<int>(s); }

    static std::vector<double>& boundary_array(ScalarField& f, Side sd) {
        switch (sd) {
            case Side::Left: return f.bnd_left;
            case Side::Right: return f.bnd_right;
            case Side::Bottom: return f.bnd_bottom;
            default: return f.bnd_top;
        }
    }

    void solve_species(int s, double dt, const TimeScheme& ts, const FaceField& F) {
        const int n = g_.cells();
        const double vol = g_.volume();
        const double ax = g_.area_x(), ay = g_.area_y();
        const double D = specs_[s].D;
        const double dif_x = D * ax / g_.dx, dif_y = D * ay / g_.dy;
        const ScalarField& q = cur_[s];

        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(n) * 5);
        Vec b = Vec::Zero(n);
        std::vector<double> diag(n, vol * ts.c0 / dt);
        for (int c = 0; c < n; ++c)
            b[c] = vol * (ts.c1 * prev_[s].cell[c] - ts.c2 * prev2_[s].cell[c]) / dt;

        // Interior x-faces.
        for (int j = 0; j < g_.ny; ++j) {
            for (int i = 1; i < g_.nx; ++i) {
                const int w = g_.cell(i - 1, j), e = g_.cell(i, j);
                const double f = F.x(i, j);
                if (f >= 0.0) {
                    diag[w] += f;
                    trip.emplace_back(e, w, -f);
                } else {
                    trip.emplace_back(w, e, f);
                    diag[e] += -f;
                }
                trip.emplace_back(w, e, -dif_x);
                trip.emplace_back(e, w, -dif_x);
                diag[w] += dif_x;
                diag[e] += dif_x;

                double up, down, far;
                bool have = false;
                if (f >= 0.0 && i >= 2) {
                    up = q(i - 1, j); down = q(i, j); far = q(i - 2, j); have = true;
                } else if (f < 0.0 && i <= g_.nx - 2) {
                    up = q(i, j); down = q(i - 1, j); far = q(i + 1, j); have = true;
                }
                if (have) {
                    const double corr = f * (tvd_face_value(up, down, far) - up);
                    b[w] -= corr;
                    b[e] += corr;
                }
            }
        }
        // Interior y-faces.
        for (int j = 1; j < g_.ny; ++j) {
            for (int i = 0; i < g_.nx; ++i) {
                const int so = g_.cell(i, j - 1), no = g_.cell(i, j);
                const double f = F.y(i, j);
                if (f >= 0.0) {
                    diag[so] += f;
                    trip.emplace_back(no, so, -f);
                } else {
                    trip.emplace_back(so, no, f);
                    diag[no] += -f;
                }
                trip.emplace_back(so, no, -dif_y);
                trip.emplace_back(no, so, -dif_y);
                diag[so] += dif_y;
                diag[no] += dif_y;

                double up, down, far;
                bool have = false;
                if (f >= 0.0 && j >= 2) {
                    up = q(i, j - 1); down = q(i, j); far = q(i, j - 2); have = true;
                } else if (f < 0.0 && j <= g_.ny - 2) {
                    up = q(i, j); down = q(i, j - 1); far = q(i, j + 1); have = true;
                }
                if (have) {
                    const double corr = f * (tvd_face_value(up, down, far) - up);
                    b[so] -= corr;
                    b[no] += corr;
                }
            }
        }

        // Boundary faces. f_out is the directed flux times the outward sign.
        auto boundary = [&](Side sd, int idx, int c, double f_dir, double sgn, double dif,
                            double area) {
            const double f_out = sgn * f_dir;
            switch (kind_[side(sd)]) {
                case TransportBcKind::Dirichlet: {
                    const double qb = dir_[side(sd)][s][idx];
                    b[c] += -f_out * qb + 2.0 * dif * qb;
                    diag[c] += 2.0 * dif;
                    break;
                }
                case TransportBcKind::ZeroGradient:
                    diag[c] += f_out;
                    break;
                case TransportBcKind::MembraneFlux:
                    diag[c] += area * alpha_[s][idx];
                    b[c] -= area * beta_[s][idx];
                    break;
            }
        };
        for (int j = 0; j < g_.ny; ++j) {
            boundary(Side::Left, j, g_.cell(0, j), F.x(0, j), -1.0, dif_x, ax);
            boundary(Side::Right, j, g_.cell(g_.nx - 1, j), F.x(g_.nx, j), 1.0, dif_x, ax);
        }
        for (int i = 0; i < g_.nx; ++i) {
            boundary(Side::Bottom, i, g_.cell(i, 0), F.y(i, 0), -1.0, dif_y, ay);
            boundary(Side::Top, i, g_.cell(i, g_.ny - 1), F.y(i, g_.ny), 1.0, dif_y, ay);
        }

        for (int c = 0; c < n; ++c) trip.emplace_back(c, c, diag[c]);
        SpMat A(n, n);
        A.setFromTriplets(trip.begin(), trip.end());

        Vec x;
        Vec guess = Vec::Zero(n);
        for (int c = 0; c < n; ++c) guess[c] = q.cell[c];
        SpeciesBalance& rb = bal_[s];
        rb = SpeciesBalance{};
        rb.lin = solve_bicgstab(A, b, x, ctl_.lin_tol, ctl_.lin_max_iter, &guess);
        if (!rb.lin.converged)
            throw SolverError("species transport solve did not converge: " + specs_[s].name,
                              rb.lin.residual, rb.lin.iterations);
        for (int c = 0; c < n; ++c) cur_[s].cell[c] = x[c];

        account(s, dt, ts, F);
        if (ctl_.clamp_negative) {
            for (double& v : cur_[s].cell) {
                if (v < 0.0) {
                    rb.clamped += -v * vol;
                    v = 0.0;
                }
            }
        }
        apply_bcs();
    }

    /// Boundary bookkeeping at the solved field; see SpeciesBalance.
    void account(int s, double dt, const TimeScheme& ts, const FaceField& F) {
        const double vol = g_.volume();
        const double ax = g_.area_x(), ay = g_.area_y();
        const double D = specs_[s].D;
        const double dif_x = D * ax / g_.dx, dif_y = D * ay / g_.dy;
        const ScalarField& q = cur_[s];
        SpeciesBalance& rb = bal_[s];

        auto boundary = [&](Side sd, int idx, int c, double f_dir, double sgn, double dif,
                            double area) {
            const double f_out = sgn * f_dir;
            switch (kind_[side(sd)]) {
                case TransportBcKind::Dirichlet: {
                    const double qb = dir_[side(sd)][s][idx];
                    rb.inflow += -(f_out * qb + 2.0 * dif * (q.cell[c] - qb));
                    break;
                }
                case TransportBcKind::ZeroGradient:
                    rb.outflow += f_out * q.cell[c];
                    break;
                case TransportBcKind::MembraneFlux:
                    rb.membrane_outflow += area * (alpha_[s][idx] * q.cell[c] + beta_[s][idx]);
                    break;
            }
        };
        for (int j = 0; j < g_.ny; ++j) {
            boundary(Side::Left, j, g_.cell(0, j), F.x(0, j), -1.0, dif_x, ax);
            boundary(Side::Right, j, g_.cell(g_.nx - 1, j), F.x(g_.nx, j), 1.0, dif_x, ax);
        }
        for (int i = 0; i < g_.nx; ++i) {
            boundary(Side::Bottom, i, g_.cell(i, 0), F.y(i, 0), -1.0, dif_y, ay);
            boundary(Side::Top, i, g_.cell(i, g_.ny - 1), F.y(i, g_.ny), 1.0, dif_y, ay);
        }

        rb.content = total_content(s);
        double dmass = 0.0;
        for (int c = 0; c < g_.cells(); ++c)
            dmass += ts.c0 * cur_[s].cell[c] - ts.c1 * prev_[s].cell[c] +
                     ts.c2 * prev2_[s].cell[c];
        dmass *= vol / dt;
        rb.discrete_residual = dmass + rb.outflow + rb.membrane_outflow - rb.inflow;
    }

    Grid g_;
    std::vector<SpeciesSpec> specs_;
    TransportControls ctl_;
    std::vector<ScalarField> cur_, prev_, prev2_;
    std::array<TransportBcKind, 4> kind_{};
    std::array<std::vector<std::vector<double>>, 4> dir_;  ///< [side][species][face]
    std::vector<std::vector<double>> alpha_, beta_;        ///< [species][bottom face]
    std::vector<SpeciesBalance> bal_;
};

} // namespace memflow
