#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "memflow/field.hpp"
#include "memflow/linear.hpp"
#include "memflow/operators.hpp"
#include "memflow/poisson.hpp"

namespace memflow {

struct FluidProperties {
    double rho = 0.0;  ///< density [kg/m^3]
    double mu = 0.0;   ///< dynamic viscosity [Pa s]
};

/// Backward time-differencing coefficients:
/// d(phi)/dt ~ (c0*phi^{n+1} - c1*phi^n + c2*phi^{n-1}) / dt.
struct TimeScheme {
    double c0 = 1.0, c1 = 1.0, c2 = 0.0;
    static TimeScheme euler() { return {1.0, 1.0, 0.0}; }
    static TimeScheme backward2() { return {1.5, 2.0, 0.5}; }
};

/// Analytic fully developed channel profile: u(y) = 6 u_av (y/h)(1 - y/h).
inline double inlet_profile(double y, double u_av, double h) {
    if (!(h > 0.0))
        throw std::invalid_argument("inlet_profile: h must be positive");
    if (y < 0.0 || y > h)
        throw std::invalid_argument("inlet_profile: y outside [0, h]");
    const double s = y / h;
    return 6.0 * u_av * s * (1.0 - s);
}

/// Velocity boundary closure for one side. Dirichlet carries per-face values
/// for both components; ZeroGradient copies the adjacent cell.
struct VelocityBc {
    enum class Kind { Dirichlet, ZeroGradient };
    Kind kind = Kind::Dirichlet;
    std::vector<double> u, v;

    static VelocityBc dirichlet(std::vector<double> u_vals, std::vector<double> v_vals) {
        return {Kind::Dirichlet, std::move(u_vals), std::move(v_vals)};
    }
    static VelocityBc zero_gradient() { return {Kind::ZeroGradient, {}, {}}; }
};

struct FlowState {
    ScalarField u, v, p;
    FaceField flux;   ///< volumetric face flux [m^3/s]

    FlowState() = default;
    explicit FlowState(const Grid& g)
        : u(g, 0.0), v(g, 0.0), p(g, 0.0), flux(g, 0.0) {}
};

struct FlowControls {
    double lin_tol = 1e-8;     ///< linear solver relative tolerance
    int lin_max_iter = 20000;
    int n_correctors = 2;      ///< pressure-correction passes per iterate
    double div_tol = 1e-8;     ///< max |div(flux)| * dx / u_ref after a step
    int corrector_cap = 8;     ///< extra passes allowed to reach div_tol
};

struct FlowDiagnostics {
    SolveInfo momentum_u, momentum_v, pressure;
    int correctors_used = 0;
    double max_norm_div = 0.0;
};

/// Incompressible channel flow on a collocated grid. Momentum is implicit
/// (upwind matrix + deferred limited-correction advection, central diffusion,
/// lagged pressure gradient); face fluxes come from momentum interpolation
/// with a compact pressure-difference replacement to keep pressure and
/// velocity coupled on the collocated arrangement; an incremental pressure
/// correction then projects the flux field to the divergence-free space.
/// One `iterate` is one pass of that sequence; an outer loop (time stepper /
/// Picard) calls it until its own convergence measure is met.
class FlowSolver {
public:
    FlowSolver(const Grid& g, const FluidProperties& props, double p_out, double u_av,
               const FlowControls& ctl = {})
        : g_(g), props_(props), p_out_(p_out),
          u_ref_(u_av > 0.0 ? u_av : 1.0), ctl_(ctl),
          cur_(g), prev_(g), prev2_(g) {
        // Channel defaults: inlet profile left, outflow right, no-slip walls,
        // membrane no-slip with prescribed normal velocity.
        std::vector<double> uin(g.ny, 0.0), vin(g.ny, 0.0);
        for (int j = 0; j < g.ny; ++j) uin[j] = inlet_profile(g.yc(j), u_av, g.H);
        bc_[side(Side::Left)] = VelocityBc::dirichlet(uin, vin);
        bc_[side(Side::Right)] = VelocityBc::zero_gradient();
        bc_[side(Side::Bottom)] =
            VelocityBc::dirichlet(std::vector<double>(g.nx, 0.0), std::vector<double>(g.nx, 0.0));
        bc_[side(Side::Top)] =
            VelocityBc::dirichlet(std::vector<double>(g.nx, 0.0), std::vector<double>(g.nx, 0.0));
        initialize_uniform(0.0);
    }

    const Grid& grid() const { return g_; }
    FlowState& state() { return cur_; }
    const FlowState& state() const { return cur_; }
    const FlowState& previous() const { return prev_; }
    const FlowDiagnostics& diagnostics() const { return diag_; }
    const VelocityBc& bc(Side s) const { return bc_[side(s)]; }

    void set_bc(Side s, VelocityBc bc) { bc_[side(s)] = std::move(bc); }

    /// Prescribe the membrane-normal velocity (y-component, negative = out).
    void set_membrane_velocity(const std::vector<double>& vm) {
        bc_[side(Side::Bottom)].v = vm;
    }

    /// Start from rest (or any uniform x-velocity) with uniform pressure p_out.
    void initialize_uniform(double u0) {
        cur_ = FlowState(g_);
        for (double& x : cur_.u.cell) x = u0;
        for (double& x : cur_.p.cell) x = p_out_;
        rebuild_consistent_flux(u0);
        apply_velocity_bcs();
        apply_pressure_bcs();
        prev_ = cur_;
        prev2_ = cur_;
    }

    /// Start from the fully developed analytic profile (skips the startup
    /// transient for benchmarks; the discrete steady state is nearby).
    void initialize_poiseuille(double u_av) {
        cur_ = FlowState(g_);
        for (int j = 0; j < g_.ny; ++j) {
            const double u = inlet_profile(g_.yc(j), u_av, g_.H);
            for (int i = 0; i < g_.nx; ++i) cur_.u(i, j) = u;
            for (int i = 0; i <= g_.nx; ++i) cur_.flux.x(i, j) = u * g_.area_x();
        }
        for (double& x : cur_.p.cell) x = p_out_;
        apply_velocity_bcs();
        apply_pressure_bcs();
        prev_ = cur_;
        prev2_ = cur_;
    }

    /// Rotate time levels; call once per time step before the iterate loop.
    void begin_step() {
        prev2_ = prev_;
        prev_ = cur_;
    }

    /// One momentum-predict / flux-interpolate / project pass.
    void iterate(double dt, const TimeScheme& ts) {
        apply_pressure_bcs();
        predict(dt, ts);
        interpolate_fluxes(dt, ts);
        project(dt, ts);
        apply_velocity_bcs();
    }

    double max_normalized_divergence() const {
        const ScalarField div = divergence(g_, cur_.flux);
        double m = 0.0;
        for (double d : div.cell) m = std::max(m, std::fabs(d));
        return m * g_.dx / u_ref_;
    }

    struct MassBalance {
        double q_in, q_out, q_membrane;  ///< [m^3/s], all positive in normal operation
    };
    MassBalance mass_balance() const {
        MassBalance mb{0.0, 0.0, 0.0};
        for (int j = 0; j < g_.ny; ++j) {
            mb.q_in += cur_.flux.x(0, j);
            mb.q_out += cur_.flux.x(g_.nx, j);
        }
        for (int i = 0; i < g_.nx; ++i) mb.q_membrane -= cur_.flux.y(i, 0);
        return mb;
    }

    /// Fill boundary-face arrays of u, v from the closures.
    void apply_velocity_bcs() {
        auto apply = [&](Side s) {
            const auto& bc = bc_[side(s)];
            if (bc.kind == VelocityBc::Kind::Dirichlet) {
                switch (s) {
                    case Side::Left:
                        cur_.u.bnd_left = bc.u;
                        cur_.v.bnd_left = bc.v;
                        break;
                    case Side::Right:
                        cur_.u.bnd_right = bc.u;
                        cur_.v.bnd_right = bc.v;
                        break;
                    case Side::Bottom:
                        cur_.u.bnd_bottom = bc.u;
                        cur_.v.bnd_bottom = bc.v;
                        break;
                    case Side::Top:
                        cur_.u.bnd_top = bc.u;
                        cur_.v.bnd_top = bc.v;
                        break;
                }
            } else {
                cur_.u.copy_to_boundary(s);
                cur_.v.copy_to_boundary(s);
            }
        };
        apply(Side::Left);
        apply(Side::Right);
        apply(Side::Bottom);
        apply(Side::Top);
    }

    void apply_pressure_bcs() {
        cur_.p.copy_to_boundary(Side::Left);
        cur_.p.copy_to_boundary(Side::Bottom);
        cur_.p.copy_to_boundary(Side::Top);
        for (int j = 0; j < g_.ny; ++j) cur_.p.bnd_right[j] = p_out_;
    }

    /// Advective CFL number of the current cell velocities for a given dt.
    double cfl(double dt) const {
        double m = 0.0;
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i)
                m = std::max(m, std::fabs(cur_.u(i, j)) / g_.dx +
                                    std::fabs(cur_.v(i, j)) / g_.dy);
        return m * dt;
    }

    /// Implicit momentum solve with the lagged pressure gradient; leaves the
    /// provisional velocity in the current state. Exposed for testing.
    void predict(double dt, const TimeScheme& ts) {
        const int n = g_.cells();
        const double vol = g_.volume();
        const double rho = props_.rho, mu = props_.mu;
        const double ax = g_.area_x(), ay = g_.area_y();
        const double dif_x = mu * ax / g_.dx, dif_y = mu * ay / g_.dy;

        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(n) * 5);
        Vec bu = Vec::Zero(n), bv = Vec::Zero(n);
        std::vector<double> diag(n, rho * vol * ts.c0 / dt);

        // Time history and pressure gradient.
        const CellVectorField gp = gradient(g_, cur_.p);
        for (int c = 0; c < n; ++c) {
            bu[c] = rho * vol * (ts.c1 * prev_.u.cell[c] - ts.c2 * prev2_.u.cell[c]) / dt -
                    vol * gp.x[c];
            bv[c] = rho * vol * (ts.c1 * prev_.v.cell[c] - ts.c2 * prev2_.v.cell[c]) / dt -
                    vol * gp.y[c];
        }

        const FaceField& F = cur_.flux;

        // Interior x-faces: implicit upwind + deferred limited correction,
        // central diffusion.
        for (int j = 0; j < g_.ny; ++j) {
            for (int i = 1; i < g_.nx; ++i) {
                const int w = g_.cell(i - 1, j), e = g_.cell(i, j);
                const double f = rho * F.x(i, j);  // mass flux through the face
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

                auto deferred = [&](const ScalarField& q, Vec& rhs) {
                    double up, down, far;
                    if (f >= 0.0) {
                        if (i < 2) return;
                        up = q(i - 1, j); down = q(i, j); far = q(i - 2, j);
                    } else {
                        if (i > g_.nx - 2) return;
                        up = q(i, j); down = q(i - 1, j); far = q(i + 1, j);
                    }
                    const double corr = f * (tvd_face_value(up, down, far) - up);
                    rhs[w] -= corr;
                    rhs[e] += corr;
                };
                deferred(cur_.u, bu);
                deferred(cur_.v, bv);
            }
        }
        // Interior y-faces.
        for (int j = 1; j < g_.ny; ++j) {
            for (int i = 0; i < g_.nx; ++i) {
                const int s = g_.cell(i, j - 1), nn = g_.cell(i, j);
                const double f = rho * F.y(i, j);
                if (f >= 0.0) {
                    diag[s] += f;
                    trip.emplace_back(nn, s, -f);
                } else {
                    trip.emplace_back(s, nn, f);
                    diag[nn] += -f;
                }
                trip.emplace_back(s, nn, -dif_y);
                trip.emplace_back(nn, s, -dif_y);
                diag[s] += dif_y;
                diag[nn] += dif_y;

                auto deferred = [&](const ScalarField& q, Vec& rhs) {
                    double up, down, far;
                    if (f >= 0.0) {
                        if (j < 2) return;
                        up = q(i, j - 1); down = q(i, j); far = q(i, j - 2);
                    } else {
                        if (j > g_.ny - 2) return;
                        up = q(i, j); down = q(i, j - 1); far = q(i, j + 1);
                    }
                    const double corr = f * (tvd_face_value(up, down, far) - up);
                    rhs[s] -= corr;
                    rhs[nn] += corr;
                };
                deferred(cur_.u, bu);
                deferred(cur_.v, bv);
            }
        }

        // Boundary faces. Outward flux through the boundary face of cell c is
        // sgn * F(face); Dirichlet closures go to the right-hand side, a
        // zero-gradient closure adds the outward flux to the diagonal.
        auto boundary = [&](Side s, int idx, int c, double f_directed, double sgn,
                            double dif, double delta) {
            const auto& bc = bc_[side(s)];
            const double f_out = sgn * f_directed;
            if (bc.kind == VelocityBc::Kind::Dirichlet) {
                bu[c] += -f_out * bc.u[idx] + 2.0 * dif * bc.u[idx];
                bv[c] += -f_out * bc.v[idx] + 2.0 * dif * bc.v[idx];
                diag[c] += 2.0 * dif;
                (void)delta;
            } else {
                diag[c] += f_out;
            }
        };
        for (int j = 0; j < g_.ny; ++j) {
            boundary(Side::Left, j, g_.cell(0, j), rho * F.x(0, j), -1.0, dif_x, g_.dx);
            boundary(Side::Right, j, g_.cell(g_.nx - 1, j), rho * F.x(g_.nx, j), 1.0, dif_x,
                     g_.dx);
        }
        for (int i = 0; i < g_.nx; ++i) {
            boundary(Side::Bottom, i, g_.cell(i, 0), rho * F.y(i, 0), -1.0, dif_y, g_.dy);
            boundary(Side::Top, i, g_.cell(i, g_.ny - 1), rho * F.y(i, g_.ny), 1.0, dif_y,
                     g_.dy);
        }

        for (int c = 0; c < n; ++c) trip.emplace_back(c, c, diag[c]);
        SpMat A(n, n);
        A.setFromTriplets(trip.begin(), trip.end());

        Vec xu, xv;
        Vec gu = Vec::Zero(n), gv = Vec::Zero(n);
        for (int c = 0; c < n; ++c) {
            gu[c] = cur_.u.cell[c];
            gv[c] = cur_.v.cell[c];
        }
        diag_.momentum_u = solve_bicgstab(A, bu, xu, ctl_.lin_tol, ctl_.lin_max_iter, &gu);
        diag_.momentum_v = solve_bicgstab(A, bv, xv, ctl_.lin_tol, ctl_.lin_max_iter, &gv);
        if (!diag_.momentum_u.converged || !diag_.momentum_v.converged)
            throw SolverError("momentum solve did not converge",
                              std::max(diag_.momentum_u.residual, diag_.momentum_v.residual),
                              diag_.momentum_u.iterations + diag_.momentum_v.iterations);
        for (int c = 0; c < n; ++c) {
            cur_.u.cell[c] = xu[c];
            cur_.v.cell[c] = xv[c];
        }
    }

    /// Momentum-interpolated provisional face fluxes: linear velocity average
    /// plus the pressure-smoothing replacement of the averaged cell gradient
    /// by the compact face difference, scaled by d = dt / (rho c0).
    void interpolate_fluxes(double dt, const TimeScheme& ts) {
        const double d = dt / (props_.rho * ts.c0);
        const double ax = g_.area_x(), ay = g_.area_y();
        apply_pressure_bcs();
        const CellVectorField gp = gradient(g_, cur_.p);

        for (int j = 0; j < g_.ny; ++j) {
            for (int i = 1; i < g_.nx; ++i) {
                const int w = g_.cell(i - 1, j), e = g_.cell(i, j);
                const double ubar = 0.5 * (cur_.u.cell[w] + cur_.u.cell[e]);
                const double gpa = 0.5 * (gp.x[w] + gp.x[e]);
                const double compact = (cur_.p.cell[e] - cur_.p.cell[w]) / g_.dx;
                cur_.flux.x(i, j) = ax * (ubar + d * (gpa - compact));
            }
        }
        for (int j = 1; j < g_.ny; ++j) {
            for (int i = 0; i < g_.nx; ++i) {
                const int s = g_.cell(i, j - 1), nn = g_.cell(i, j);
                const double vbar = 0.5 * (cur_.v.cell[s] + cur_.v.cell[nn]);
                const double gpa = 0.5 * (gp.y[s] + gp.y[nn]);
                const double compact = (cur_.p.cell[nn] - cur_.p.cell[s]) / g_.dy;
                cur_.flux.y(i, j) = ay * (vbar + d * (gpa - compact));
            }
        }
        // Boundary faces carry the closure velocity directly.
        for (int j = 0; j < g_.ny; ++j) {
            const auto& bl = bc_[side(Side::Left)];
            cur_.flux.x(0, j) = ax * (bl.kind == VelocityBc::Kind::Dirichlet
                                          ? bl.u[j] : cur_.u(0, j));
            const auto& br = bc_[side(Side::Right)];
            cur_.flux.x(g_.nx, j) = ax * (br.kind == VelocityBc::Kind::Dirichlet
                                              ? br.u[j] : cur_.u(g_.nx - 1, j));
        }
        for (int i = 0; i < g_.nx; ++i) {
            const auto& bb = bc_[side(Side::Bottom)];
            cur_.flux.y(i, 0) = ay * (bb.kind == VelocityBc::Kind::Dirichlet
                                          ? bb.v[i] : cur_.v(i, 0));
            const auto& bt = bc_[side(Side::Top)];
            cur_.flux.y(i, g_.ny) = ay * (bt.kind == VelocityBc::Kind::Dirichlet
                                              ? bt.v[i] : cur_.v(i, g_.ny - 1));
        }
    }

    /// Incremental pressure correction: solve for p' from the provisional
    /// flux divergence, correct fluxes (interior faces and pressure-fixed
    /// outlet faces), cell velocities and pressure. Repeats correctors until
    /// the normalized divergence target holds.
    void project(double dt, const TimeScheme& ts) {
        const double d = dt / (props_.rho * ts.c0);
        const double ax = g_.area_x(), ay = g_.area_y();
        // Per-cell flux-residual bound implied by the normalized target.
        const double atol = ctl_.div_tol * u_ref_ * g_.dy * g_.Z;

        PoissonBcs pbcs;
        pbcs[side(Side::Right)] = PoissonBc::dirichlet(0.0);

        diag_.correctors_used = 0;
        const int total_cap = std::max(ctl_.n_correctors, ctl_.corrector_cap);
        for (int pass = 0; pass < total_cap; ++pass) {
            const ScalarField div = divergence(g_, cur_.flux);
            double max_div = 0.0;
            for (double x : div.cell) max_div = std::max(max_div, std::fabs(x));
            if (pass >= ctl_.n_correctors && max_div * g_.dx / u_ref_ <= ctl_.div_tol) break;

            auto [pc, info] = poisson_solve(g_, d, div, pbcs, ctl_.lin_tol, atol,
                                            ctl_.lin_max_iter);
            diag_.pressure = info;
            ++diag_.correctors_used;

            for (int j = 0; j < g_.ny; ++j)
                for (int i = 1; i < g_.nx; ++i)
                    cur_.flux.x(i, j) -=
                        d * ax * (pc(i, j) - pc(i - 1, j)) / g_.dx;
            for (int j = 1; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i)
                    cur_.flux.y(i, j) -=
                        d * ay * (pc(i, j) - pc(i, j - 1)) / g_.dy;
            for (int j = 0; j < g_.ny; ++j)
                cur_.flux.x(g_.nx, j) -= d * ax * (0.0 - pc(g_.nx - 1, j)) / (0.5 * g_.dx);

            const CellVectorField gpc = gradient(g_, pc);
            for (int c = 0; c < g_.cells(); ++c) {
                cur_.u.cell[c] -= d * gpc.x[c];
                cur_.v.cell[c] -= d * gpc.y[c];
                cur_.p.cell[c] += pc.cell[c];
            }
            apply_pressure_bcs();
        }
        diag_.max_norm_div = max_normalized_divergence();
    }

private:
    static int side(Side s) { return static_cast<int>(s); }

    void rebuild_consistent_flux(double u0) {
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i <= g_.nx; ++i) cur_.flux.x(i, j) = u0 * g_.area_x();
        // Inlet faces keep the profile closure value.
        const auto& bl = bc_[side(Side::Left)];
        if (bl.kind == VelocityBc::Kind::Dirichlet && u0 == 0.0)
            for (int j = 0; j < g_.ny; ++j) cur_.flux.x(0, j) = 0.0;
    }

    Grid g_;
    FluidProperties props_;
    double p_out_;
    double u_ref_;
    FlowControls ctl_;
    FlowState cur_, prev_, prev2_;
    std::array<VelocityBc, 4> bc_;
    FlowDiagnostics diag_;
};

} // namespace memflow
