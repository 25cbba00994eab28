#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "memflow/chemistry.hpp"
#include "memflow/errors.hpp"

namespace memflow {

/// Van't Hoff coefficients for a fully rejecting membrane (pure permeate, so
/// the osmotic pressure difference is R*T*varphi*sum(phi) at the feed face).
struct OsmoticModel {
    double R = 8.314;    ///< gas constant [J/(mol K)], fixed
    double T = 298.0;    ///< temperature [K]
    double varphi = 1.0; ///< osmotic coefficient [-]
};

inline double osmotic_pressure(const OsmoticModel& m, const std::vector<double>& phi) {
    double s = 0.0;
    for (double p : phi) {
        if (!(p >= 0.0))
            throw std::invalid_argument("osmotic_pressure: negative concentration");
        s += p;
    }
    return m.R * m.T * m.varphi * s;
}

/// Darcy velocity through the membrane: v = -k * ((p_m - p_perm) - dpi) / (ell * mu).
/// Negative = flow out of the channel through y = 0 (normal operation when the
/// trans-membrane pressure exceeds the osmotic difference); positive = reverse
/// flux into the channel.
inline double membrane_velocity(double k, double p_m, double p_perm, double dpi,
                                double ell, double mu) {
    if (!(k > 0.0) || !(ell > 0.0) || !(mu > 0.0))
        throw std::invalid_argument("membrane_velocity: k, ell, mu must be positive");
    return -k * ((p_m - p_perm) - dpi) / (ell * mu);
}

/// Kozeny-Carman permeability as a function of porosity:
/// k = k0 * ((1 - eps0)^2 / (1 - eps)^2) * (eps / eps0)^3.
inline double kozeny_carman(double eps, double eps0, double k0) {
    if (!(eps > 0.0) || eps >= 1.0 || !(eps0 > 0.0) || eps0 >= 1.0)
        throw std::invalid_argument("kozeny_carman: porosity must lie in (0, 1)");
    if (!(k0 > 0.0))
        throw std::invalid_argument("kozeny_carman: k0 must be positive");
    const double a = (1.0 - eps0) / (1.0 - eps);
    const double b = eps / eps0;
    return k0 * a * a * b * b * b;
}

/// One time-integration increment of porosity loss by precipitation:
/// eps' = max(eps_min, eps - (V_s / ell) * solid_rate * dt). solid_rate is the
/// molar surface production rate of the solid [mol/(m^2 s)]; pass a trapezoidal
/// average of step-start and step-end rates to integrate across a step.
inline double update_porosity(double eps, double solid_rate, double V_s, double ell,
                              double dt, double eps_min) {
    if (!(solid_rate >= 0.0))
        throw std::invalid_argument("update_porosity: negative solid production rate");
    if (!(ell > 0.0) || !(V_s >= 0.0) || !(dt >= 0.0))
        throw std::invalid_argument("update_porosity: bad V_s, ell, or dt");
    return std::max(eps_min, eps - (V_s / ell) * solid_rate * dt);
}

/// Recovery ratio: permeate production over feed supply, r = v_bar * L / (u_av * H).
inline double recovery(double v_bar, double u_av, double L, double H) {
    if (!(u_av > 0.0) || !(L > 0.0) || !(H > 0.0))
        throw std::invalid_argument("recovery: u_av, L, H must be positive");
    return v_bar * L / (u_av * H);
}

/// Lumped water-permeability forms equivalent to the pore-scale description:
/// A = S_m * k / (ell * mu) and R_m = ell / (S_m * k), so A * R_m * mu = 1.
struct WaterPermeability {
    double A;    ///< permeability coefficient [m/(s Pa)] per unit area basis
    double R_m;  ///< membrane resistance [1/m]
};

inline WaterPermeability equivalent_water_permeability(double k, double S_m, double ell,
                                                       double mu) {
    if (!(k > 0.0) || !(S_m > 0.0) || !(ell > 0.0) || !(mu > 0.0))
        throw std::invalid_argument("equivalent_water_permeability: inputs must be positive");
    return {S_m * k / (ell * mu), ell / (S_m * k)};
}

/// Geometric and material constants of the membrane boundary.
struct MembraneParams {
    double ell = 0.0;      ///< membrane thickness [m]
    double k0 = 0.0;       ///< clean permeability [m^2]
    double eps0 = 0.0;     ///< clean porosity [-]
    double eps_min = 0.01; ///< porosity floor [-]
    double p_perm = 0.0;   ///< permeate-side pressure [Pa]
};

/// Result of the per-face coupled closure solve: a membrane velocity and
/// membrane-face concentrations that satisfy the Darcy law and the species
/// flux condition (advection - diffusion = surface reaction) simultaneously.
///
/// alpha/beta give the species flux density leaving the fluid through the
/// face as a linear function of the membrane-adjacent cell value:
/// out_flux_i [mol/(m^2 s)] = alpha_i * phi_cell_i + beta_i. The linearization
/// is exact at the solved state (it equals -xi_i there) and serves as the
/// implicit closure for the transport solve.
struct FaceClosure {
    double v = 0.0;              ///< face-normal velocity, y-component [m/s]
    double dpi = 0.0;            ///< osmotic pressure difference [Pa]
    std::vector<double> phi_b;   ///< face concentrations (solids identically 0)
    std::vector<double> xi;      ///< net surface production at phi_b [mol/(m^2 s)]
    std::vector<double> alpha;   ///< implicit out-flux slope [m/s]
    std::vector<double> beta;    ///< implicit out-flux offset [mol/(m^2 s)]
    bool reverse = false;        ///< v > 0: osmotic difference exceeds pressure drive
    bool guarded = false;        ///< an under-resolution guard engaged during the solve
};

namespace detail {

/// Consumption/production split of the surface flux of species i at face
/// concentrations phi: xi_i = s_i - c_i * phi_i with c_i >= 0 the linearized
/// own-species consumption coefficient and s_i >= 0 the production term.
struct RateSplit {
    double c = 0.0;  ///< [m/s]
    double s = 0.0;  ///< [mol/(m^2 s)]
};

inline RateSplit rate_split(const ReactionNetwork& net, const std::vector<double>& phi,
                            int i, double ell) {
    RateSplit out;
    for (int j = 0; j < net.n_reactions(); ++j) {
        const int a = net.a(j, i);
        double base = net.K[j];
        for (int l = 0; l < net.n_species; ++l) {
            if (l == i) continue;
            const int al = net.a(j, l);
            if (al > 0) base *= int_pow(phi[l], al);
        }
        // base = K_j * prod_{l != i} phi_l^{A_jl}
        if (a > 0) out.c += a * base * int_pow(phi[i], a - 1) * ell;
        const int b = net.b(j, i);
        if (b > 0) out.s += b * base * int_pow(phi[i], a) * ell;
    }
    return out;
}

/// In-place Gaussian elimination with partial pivoting for the tiny dense
/// systems of the face polish (one velocity plus one row per dissolved
/// species). Returns false on a (numerically) singular matrix.
inline bool solve_dense(std::vector<double>& A, std::vector<double>& b, int m) {
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::fabs(A[r * m + col]) > std::fabs(A[piv * m + col])) piv = r;
        if (!(std::fabs(A[piv * m + col]) > 0.0)) return false;
        if (piv != col) {
            for (int c = 0; c < m; ++c) std::swap(A[piv * m + c], A[col * m + c]);
            std::swap(b[piv], b[col]);
        }
        for (int r = col + 1; r < m; ++r) {
            const double f = A[r * m + col] / A[col * m + col];
            if (f == 0.0) continue;
            for (int c = col; c < m; ++c) A[r * m + c] -= f * A[col * m + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = m - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < m; ++c) s -= A[r * m + c] * b[c];
        b[r] = s / A[r * m + r];
    }
    return true;
}

/// Damped Newton refinement of the joint face system
///   G_0 = v + k * ((p_m - p_perm) - dpi(phi)) / (ell * mu)
///   G_i = phi_i * (1 + h_i * (v + c_i(phi))) - phi_P_i - h_i * s_i(phi)
/// in the unknowns (v, dissolved phi). The residual form has no divisions,
/// so it stays evaluable across the advective closure pole; physical roots
/// always have nonnegative concentrations and denominators. Writes the
/// refined state back only when the scaled residual norm improved.
inline void polish_face(const ReactionNetwork& net, double RT_varphi, double p_m,
                        double p_perm, double k, double ell, double mu, double dy,
                        const std::vector<double>& phi_P, const std::vector<double>& D,
                        const std::vector<char>& dissolved, double& v,
                        std::vector<double>& phi) {
    const int n = static_cast<int>(phi_P.size());
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if (dissolved[i]) idx.push_back(i);
    const int m = 1 + static_cast<int>(idx.size());
    if (m == 1) return;
    const double kappa = k / (ell * mu);

    // Scaled infinity norm of the residual at (vv, ph); fills G.
    auto residual_norm = [&](double vv, const std::vector<double>& ph,
                             std::vector<double>& G) {
        double sum = 0.0;
        for (int i : idx) sum += ph[i];
        const double dpi = RT_varphi * sum;
        G[0] = vv + kappa * ((p_m - p_perm) - dpi);
        const double s0 = std::max({std::fabs(vv), kappa * std::fabs(p_m - p_perm),
                                    kappa * std::fabs(dpi), 1e-30});
        double worst = std::fabs(G[0]) / s0;
        int r = 1;
        for (int i : idx) {
            const double h = dy / (2.0 * D[i]);
            const auto rs = rate_split(net, ph, i, ell);
            G[r] = ph[i] * (1.0 + h * (vv + rs.c)) - std::max(0.0, phi_P[i]) - h * rs.s;
            const double si = std::max({std::fabs(ph[i]), std::fabs(phi_P[i]),
                                        std::fabs(h * rs.s),
                                        std::fabs(ph[i]) * h * (std::fabs(vv) + rs.c),
                                        1e-30});
            worst = std::max(worst, std::fabs(G[r]) / si);
            ++r;
        }
        return worst;
    };

    std::vector<double> G(m), Gp(m), Gm(m), J(m * m), step(m);
    std::vector<double> ph = phi;
    double vv = v;
    double norm = residual_norm(vv, ph, G);
    const double entry_norm = norm;
    double best_norm = norm;
    double best_v = vv;
    std::vector<double> best_phi = ph;

    for (int it = 0; it < 40 && norm > 1e-14; ++it) {
        // Central-difference Jacobian, one-sided at the phi >= 0 wall.
        {
            const double dv = std::max(1e-6 * std::fabs(vv), 1e-13);
            residual_norm(vv + dv, ph, Gp);
            residual_norm(vv - dv, ph, Gm);
            for (int r = 0; r < m; ++r) J[r * m + 0] = (Gp[r] - Gm[r]) / (2.0 * dv);
        }
        for (int c = 1; c < m; ++c) {
            const int i = idx[c - 1];
            const double dp = std::max(1e-6 * std::fabs(ph[i]), 1e-9);
            const double lo = ph[i] - dp >= 0.0 ? ph[i] - dp : ph[i];
            const double hi = ph[i] + dp;
            const double save = ph[i];
            ph[i] = hi;
            residual_norm(vv, ph, Gp);
            ph[i] = lo;
            residual_norm(vv, ph, Gm);
            ph[i] = save;
            for (int r = 0; r < m; ++r) J[r * m + c] = (Gp[r] - Gm[r]) / (hi - lo);
        }
        residual_norm(vv, ph, G);
        for (int r = 0; r < m; ++r) step[r] = -G[r];
        std::vector<double> A = J;
        if (!solve_dense(A, step, m)) break;

        double t = 1.0;
        bool accepted = false;
        for (int halve = 0; halve < 12; ++halve, t *= 0.5) {
            const double v_try = vv + t * step[0];
            std::vector<double> ph_try = ph;
            for (int c = 1; c < m; ++c)
                ph_try[idx[c - 1]] = std::max(0.0, ph[idx[c - 1]] + t * step[c]);
            const double n_try = residual_norm(v_try, ph_try, Gp);
            if (std::isfinite(n_try) && n_try < norm) {
                vv = v_try;
                ph = ph_try;
                norm = n_try;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (norm < best_norm) {
            best_norm = norm;
            best_v = vv;
            best_phi = ph;
        }
    }
    if (best_norm < entry_norm) {
        v = best_v;
        phi = best_phi;
    }
}

/// Damped Newton solve of the fixed-velocity face system
///   G_i = phi_i * (1 + h_i * (v + c_i(phi))) - phi_P_i - h_i * s_i(phi)
/// over the dissolved species. Updating all species simultaneously matters:
/// sequential single-species sweeps alternate through the cross-consumption
/// coupling, which stops contracting once h * c exceeds one and then invents
/// asymmetric states for exchange-symmetric species. Entries of phi that are
/// positive and finite seed the iteration (warm start across velocity
/// probes); others start from the bulk value. Returns false when no
/// nonnegative root is reached, which is how the advective-pole region
/// (suction overwhelming diffusive exchange) reports back to the velocity
/// search.
inline bool solve_face_concentrations(const ReactionNetwork& net, double v, double dy,
                                      const std::vector<double>& phi_P,
                                      const std::vector<double>& D,
                                      const std::vector<char>& dissolved, double ell,
                                      std::vector<double>& phi) {
    const int n = static_cast<int>(phi_P.size());
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if (dissolved[i]) idx.push_back(i);
    const int m = static_cast<int>(idx.size());
    if (m == 0) return true;

    for (int i = 0; i < n; ++i)
        if (!dissolved[i]) phi[i] = 0.0;
    for (int i : idx)
        if (!(std::isfinite(phi[i]) && phi[i] > 0.0)) phi[i] = std::max(0.0, phi_P[i]);

    auto residual_norm = [&](const std::vector<double>& ph, std::vector<double>& G) {
        double worst = 0.0;
        int r = 0;
        for (int i : idx) {
            const double h = dy / (2.0 * D[i]);
            const auto rs = rate_split(net, ph, i, ell);
            G[r] = ph[i] * (1.0 + h * (v + rs.c)) - std::max(0.0, phi_P[i]) - h * rs.s;
            const double si = std::max({std::fabs(ph[i]), std::fabs(phi_P[i]),
                                        std::fabs(h * rs.s),
                                        std::fabs(ph[i]) * h * (std::fabs(v) + rs.c),
                                        1e-30});
            worst = std::max(worst, std::fabs(G[r]) / si);
            ++r;
        }
        return worst;
    };

    std::vector<double> G(m), Gp(m), Gm(m), J(m * m), step(m);
    double norm = residual_norm(phi, G);
    for (int it = 0; it < 60 && norm > 1e-14; ++it) {
        for (int c = 0; c < m; ++c) {
            const int i = idx[c];
            const double dp = std::max(1e-6 * std::fabs(phi[i]), 1e-9);
            const double lo = phi[i] - dp >= 0.0 ? phi[i] - dp : phi[i];
            const double hi = phi[i] + dp;
            const double save = phi[i];
            phi[i] = hi;
            residual_norm(phi, Gp);
            phi[i] = lo;
            residual_norm(phi, Gm);
            phi[i] = save;
            for (int r = 0; r < m; ++r) J[r * m + c] = (Gp[r] - Gm[r]) / (hi - lo);
        }
        residual_norm(phi, G);
        for (int r = 0; r < m; ++r) step[r] = -G[r];
        std::vector<double> A = J;
        if (!solve_dense(A, step, m)) break;

        double t = 1.0;
        bool accepted = false;
        for (int halve = 0; halve < 16; ++halve, t *= 0.5) {
            std::vector<double> ph_try = phi;
            for (int c = 0; c < m; ++c)
                ph_try[idx[c]] = std::max(0.0, phi[idx[c]] + t * step[c]);
            const double n_try = residual_norm(ph_try, Gp);
            if (std::isfinite(n_try) && n_try < norm) {
                phi = ph_try;
                norm = n_try;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return norm <= 1e-10;
}

} // namespace detail

/// Solves the coupled face state (v, phi_b) for one membrane face.
///
/// Given the membrane-adjacent cell concentrations phi_P, local boundary
/// pressure p_m and current permeability k, finds v such that
///   v = -k * ((p_m - p_perm) - dpi(phi_b(v))) / (ell * mu)
/// where phi_b(v) solves the discrete flux closure per dissolved species:
///   phi_b = (phi_P + h * s) / (1 + h * (v + c)),  h = dy / (2 D).
/// dpi is monotone decreasing in v, so the residual v - v_target(dpi(v)) is
/// strictly increasing and a bracketed bisection is safe. Solving the pair
/// jointly removes the stiffness of lagged velocity/concentration iteration
/// near flux equilibrium; the outer Picard loop still closes the lag against
/// the bulk fields.
inline FaceClosure solve_membrane_face(const ReactionNetwork& net, const OsmoticModel& osm,
                                       const MembraneParams& mp, double mu, double dy,
                                       const std::vector<double>& phi_P,
                                       const std::vector<double>& D, double p_m, double k,
                                       const double* v_warm = nullptr) {
    const int n = static_cast<int>(phi_P.size());
    FaceClosure fc;
    fc.phi_b.assign(n, 0.0);
    fc.alpha.assign(n, 0.0);
    fc.beta.assign(n, 0.0);

    std::vector<char> dissolved(n, 1);
    for (int i = 0; i < n; ++i)
        if (i < static_cast<int>(net.solid.size()) && net.solid[i]) dissolved[i] = 0;

    auto v_target = [&](double dpi) {
        return membrane_velocity(k, p_m, mp.p_perm, dpi, mp.ell, mu);
    };

    // Fast path: nothing dissolved in the feed and no production possible.
    bool any_phi = false;
    for (int i = 0; i < n; ++i)
        if (dissolved[i] && phi_P[i] > 0.0) any_phi = true;

    // Face concentrations at fixed v; returns osmotic pressure difference.
    // The phi vector warm-starts consecutive velocity probes. When no
    // nonnegative root exists (face Peclet beyond the resolvable range) the
    // returned pressure is blown up so the velocity search backs off.
    auto solve_phi_b = [&](double v, std::vector<double>& phi) {
        if (net.empty() && !any_phi) {
            for (int i = 0; i < n; ++i) phi[i] = dissolved[i] ? std::max(0.0, phi_P[i]) : 0.0;
            return 0.0;
        }
        if (!detail::solve_face_concentrations(net, v, dy, phi_P, D, dissolved, mp.ell,
                                               phi)) {
            fc.guarded = true;
            return 1e30;
        }
        std::vector<double> diss;
        diss.reserve(n);
        for (int i = 0; i < n; ++i)
            if (dissolved[i]) diss.push_back(phi[i]);
        return osmotic_pressure(osm, diss);
    };

    std::vector<double> phi(n, 0.0);
    double v;
    if (!any_phi && net.empty()) {
        v = v_target(0.0);
        fc.dpi = 0.0;
    } else {
        auto residual = [&](double vv) { return vv - v_target(solve_phi_b(vv, phi)); };
        double v_lo = v_target(0.0);          // most-outward admissible velocity
        double v_hi = std::max(1e-9, -v_lo);
        // Warm start: try a narrow bracket around the previous face velocity.
        if (v_warm) {
            const double w = std::max(1e-10, 0.25 * std::fabs(*v_warm));
            double lo = std::max(v_lo, *v_warm - w);
            double hi = *v_warm + w;
            if (lo < hi && residual(lo) <= 0.0 && residual(hi) >= 0.0) {
                v_lo = lo;
                v_hi = hi;
            }
        }
        int doubles = 0;
        while (residual(v_hi) < 0.0 && doubles++ < 300) v_hi = 2.0 * v_hi + 1e-9;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (v_lo + v_hi);
            (residual(mid) <= 0.0 ? v_lo : v_hi) = mid;
            if (v_hi - v_lo <= 1e-15 * std::max(1e-12, std::fabs(mid))) break;
        }
        v = 0.5 * (v_lo + v_hi);
        fc.dpi = solve_phi_b(v, phi);

        // Newton polish of the joint (v, phi_b) system. The velocity bisection
        // stops at a finite tolerance, so without this step the stored state
        // would only be bisection-accurate rather than self-consistent to
        // round-off.
        detail::polish_face(net, osm.R * osm.T * osm.varphi, p_m, mp.p_perm, k, mp.ell,
                            mu, dy, phi_P, D, dissolved, v, phi);
        {
            std::vector<double> diss;
            for (int i = 0; i < n; ++i)
                if (dissolved[i]) diss.push_back(phi[i]);
            fc.dpi = osmotic_pressure(osm, diss);
        }
    }

    fc.v = v;
    fc.phi_b = phi;
    fc.reverse = (v > 0.0);
    if (!net.empty())
        fc.xi = surface_reaction_flux(net, fc.phi_b, mp.ell);
    else
        fc.xi.assign(n, 0.0);

    // Implicit out-flux linearization, exact at the solved state:
    //   out/A = a*c*phi_P - a*s*(1 + v*h),  a = 1 / (1 + h*(v + c)).
    for (int i = 0; i < n; ++i) {
        if (!dissolved[i]) continue;
        const double h = dy / (2.0 * D[i]);
        const auto rs = detail::rate_split(net, fc.phi_b, i, mp.ell);
        const double denom = 1.0 + h * (v + rs.c);
        if (denom <= 1e-12) continue;  // guard case: leave flux explicit via xi
        const double a = 1.0 / denom;
        fc.alpha[i] = a * rs.c;
        fc.beta[i] = -a * rs.s * (1.0 + v * h);
    }
    return fc;
}

/// Evolving per-face membrane state along the bottom boundary.
struct MembraneState {
    MembraneParams params;
    int n_faces = 0;
    int n_species = 0;

    std::vector<double> eps, k, v_m, dpi;
    std::vector<double> precipitate;       ///< cumulative solid [mol/m^2]
    std::vector<double> phi_b;             ///< face concentrations, [face * n_species]
    std::vector<double> xi;                ///< surface fluxes, [face * n_species]
    std::vector<double> alpha, beta;       ///< transport closure, [face * n_species]

    // Step-start copies for in-step (Picard-safe) trapezoidal integration.
    std::vector<double> eps_n, precipitate_n, xi_n;

    int reverse_faces = 0;   ///< faces with v_m > 0 at the last refresh

    MembraneState() = default;
    MembraneState(const MembraneParams& p, int faces, int species)
        : params(p), n_faces(faces), n_species(species),
          eps(faces, p.eps0), k(faces, p.k0), v_m(faces, 0.0), dpi(faces, 0.0),
          precipitate(faces, 0.0),
          phi_b(static_cast<size_t>(faces) * species, 0.0),
          xi(static_cast<size_t>(faces) * species, 0.0),
          alpha(static_cast<size_t>(faces) * species, 0.0),
          beta(static_cast<size_t>(faces) * species, 0.0),
          eps_n(eps), precipitate_n(precipitate), xi_n(xi) {}

    double& phi_b_at(int f, int s) { return phi_b[static_cast<size_t>(f) * n_species + s]; }
    double phi_b_at(int f, int s) const { return phi_b[static_cast<size_t>(f) * n_species + s]; }
    double& xi_at(int f, int s) { return xi[static_cast<size_t>(f) * n_species + s]; }
    double xi_at(int f, int s) const { return xi[static_cast<size_t>(f) * n_species + s]; }
    double& alpha_at(int f, int s) { return alpha[static_cast<size_t>(f) * n_species + s]; }
    double& beta_at(int f, int s) { return beta[static_cast<size_t>(f) * n_species + s]; }

    /// Snapshot the start-of-step state; within-step refreshes always
    /// integrate from here so Picard re-iterations do not compound.
    void begin_step() {
        eps_n = eps;
        precipitate_n = precipitate;
        xi_n = xi;
    }

    double mean_eps() const { return mean(eps); }
    double mean_k() const { return mean(k); }
    double mean_dpi() const { return mean(dpi); }
    /// Mean outward permeation speed (positive = permeate production).
    double mean_outflow() const {
        double s = 0.0;
        for (double v : v_m) s -= v;
        return n_faces ? s / n_faces : 0.0;
    }

private:
    static double mean(const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    }
};

/// One refresh of the whole membrane boundary from current bulk fields.
///
/// Per face, in order: surface fluxes at the face concentrations, porosity
/// update (trapezoidal in time from the step-start state), Kozeny-Carman
/// permeability, osmotic pressure, membrane velocity. When `coupled` closures
/// are supplied (normal operation) the face concentrations come from the
/// joint velocity/concentration solve; in frozen-concentration runs the
/// caller passes the frozen face values directly via `phi_face`.
inline void refresh_membrane(MembraneState& st, const ReactionNetwork& net,
                             const OsmoticModel& osm, double mu, double dy, double dt,
                             const std::vector<double>& D,
                             const std::vector<double>& p_m,
                             const std::vector<std::vector<double>>* phi_cell,
                             const std::vector<std::vector<double>>* phi_face_frozen) {
    st.reverse_faces = 0;
    const int ns = st.n_species;
    for (int f = 0; f < st.n_faces; ++f) {
        std::vector<double> xi_now(ns, 0.0);
        double dpi = 0.0, v = 0.0;
        bool have_closure = false;
        FaceClosure fc;
        if (phi_face_frozen) {
            const auto& pf = (*phi_face_frozen)[f];
            if (!net.empty()) xi_now = surface_reaction_flux(net, pf, st.params.ell);
            std::vector<double> diss;
            for (int s = 0; s < ns; ++s)
                if (!(s < static_cast<int>(net.solid.size()) && net.solid[s]))
                    diss.push_back(pf[s]);
            dpi = osmotic_pressure(osm, diss);
            for (int s = 0; s < ns; ++s) {
                st.phi_b_at(f, s) = pf[s];
                st.alpha_at(f, s) = 0.0;
                st.beta_at(f, s) = 0.0;
            }
        } else {
            const double v_prev = st.v_m[f];
            fc = solve_membrane_face(net, osm, st.params, mu, dy, (*phi_cell)[f], D,
                                     p_m[f], st.k[f], &v_prev);
            xi_now = fc.xi;
            dpi = fc.dpi;
            have_closure = true;
        }

        // Porosity loss from solid production, trapezoidal across the step.
        double eps_new = st.eps_n[f];
        double dprec = 0.0;
        for (int s = 0; s < ns; ++s) {
            if (!(s < static_cast<int>(net.solid.size()) && net.solid[s])) continue;
            const double avg = 0.5 * (st.xi_n[static_cast<size_t>(f) * ns + s] + xi_now[s]);
            eps_new = update_porosity(eps_new, avg, net.molar_volume[s], st.params.ell, dt,
                                      st.params.eps_min);
            dprec += avg * dt;
        }
        st.eps[f] = eps_new;
        st.k[f] = kozeny_carman(eps_new, st.params.eps0, st.params.k0);
        st.precipitate[f] = st.precipitate_n[f] + dprec;
        st.dpi[f] = dpi;
        v = membrane_velocity(st.k[f], p_m[f], st.params.p_perm, dpi, st.params.ell, mu);
        st.v_m[f] = v;
        if (v > 0.0) ++st.reverse_faces;

        for (int s = 0; s < ns; ++s) {
            st.xi_at(f, s) = xi_now[s];
            if (have_closure) {
                st.phi_b_at(f, s) = fc.phi_b[s];
                st.alpha_at(f, s) = fc.alpha[s];
                st.beta_at(f, s) = fc.beta[s];
            }
        }
    }
}

} // namespace memflow
