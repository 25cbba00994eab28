#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "memflow/config.hpp"
#include "memflow/flow.hpp"
#include "memflow/membrane.hpp"
#include "memflow/output.hpp"
#include "memflow/transport.hpp"
#include "memflow/version.hpp"

namespace memflow {

struct StepDiagnostics {
    int picard_iterations = 0;
    double picard_residual = 0.0;
    bool converged = false;
    bool tol_warning = false;   ///< accepted at picard_max without reaching picard_tol
    double cfl = 0.0;
    bool cfl_warning = false;
    double max_norm_div = 0.0;
    int reverse_faces = 0;
};

struct SpeciesAccount {
    std::string name;
    double content_initial = 0.0, content_final = 0.0;  ///< [mol]
    double mass_in = 0.0;                ///< cumulative inlet supply [mol]
    double mass_out = 0.0;               ///< cumulative outlet removal [mol]
    double mass_membrane = 0.0;          ///< cumulative membrane removal [mol]
    double clamped = 0.0;                ///< mass added by negativity clamps [mol]
    double residual_integral = 0.0;      ///< signed sum of step imbalances [mol]
    double max_residual_rate = 0.0;      ///< worst per-step imbalance [mol/s]
};

struct RunSummary {
    double t_final = 0.0;
    long n_steps = 0;
    double dt = 0.0;
    double recovery = 0.0;
    double v_mean = 0.0;       ///< outward-positive mean permeation speed [m/s]
    double eps_mean = 0.0;
    double k_mean = 0.0;
    double dpi_mean = 0.0;
    int max_picard_iterations = 0;
    int picard_warnings = 0;     ///< steps accepted at picard_max without convergence
    double max_cfl = 0.0;
    int cfl_warnings = 0;
    double max_norm_div = 0.0;
    int reverse_face_steps = 0;  ///< steps on which any face ran in reverse
    std::vector<SpeciesAccount> species;
    std::vector<std::string> files;
};

/// Couples channel flow, species transport and the reactive membrane boundary.
/// Each time step runs a lagged fixed-point loop: flow with the current
/// membrane suction, transport with the current face-flux closure, then the
/// membrane refresh against the new bulk fields; the loop repeats until the
/// relative change of pressure, concentrations and membrane velocity drops
/// below the configured tolerance.
class Simulation {
public:
    explicit Simulation(const SimulationConfig& cfg)
        : cfg_(cfg),
          g_(build_grid(cfg.L, cfg.H, cfg.nx, cfg.ny, cfg.Z)),
          net_(make_network(cfg)),
          osm_{8.314, cfg.T, cfg.varphi},
          flow_(g_, {cfg.rho, cfg.mu}, cfg.p_out, cfg.u_av, flow_controls(cfg)),
          transport_(g_, make_species(cfg), transport_controls(cfg)),
          mem_(membrane_params(cfg), g_.nx, static_cast<int>(cfg.species.size())),
          dt_(cfg.dt) {
        D_.resize(cfg.species.size(), 1.0);
        for (size_t s = 0; s < cfg.species.size(); ++s)
            if (!cfg.species[s].solid) D_[s] = cfg.species[s].D;
        accounts_.resize(cfg.species.size());
        for (size_t s = 0; s < cfg.species.size(); ++s)
            accounts_[s].name = cfg.species[s].name;
    }

    /// Set fields, boundary values and a self-consistent membrane state at t = 0.
    void initialize() {
        if (cfg_.init_velocity == SimulationConfig::InitVelocity::Poiseuille)
            flow_.initialize_poiseuille(cfg_.u_av);
        else
            flow_.initialize_uniform(0.0);

        for (int s = 0; s < transport_.n_species(); ++s) {
            const auto& sp = cfg_.species[s];
            transport_.set_dirichlet_values(Side::Left, s,
                                            std::vector<double>(g_.ny, sp.phi_in));
            if (cfg_.init_concentration == SimulationConfig::InitConcentration::Inlet)
                transport_.set_uniform(s, sp.solid ? 0.0 : sp.phi_in);
            else
                transport_.set_uniform(s, 0.0);
        }
        transport_.apply_bcs();

        mem_.begin_step();
        if (cfg_.frozen_membrane) {
            for (int f = 0; f < mem_.n_faces; ++f) mem_.v_m[f] = -cfg_.v_fixed;
        } else {
            refresh(0.0);
        }
        flow_.set_membrane_velocity(mem_.v_m);
        push_closure();
        for (size_t s = 0; s < accounts_.size(); ++s)
            accounts_[s].content_initial = transport_.total_content(static_cast<int>(s));
        initialized_ = true;
    }

    /// Advance one time step of length dt() with the coupled fixed-point loop.
    StepDiagnostics step() {
        const TimeScheme ts = have_history_ ? TimeScheme::backward2() : TimeScheme::euler();
        flow_.begin_step();
        transport_.begin_step();
        mem_.begin_step();

        snapshot();
        StepDiagnostics d;
        double prev_res = std::numeric_limits<double>::infinity();
        int growing = 0;
        for (int it = 1; it <= cfg_.picard_max; ++it) {
            if (!cfg_.frozen_velocity) {
                flow_.set_membrane_velocity(mem_.v_m);
                flow_.iterate(dt_, ts);
            }
            if (!cfg_.frozen_concentration) {
                push_closure();
                transport_.step(dt_, ts, flow_.state().flux);
            }
            if (!cfg_.frozen_membrane) refresh(dt_);

            const double res = residual_and_snapshot();
            d.picard_iterations = it;
            d.picard_residual = res;
            if (res < cfg_.picard_tol) {
                d.converged = true;
                break;
            }
            growing = (res > prev_res) ? growing + 1 : 0;
            if (growing >= 5)
                throw SolverError("coupled step diverging", res, it);
            prev_res = res;
        }
        // Accepted even when the tolerance was not met; the flag is the record.
        d.tol_warning = !d.converged;

        // Faces set the transport display values; flow already holds v_m.
        for (int s = 0; s < transport_.n_species(); ++s) {
            std::vector<double> pb(g_.nx, 0.0);
            for (int f = 0; f < g_.nx; ++f) pb[f] = mem_.phi_b_at(f, s);
            transport_.set_boundary_values(Side::Bottom, s, pb);
        }

        d.cfl = flow_.cfl(dt_);
        d.cfl_warning = d.cfl > cfg_.cfl_warn;
        if (d.cfl >= cfg_.cfl_abort)
            throw SolverError("advective CFL limit exceeded", d.cfl, 0);
        d.max_norm_div = cfg_.frozen_velocity ? flow_.max_normalized_divergence()
                                              : flow_.diagnostics().max_norm_div;
        d.reverse_faces = mem_.reverse_faces;

        if (!cfg_.frozen_concentration) {
            for (int s = 0; s < transport_.n_species(); ++s) {
                const SpeciesBalance& b = transport_.balance(s);
                SpeciesAccount& a = accounts_[s];
                a.mass_in += b.inflow * dt_;
                a.mass_out += b.outflow * dt_;
                a.mass_membrane += b.membrane_outflow * dt_;
                a.clamped += b.clamped;
                a.residual_integral += b.discrete_residual * dt_;
                a.max_residual_rate =
                    std::max(a.max_residual_rate, std::fabs(b.discrete_residual));
            }
        }

        t_ += dt_;
        have_history_ = true;
        return d;
    }

    /// March to t_end in equal steps, recording the time series, membrane
    /// profiles and field snapshots at the requested output times, the final
    /// profile and a manifest. On abort the partial history is still written.
    RunSummary run(const std::string& out_dir) {
        if (!initialized_) initialize();
        ensure_directory(out_dir);
        RunSummary rs;
        rs.files.push_back("config_echo.cfg");
        write_text_file(out_dir + "/config_echo.cfg", echo_config(cfg_));
        rs.files.push_back("timeseries.csv");

        const long n = static_cast<long>(std::ceil(cfg_.t_end / cfg_.dt - 1e-9));
        dt_ = cfg_.t_end / static_cast<double>(n);

        std::vector<TimeSeriesRecord> series;
        series.push_back(record());

        size_t next_out = 0;
        try {
            for (long k = 0; k < n; ++k) {
                const StepDiagnostics d = step();
                rs.max_picard_iterations =
                    std::max(rs.max_picard_iterations, d.picard_iterations);
                if (d.tol_warning) ++rs.picard_warnings;
                rs.max_cfl = std::max(rs.max_cfl, d.cfl);
                if (d.cfl_warning) ++rs.cfl_warnings;
                rs.max_norm_div = std::max(rs.max_norm_div, d.max_norm_div);
                if (d.reverse_faces > 0) ++rs.reverse_face_steps;
                series.push_back(record());
                while (next_out < cfg_.output_times.size() &&
                       t_ >= cfg_.output_times[next_out] - 0.5 * dt_) {
                    char name[40];
                    std::snprintf(name, sizeof(name), "profile_%04zu.csv", next_out + 1);
                    write_membrane_profile(out_dir + "/" + name, g_, mem_);
                    rs.files.push_back(name);
                    if (cfg_.write_fields) {
                        std::snprintf(name, sizeof(name), "fields_%04zu.vtk", next_out + 1);
                        write_vtk_fields(out_dir + "/" + name, g_, flow_.state(), transport_,
                                         t_);
                        rs.files.push_back(name);
                    }
                    ++next_out;
                }
            }
        } catch (...) {
            write_timeseries(out_dir + "/timeseries.csv", series);
            throw;
        }
        write_timeseries(out_dir + "/timeseries.csv", series);

        write_membrane_profile(out_dir + "/profile_final.csv", g_, mem_);
        rs.files.push_back("profile_final.csv");
        if (cfg_.write_fields) {
            write_vtk_fields(out_dir + "/fields_final.vtk", g_, flow_.state(), transport_, t_);
            rs.files.push_back("fields_final.vtk");
        }

        rs.t_final = t_;
        rs.n_steps = n;
        rs.dt = dt_;
        rs.v_mean = mem_.mean_outflow();
        rs.recovery = recovery(rs.v_mean, cfg_.u_av, cfg_.L, cfg_.H);
        rs.eps_mean = mem_.mean_eps();
        rs.k_mean = mem_.mean_k();
        rs.dpi_mean = mem_.mean_dpi();
        for (size_t s = 0; s < accounts_.size(); ++s)
            accounts_[s].content_final = transport_.total_content(static_cast<int>(s));
        rs.species = accounts_;

        rs.files.push_back("manifest.json");
        write_manifest(out_dir + "/manifest.json", rs);
        return rs;
    }

    const Grid& grid() const { return g_; }
    const SimulationConfig& config() const { return cfg_; }
    const ReactionNetwork& network() const { return net_; }
    FlowSolver& flow() { return flow_; }
    TransportSolver& transport() { return transport_; }
    MembraneState& membrane() { return mem_; }
    const MembraneState& membrane() const { return mem_; }
    double time() const { return t_; }
    double dt() const { return dt_; }
    const std::vector<SpeciesAccount>& accounts() const { return accounts_; }

private:
    static FlowControls flow_controls(const SimulationConfig& c) {
        FlowControls f;
        f.lin_tol = c.lin_tol;
        f.div_tol = c.div_tol;
        f.n_correctors = c.n_correctors;
        return f;
    }
    static TransportControls transport_controls(const SimulationConfig& c) {
        TransportControls t;
        // Tighter than the flow tolerance: the species-balance report is only
        // as good as the linear residual it absorbs.
        t.lin_tol = std::min(c.lin_tol, 1e-10);
        return t;
    }
    static MembraneParams membrane_params(const SimulationConfig& c) {
        return {c.ell, c.k0, c.eps0, c.eps_min, c.p_perm};
    }

    /// Membrane refresh against the current bulk fields. Frozen-concentration
    /// runs evaluate the surface state at the membrane-adjacent cell values.
    void refresh(double dt) {
        std::vector<double> p_m(g_.nx, 0.0);
        for (int i = 0; i < g_.nx; ++i) p_m[i] = flow_.state().p(i, 0);
        std::vector<std::vector<double>> phi_rows(g_.nx, std::vector<double>(D_.size(), 0.0));
        for (int i = 0; i < g_.nx; ++i)
            for (int s = 0; s < transport_.n_species(); ++s)
                phi_rows[i][s] = transport_.field(s)(i, 0);
        if (cfg_.frozen_concentration)
            refresh_membrane(mem_, net_, osm_, cfg_.mu, g_.dy, dt, D_, p_m, nullptr,
                             &phi_rows);
        else
            refresh_membrane(mem_, net_, osm_, cfg_.mu, g_.dy, dt, D_, p_m, &phi_rows,
                             nullptr);
    }

    void push_closure() {
        for (int s = 0; s < transport_.n_species(); ++s) {
            std::vector<double> a(g_.nx, 0.0), b(g_.nx, 0.0);
            for (int f = 0; f < g_.nx; ++f) {
                a[f] = mem_.alpha_at(f, s);
                b[f] = mem_.beta_at(f, s);
            }
            transport_.set_membrane_closure(s, std::move(a), std::move(b));
        }
    }

    void snapshot() {
        p_snap_ = flow_.state().p.cell;
        v_snap_ = mem_.v_m;
        phi_snap_.clear();
        for (int s = 0; s < transport_.n_species(); ++s)
            phi_snap_.push_back(transport_.field(s).cell);
    }

    double residual_and_snapshot() {
        double res = 0.0;
        if (!cfg_.frozen_velocity) {
            double scale = 1.0;
            for (double p : flow_.state().p.cell) scale = std::max(scale, std::fabs(p));
            for (size_t c = 0; c < p_snap_.size(); ++c)
                res = std::max(res, std::fabs(flow_.state().p.cell[c] - p_snap_[c]) / scale);
        }
        if (!cfg_.frozen_concentration) {
            for (int s = 0; s < transport_.n_species(); ++s) {
                if (cfg_.species[s].solid) continue;
                double scale = 1e-12;
                for (double v : transport_.field(s).cell)
                    scale = std::max(scale, std::fabs(v));
                for (size_t c = 0; c < phi_snap_[s].size(); ++c)
                    res = std::max(res, std::fabs(transport_.field(s).cell[c] -
                                                  phi_snap_[s][c]) / scale);
            }
        }
        if (!cfg_.frozen_membrane) {
            double scale = 1e-12;
            for (double v : mem_.v_m) scale = std::max(scale, std::fabs(v));
            for (size_t f = 0; f < v_snap_.size(); ++f)
                res = std::max(res, std::fabs(mem_.v_m[f] - v_snap_[f]) / scale);
        }
        snapshot();
        return res;
    }

    TimeSeriesRecord record() const {
        const double v_mean = mem_.mean_outflow();
        const double r =
            cfg_.u_av > 0.0 ? recovery(v_mean, cfg_.u_av, cfg_.L, cfg_.H) : 0.0;
        return {t_, mem_.mean_eps(), mem_.mean_k(), v_mean, r, mem_.mean_dpi()};
    }

    void write_manifest(const std::string& path, const RunSummary& rs) {
        nlohmann::ordered_json j;
        j["version"] = version;
        j["grid"] = {{"L", cfg_.L}, {"H", cfg_.H}, {"Z", cfg_.Z},
                     {"nx", cfg_.nx}, {"ny", cfg_.ny}};
        j["n_steps"] = rs.n_steps;
        j["dt"] = rs.dt;
        j["t_final"] = rs.t_final;
        j["final"] = {{"recovery", rs.recovery},
                      {"v_mean", rs.v_mean},
                      {"eps_mean", rs.eps_mean},
                      {"k_mean", rs.k_mean},
                      {"dpi_mean", rs.dpi_mean},
                      {"max_picard_iterations", rs.max_picard_iterations},
                      {"max_cfl", rs.max_cfl},
                      {"max_norm_div", rs.max_norm_div},
                      {"reverse_face_steps", rs.reverse_face_steps}};
        nlohmann::ordered_json sp = nlohmann::ordered_json::array();
        for (const auto& a : rs.species) {
            sp.push_back({{"name", a.name},
                          {"content_initial", a.content_initial},
                          {"content_final", a.content_final},
                          {"mass_in", a.mass_in},
                          {"mass_out", a.mass_out},
                          {"mass_membrane", a.mass_membrane},
                          {"clamped", a.clamped},
                          {"residual_integral", a.residual_integral},
                          {"max_residual_rate", a.max_residual_rate}});
        }
        j["species"] = sp;
        j["files"] = rs.files;
        write_text_file(path, j.dump(2) + "\n");
    }

    SimulationConfig cfg_;
    Grid g_;
    ReactionNetwork net_;
    OsmoticModel osm_;
    FlowSolver flow_;
    TransportSolver transport_;
    MembraneState mem_;
    std::vector<double> D_;
    double dt_;
    double t_ = 0.0;
    bool have_history_ = false;
    bool initialized_ = false;
    std::vector<SpeciesAccount> accounts_;
    std::vector<double> p_snap_, v_snap_;
    std::vector<std::vector<double>> phi_snap_;
};

/// Run the configuration once per rate constant, overriding every reaction's
/// K, each into its own subdirectory, and collect a comparison table. Returns
/// the number of failed runs; failures are recorded and do not stop the sweep.
inline int run_sweep(const SimulationConfig& base, const std::vector<double>& Ks,
                     const std::string& out_dir) {
    ensure_directory(out_dir);
    SweepSummaryWriter table(out_dir + "/comparison.csv");
    int failures = 0;
    for (double Kv : Ks) {
        SimulationConfig cfg = base;
        for (auto& r : cfg.reactions) r.K = Kv;
        char sub[64];
        std::snprintf(sub, sizeof(sub), "K_%.17g", Kv);
        try {
            validate_config(cfg);
            Simulation sim(cfg);
            sim.initialize();
            const RunSummary rs = sim.run(out_dir + "/" + sub);
            table.row(Kv, rs.recovery, rs.v_mean, rs.eps_mean, rs.k_mean, rs.dpi_mean);
        } catch (const std::exception& e) {
            table.failed(Kv, e.what());
            ++failures;
        }
    }
    table.close();
    return failures;
}

} // namespace memflow
