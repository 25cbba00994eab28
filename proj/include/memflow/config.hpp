#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "memflow/chemistry.hpp"
#include "memflow/errors.hpp"
#include "memflow/transport.hpp"

namespace memflow {

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Raw key/value view of an INI-style file: `[section]` headers, `key = value`
/// lines, `#` or `;` comments. Section and key order are preserved.
struct RawConfig {
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };
    std::vector<Section> sections;

    const Section* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }
};

inline RawConfig parse_ini(std::istream& in) {
    RawConfig raw;
    std::string line;
    int lineno = 0;
    RawConfig::Section* cur = nullptr;
    while (std::getline(in, line)) {
        ++lineno;
        // Strip comments (full-line or trailing).
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '#' || line[i] == ';') {
                line = line.substr(0, i);
                break;
            }
        }
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header: " + t);
            const std::string name = detail::trim(t.substr(1, t.size() - 2));
            if (name.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            raw.sections.push_back({name, {}});
            cur = &raw.sections.back();
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value: " + t);
        if (!cur)
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        for (const auto& kv : cur->entries)
            if (kv.first == key)
                throw ConfigError("line " + std::to_string(lineno) + ": duplicate key [" +
                                  cur->name + "]." + key);
        cur->entries.emplace_back(key, val);
    }
    return raw;
}

struct SpeciesConfig {
    std::string name;
    double D = 1.5e-9;          ///< [m^2/s], typical small-ion default
    double phi_in = 0.0;
    double rejection = 1.0;     ///< only full rejection (1) is implemented
    bool solid = false;
    double molar_volume = 0.0;  ///< [m^3/mol], solids only
};

struct ReactionConfig {
    double K = 0.0;  ///< rate constant, units follow the reactant orders
    std::vector<std::pair<std::string, int>> reactants, products;
};

struct SimulationConfig {
    // [geometry]
    double L = 0.0, H = 0.0, Z = 1.0;
    int nx = 0, ny = 0;
    // [fluid]
    double rho = 0.0, mu = 0.0;
    // [inlet]
    double u_av = 0.0;
    // [pressures]
    double p_out = 0.0, p_perm = 0.0;
    // [membrane]
    double ell = 0.0, k0 = 0.0, eps0 = 0.0, eps_min = 0.01;
    double v_fixed = 0.0;  ///< prescribed wall-normal velocity for frozen-membrane runs
    // [osmotic]
    double T = 298.0, varphi = 1.0;

    std::vector<SpeciesConfig> species;
    std::vector<ReactionConfig> reactions;

    // [controls]
    double dt = 0.0, t_end = 0.0;
    std::vector<double> output_times;
    double picard_tol = 1e-6;
    int picard_max = 50;
    double lin_tol = 1e-8;
    double div_tol = 1e-8;
    int n_correctors = 2;
    double cfl_warn = 0.5;
    double cfl_abort = 1.0;
    bool write_fields = true;

    // [modes]
    bool frozen_velocity = false;
    bool frozen_concentration = false;
    bool frozen_membrane = false;
    enum class InitVelocity { Zero, Poiseuille };
    enum class InitConcentration { Zero, Inlet };
    InitVelocity init_velocity = InitVelocity::Zero;
    InitConcentration init_concentration = InitConcentration::Zero;

    int species_index(const std::string& name) const {
        for (size_t i = 0; i < species.size(); ++i)
            if (species[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

namespace detail {

struct SectionReader {
    const RawConfig::Section* sec;
    std::string name;
    std::set<std::string> seen;

    bool has(const std::string& key) {
        if (!sec) return false;
        for (const auto& kv : sec->entries)
            if (kv.first == key) return true;
        return false;
    }
    std::string raw(const std::string& key) {
        seen.insert(key);
        for (const auto& kv : sec->entries)
            if (kv.first == key) return kv.second;
        throw ConfigError("[" + name + "]." + key + ": missing required key");
    }
    double number(const std::string& key) {
        const std::string v = raw(key);
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0' || !std::isfinite(x))
            throw ConfigError("[" + name + "]." + key + ": not a finite number: " + v);
        return x;
    }
    double number(const std::string& key, double dflt) {
        return has(key) ? number(key) : (seen.insert(key), dflt);
    }
    int integer(const std::string& key) {
        const double x = number(key);
        const int i = static_cast<int>(x);
        if (static_cast<double>(i) != x)
            throw ConfigError("[" + name + "]." + key + ": not an integer");
        return i;
    }
    int integer(const std::string& key, int dflt) {
        return has(key) ? integer(key) : (seen.insert(key), dflt);
    }
    bool boolean(const std::string& key, bool dflt) {
        if (!has(key)) {
            seen.insert(key);
            return dflt;
        }
        std::string v = raw(key);
        std::transform(v.begin(), v.end(), v.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        throw ConfigError("[" + name + "]." + key + ": not a boolean: " + v);
    }
    std::string text(const std::string& key, const std::string& dflt) {
        return has(key) ? raw(key) : (seen.insert(key), dflt);
    }
    std::vector<double> numbers(const std::string& key) {
        std::vector<double> out;
        if (!has(key)) {
            seen.insert(key);
            return out;
        }
        for (const std::string& tok : split(raw(key), ',')) {
            const std::string t = trim(tok);
            if (t.empty()) continue;
            char* end = nullptr;
            const double x = std::strtod(t.c_str(), &end);
            if (end == t.c_str() || *end != '\0' || !std::isfinite(x))
                throw ConfigError("[" + name + "]." + key + ": not a finite number: " + t);
            out.push_back(x);
        }
        return out;
    }
    void reject_unknown() {
        if (!sec) return;
        for (const auto& kv : sec->entries)
            if (!seen.count(kv.first))
                throw ConfigError("[" + name + "]." + kv.first + ": unknown key");
    }
};

inline SectionReader reader(const RawConfig& raw, const std::string& name, bool required) {
    const auto* sec = raw.find(name);
    if (!sec && required) throw ConfigError("[" + name + "]: missing required section");
    return SectionReader{sec, name, {}};
}

inline std::vector<std::pair<std::string, int>> parse_terms(const std::string& section,
                                                            const std::string& key,
                                                            const std::string& value) {
    std::vector<std::pair<std::string, int>> out;
    for (const std::string& tok : split(value, ',')) {
        const std::string t = trim(tok);
        if (t.empty()) continue;
        const size_t colon = t.find(':');
        if (colon == std::string::npos)
            throw ConfigError("[" + section + "]." + key + ": expected name:coeff, got " + t);
        const std::string nm = trim(t.substr(0, colon));
        const std::string cs = trim(t.substr(colon + 1));
        char* end = nullptr;
        const long c = std::strtol(cs.c_str(), &end, 10);
        if (end == cs.c_str() || *end != '\0' || c < 1)
            throw ConfigError("[" + section + "]." + key + ": coefficient must be a positive integer: " + t);
        out.emplace_back(nm, static_cast<int>(c));
    }
    return out;
}

} // namespace detail

/// Typed configuration from the raw key/value view; throws ConfigError naming
/// the offending [section].key for anything missing, malformed, or unknown.
inline SimulationConfig interpret_config(const RawConfig& raw) {
    using detail::reader;
    SimulationConfig c;

    auto geo = reader(raw, "geometry", true);
    c.L = geo.number("L");
    c.H = geo.number("H");
    c.Z = geo.number("Z", 1.0);
    c.nx = geo.integer("nx");
    c.ny = geo.integer("ny");
    geo.reject_unknown();

    auto fl = reader(raw, "fluid", true);
    c.rho = fl.number("rho");
    c.mu = fl.number("mu");
    fl.reject_unknown();

    auto in = reader(raw, "inlet", true);
    c.u_av = in.number("u_av");
    in.reject_unknown();

    auto pr = reader(raw, "pressures", true);
    c.p_out = pr.number("p_out");
    c.p_perm = pr.number("p_perm");
    pr.reject_unknown();

    auto mem = reader(raw, "membrane", true);
    c.ell = mem.number("ell");
    c.k0 = mem.number("k0");
    c.eps0 = mem.number("eps0");
    c.eps_min = mem.number("eps_min", 0.01);
    c.v_fixed = mem.number("v_fixed", 0.0);
    mem.reject_unknown();

    auto osm = reader(raw, "osmotic", false);
    if (osm.sec) {
        c.T = osm.number("T", 298.0);
        c.varphi = osm.number("varphi", 1.0);
        osm.reject_unknown();
    }

    for (const auto& sec : raw.sections) {
        if (sec.name.rfind("species.", 0) == 0) {
            const std::string nm = sec.name.substr(8);
            if (nm.empty()) throw ConfigError("[" + sec.name + "]: empty species name");
            auto sr = detail::SectionReader{&sec, sec.name, {}};
            SpeciesConfig sp;
            sp.name = nm;
            sp.solid = sr.boolean("solid", false);
            sp.D = sr.number("D", sp.solid ? 0.0 : 1.5e-9);
            sp.phi_in = sr.number("phi_in", 0.0);
            sp.rejection = sr.number("rejection", 1.0);
            sp.molar_volume = sr.number("molar_volume", 0.0);
            sr.reject_unknown();
            c.species.push_back(std::move(sp));
        }
    }

    std::vector<std::pair<long, const RawConfig::Section*>> rsecs;
    for (const auto& sec : raw.sections) {
        if (sec.name.rfind("reaction.", 0) == 0) {
            const std::string suffix = sec.name.substr(9);
            char* end = nullptr;
            const long idx = std::strtol(suffix.c_str(), &end, 10);
            if (suffix.empty() || end == suffix.c_str() || *end != '\0' || idx < 1)
                throw ConfigError("[" + sec.name + "]: reaction sections are numbered from 1");
            rsecs.emplace_back(idx, &sec);
        }
    }
    std::sort(rsecs.begin(), rsecs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [idx, sec] : rsecs) {
        auto rr = detail::SectionReader{sec, sec->name, {}};
        ReactionConfig rc;
        rc.K = rr.number("K");
        rc.reactants = detail::parse_terms(sec->name, "reactants", rr.raw("reactants"));
        if (rr.has("products"))
            rc.products = detail::parse_terms(sec->name, "products", rr.raw("products"));
        else
            rr.seen.insert("products");
        rr.reject_unknown();
        c.reactions.push_back(std::move(rc));
    }

    auto ctl = reader(raw, "controls", true);
    c.dt = ctl.number("dt");
    c.t_end = ctl.number("t_end");
    c.output_times = ctl.numbers("output_times");
    c.picard_tol = ctl.number("picard_tol", 1e-6);
    c.picard_max = ctl.integer("picard_max", 50);
    c.lin_tol = ctl.number("lin_tol", 1e-8);
    c.div_tol = ctl.number("div_tol", 1e-8);
    c.n_correctors = ctl.integer("n_correctors", 2);
    c.cfl_warn = ctl.number("cfl_warn", 0.5);
    c.cfl_abort = ctl.number("cfl_abort", 1.0);
    c.write_fields = ctl.boolean("write_fields", true);
    ctl.reject_unknown();

    auto md = reader(raw, "modes", false);
    if (md.sec) {
        c.frozen_velocity = md.boolean("frozen_velocity", false);
        c.frozen_concentration = md.boolean("frozen_concentration", false);
        c.frozen_membrane = md.boolean("frozen_membrane", false);
        const std::string iv = md.text("init_velocity", "zero");
        if (iv == "zero") c.init_velocity = SimulationConfig::InitVelocity::Zero;
        else if (iv == "poiseuille") c.init_velocity = SimulationConfig::InitVelocity::Poiseuille;
        else throw ConfigError("[modes].init_velocity: expected zero or poiseuille");
        const std::string ic = md.text("init_concentration", "zero");
        if (ic == "zero") c.init_concentration = SimulationConfig::InitConcentration::Zero;
        else if (ic == "inlet") c.init_concentration = SimulationConfig::InitConcentration::Inlet;
        else throw ConfigError("[modes].init_concentration: expected zero or inlet");
        md.reject_unknown();
    }

    for (const auto& sec : raw.sections) {
        static const std::set<std::string> known = {"geometry", "fluid",    "inlet",
                                                    "pressures", "membrane", "osmotic",
                                                    "controls", "modes"};
        if (known.count(sec.name)) continue;
        if (sec.name.rfind("species.", 0) == 0 || sec.name.rfind("reaction.", 0) == 0) continue;
        throw ConfigError("[" + sec.name + "]: unknown section");
    }
    return c;
}

/// Physical and numerical sanity checks beyond parseability.
inline void validate_config(const SimulationConfig& c) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(c.L > 0.0, "[geometry].L: must be positive");
    require(c.H > 0.0, "[geometry].H: must be positive");
    require(c.Z > 0.0, "[geometry].Z: must be positive");
    require(c.nx >= 1, "[geometry].nx: must be >= 1");
    require(c.ny >= 1, "[geometry].ny: must be >= 1");
    require(c.rho > 0.0, "[fluid].rho: must be positive");
    require(c.mu > 0.0, "[fluid].mu: must be positive");
    require(c.u_av >= 0.0, "[inlet].u_av: must be non-negative");
    require(c.ell > 0.0, "[membrane].ell: must be positive");
    require(c.k0 > 0.0, "[membrane].k0: must be positive");
    require(c.eps0 > 0.0 && c.eps0 < 1.0, "[membrane].eps0: must lie in (0, 1)");
    require(c.eps_min > 0.0 && c.eps_min <= c.eps0,
            "[membrane].eps_min: must lie in (0, eps0]");
    require(c.T > 0.0, "[osmotic].T: must be positive");
    require(c.varphi > 0.0, "[osmotic].varphi: must be positive");

    std::set<std::string> names;
    for (const auto& sp : c.species) {
        const std::string where = "[species." + sp.name + "]";
        require(names.insert(sp.name).second, where + ": duplicate species name");
        require(sp.rejection == 1.0,
                where + ".rejection: partial rejection not implemented (must be 1)");
        if (sp.solid) {
            require(sp.phi_in == 0.0, where + ".phi_in: solids cannot enter at the inlet");
            require(sp.molar_volume > 0.0, where + ".molar_volume: required for a solid");
        } else {
            require(sp.D > 0.0, where + ".D: must be positive for a dissolved species");
            require(sp.phi_in >= 0.0, where + ".phi_in: must be non-negative");
        }
    }
    for (size_t r = 0; r < c.reactions.size(); ++r) {
        const std::string where = "[reaction." + std::to_string(r + 1) + "]";
        const auto& rc = c.reactions[r];
        require(rc.K >= 0.0, where + ".K: must be non-negative");
        require(!rc.reactants.empty(), where + ".reactants: at least one reactant required");
        for (const auto& [nm, coeff] : rc.reactants) {
            require(c.species_index(nm) >= 0, where + ".reactants: unknown species " + nm);
            require(!c.species[c.species_index(nm)].solid,
                    where + ".reactants: solid species cannot react in solution: " + nm);
            (void)coeff;
        }
        for (const auto& [nm, coeff] : rc.products) {
            require(c.species_index(nm) >= 0, where + ".products: unknown species " + nm);
            (void)coeff;
        }
    }

    require(c.dt > 0.0, "[controls].dt: must be positive");
    require(c.t_end > 0.0, "[controls].t_end: must be positive");
    double last = 0.0;
    for (double t : c.output_times) {
        require(t > 0.0, "[controls].output_times: times must be positive");
        require(t >= last, "[controls].output_times: times must be non-decreasing");
        require(t <= c.t_end + 0.5 * c.dt,
                "[controls].output_times: times must not exceed t_end");
        last = t;
    }
    require(c.picard_tol > 0.0, "[controls].picard_tol: must be positive");
    require(c.picard_max >= 1, "[controls].picard_max: must be >= 1");
    require(c.lin_tol > 0.0, "[controls].lin_tol: must be positive");
    require(c.div_tol > 0.0, "[controls].div_tol: must be positive");
    require(c.n_correctors >= 1, "[controls].n_correctors: must be >= 1");
    require(c.cfl_warn > 0.0, "[controls].cfl_warn: must be positive");
    require(c.cfl_abort >= c.cfl_warn, "[controls].cfl_abort: must be >= cfl_warn");
    require(!(c.frozen_membrane && c.frozen_concentration),
            "[modes]: frozen_membrane and frozen_concentration are mutually exclusive");
}

inline SimulationConfig config_from_string(const std::string& text) {
    std::istringstream in(text);
    SimulationConfig c = interpret_config(parse_ini(in));
    validate_config(c);
    return c;
}

inline SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    SimulationConfig c = interpret_config(parse_ini(in));
    validate_config(c);
    return c;
}

/// Canonical text form: fixed section and key order, full-precision numbers.
/// Reparsing the echo reproduces the configuration exactly.
inline std::string echo_config(const SimulationConfig& c) {
    using detail::fmt_double;
    std::ostringstream o;
    auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << "\n"; };
    auto kd = [&](const char* k, double v) { kv(k, fmt_double(v)); };
    auto ki = [&](const char* k, int v) { kv(k, std::to_string(v)); };
    auto kb = [&](const char* k, bool v) { kv(k, v ? "true" : "false"); };

    o << "[geometry]\n";
    kd("L", c.L); kd("H", c.H); kd("Z", c.Z); ki("nx", c.nx); ki("ny", c.ny);
    o << "\n[fluid]\n";
    kd("rho", c.rho); kd("mu", c.mu);
    o << "\n[inlet]\n";
    kd("u_av", c.u_av);
    o << "\n[pressures]\n";
    kd("p_out", c.p_out); kd("p_perm", c.p_perm);
    o << "\n[membrane]\n";
    kd("ell", c.ell); kd("k0", c.k0); kd("eps0", c.eps0); kd("eps_min", c.eps_min);
    kd("v_fixed", c.v_fixed);
    o << "\n[osmotic]\n";
    kd("T", c.T); kd("varphi", c.varphi);
    for (const auto& sp : c.species) {
        o << "\n[species." << sp.name << "]\n";
        kd("D", sp.D); kd("phi_in", sp.phi_in); kd("rejection", sp.rejection);
        kb("solid", sp.solid); kd("molar_volume", sp.molar_volume);
    }
    for (size_t r = 0; r < c.reactions.size(); ++r) {
        o << "\n[reaction." << (r + 1) << "]\n";
        kd("K", c.reactions[r].K);
        auto terms = [&](const char* key, const std::vector<std::pair<std::string, int>>& ts) {
            if (ts.empty() && std::string(key) == "products") return;
            std::string v;
            for (size_t i = 0; i < ts.size(); ++i) {
                if (i) v += ", ";
                v += ts[i].first + ":" + std::to_string(ts[i].second);
            }
            kv(key, v);
        };
        terms("reactants", c.reactions[r].reactants);
        terms("products", c.reactions[r].products);
    }
    o << "\n[controls]\n";
    kd("dt", c.dt); kd("t_end", c.t_end);
    if (!c.output_times.empty()) {
        std::string v;
        for (size_t i = 0; i < c.output_times.size(); ++i) {
            if (i) v += ", ";
            v += fmt_double(c.output_times[i]);
        }
        kv("output_times", v);
    }
    kd("picard_tol", c.picard_tol); ki("picard_max", c.picard_max);
    kd("lin_tol", c.lin_tol); kd("div_tol", c.div_tol); ki("n_correctors", c.n_correctors);
    kd("cfl_warn", c.cfl_warn); kd("cfl_abort", c.cfl_abort);
    kb("write_fields", c.write_fields);
    o << "\n[modes]\n";
    kb("frozen_velocity", c.frozen_velocity);
    kb("frozen_concentration", c.frozen_concentration);
    kb("frozen_membrane", c.frozen_membrane);
    kv("init_velocity",
       c.init_velocity == SimulationConfig::InitVelocity::Poiseuille ? "poiseuille" : "zero");
    kv("init_concentration",
       c.init_concentration == SimulationConfig::InitConcentration::Inlet ? "inlet" : "zero");
    return o.str();
}

/// Reaction network assembled over the configured species order.
inline ReactionNetwork make_network(const SimulationConfig& c) {
    ReactionNetwork net;
    net.n_species = static_cast<int>(c.species.size());
    for (const auto& sp : c.species) {
        net.species_names.push_back(sp.name);
        net.solid.push_back(sp.solid ? 1 : 0);
        net.molar_volume.push_back(sp.molar_volume);
    }
    const int ns = net.n_species;
    for (const auto& rc : c.reactions) {
        net.K.push_back(rc.K);
        net.reactant_coeff.insert(net.reactant_coeff.end(), ns, 0);
        net.product_coeff.insert(net.product_coeff.end(), ns, 0);
        const int j = static_cast<int>(net.K.size()) - 1;
        for (const auto& [nm, coeff] : rc.reactants)
            net.reactant_coeff[static_cast<size_t>(j) * ns + c.species_index(nm)] += coeff;
        for (const auto& [nm, coeff] : rc.products)
            net.product_coeff[static_cast<size_t>(j) * ns + c.species_index(nm)] += coeff;
    }
    return net;
}

inline std::vector<SpeciesSpec> make_species(const SimulationConfig& c) {
    std::vector<SpeciesSpec> out;
    for (const auto& sp : c.species) out.push_back({sp.name, sp.D, sp.solid});
    return out;
}

} // namespace memflow
