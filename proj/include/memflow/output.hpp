#pragma once

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "memflow/errors.hpp"
#include "memflow/field.hpp"
#include "memflow/flow.hpp"
#include "memflow/membrane.hpp"
#include "memflow/transport.hpp"

namespace memflow {

/// All text outputs use "%.17g" (round-trip exact for doubles), LF line ends,
/// and fixed column orders, so repeated runs of the same configuration are
/// byte-identical.

namespace detail {

class TextFile {
public:
    explicit TextFile(const std::string& path) : path_(path) {
        f_ = std::fopen(path.c_str(), "wb");
        if (!f_) throw IoError("cannot open for writing: " + path);
    }
    ~TextFile() {
        if (f_) std::fclose(f_);
    }
    TextFile(const TextFile&) = delete;
    TextFile& operator=(const TextFile&) = delete;

    void printf(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
        va_list ap;
        va_start(ap, fmt);
        const int rc = std::vfprintf(f_, fmt, ap);
        va_end(ap);
        if (rc < 0) throw IoError("write failed: " + path_);
    }
    void number(double v) { printf("%.17g", v); }
    void close() {
        if (f_ && std::fclose(f_) != 0) {
            f_ = nullptr;
            throw IoError("close failed: " + path_);
        }
        f_ = nullptr;
    }

private:
    std::string path_;
    std::FILE* f_ = nullptr;
};

} // namespace detail

inline void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

inline void write_text_file(const std::string& path, const std::string& content) {
    detail::TextFile f(path);
    f.printf("%s", content.c_str());
    f.close();
}

/// One scalar record of the membrane boundary state at a simulation time.
struct TimeSeriesRecord {
    double t = 0.0;
    double eps_mean = 0.0;
    double k_mean = 0.0;
    double v_mean = 0.0;      ///< outward-positive mean permeation speed
    double recovery = 0.0;
    double dpi_mean = 0.0;
};

inline void write_timeseries(const std::string& path,
                             const std::vector<TimeSeriesRecord>& rows) {
    if (rows.empty()) throw IoError("time series has no records: " + path);
    detail::TextFile f(path);
    f.printf("t_s,eps_mean,k_mean,v_mean,recovery,dpi_mean\n");
    for (const auto& r : rows)
        f.printf("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.eps_mean, r.k_mean,
                 r.v_mean, r.recovery, r.dpi_mean);
    f.close();
}

/// Final membrane profile along x. v_m is reported outward-positive
/// (permeate production), the opposite sign of the stored y-component.
inline void write_membrane_profile(const std::string& path, const Grid& g,
                                   const MembraneState& st) {
    detail::TextFile f(path);
    f.printf("x_m,v_m,eps,k_m2,dpi_Pa\n");
    for (int i = 0; i < g.nx; ++i)
        f.printf("%.17g,%.17g,%.17g,%.17g,%.17g\n", g.xc(i), -st.v_m[i], st.eps[i], st.k[i],
                 st.dpi[i]);
    f.close();
}

/// Cell-centered snapshot in the legacy structured-points format readable by
/// common visualization tools: velocity components, pressure, then one scalar
/// per species.
inline void write_vtk_fields(const std::string& path, const Grid& g, const FlowState& fs,
                             const TransportSolver& tr, double t) {
    detail::TextFile f(path);
    f.printf("# vtk DataFile Version 3.0\n");
    f.printf("channel fields t=%.17g\n", t);
    f.printf("ASCII\n");
    f.printf("DATASET STRUCTURED_POINTS\n");
    f.printf("DIMENSIONS %d %d 1\n", g.nx + 1, g.ny + 1);
    f.printf("ORIGIN 0 0 0\n");
    f.printf("SPACING %.17g %.17g 1\n", g.dx, g.dy);
    f.printf("CELL_DATA %d\n", g.cells());
    auto scalars = [&](const std::string& name, const std::vector<double>& cell) {
        f.printf("SCALARS %s double 1\n", name.c_str());
        f.printf("LOOKUP_TABLE default\n");
        for (double v : cell) f.printf("%.17g\n", v);
    };
    scalars("u", fs.u.cell);
    scalars("v", fs.v.cell);
    scalars("p", fs.p.cell);
    for (int s = 0; s < tr.n_species(); ++s)
        scalars("phi_" + tr.species(s).name, tr.field(s).cell);
    f.close();
}

/// Kinetic-sweep comparison table, one row per rate constant.
class SweepSummaryWriter {
public:
    explicit SweepSummaryWriter(const std::string& path) : f_(path) {
        f_.printf("K,recovery_final,v_mean_final,eps_mean_final,k_mean_final,"
                  "dpi_mean_final,status\n");
    }
    void row(double K, double recovery, double v_mean, double eps_mean, double k_mean,
             double dpi_mean) {
        f_.printf("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,ok\n", K, recovery, v_mean,
                  eps_mean, k_mean, dpi_mean);
    }
    void failed(double K, const std::string& reason) {
        std::string r = reason;
        for (char& c : r)
            if (c == ',' || c == '\n' || c == '\r') c = ';';
        f_.printf("%.17g,nan,nan,nan,nan,nan,failed: %s\n", K, r.c_str());
    }
    void close() { f_.close(); }

private:
    detail::TextFile f_;
};

} // namespace memflow
