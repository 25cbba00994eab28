#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "memflow/errors.hpp"

namespace memflow {

/// Domain sides. The physical role of each side is fixed by the channel layout:
/// feed enters at the left, leaves at the right, the membrane is the bottom
/// boundary (y = 0) and the top is an impermeable wall.
enum class Side { Left, Right, Bottom, Top };

enum class BoundaryTag { Inlet, Outlet, Membrane, Wall };

/// Uniform structured 2D grid of nx * ny rectangular cells.
///
/// Cell (i, j) has center (x, y) = ((i+0.5)*dx, (j+0.5)*dy), i fastest in
/// memory (index = j*nx + i). Vertical faces ("x-faces") carry +x-directed
/// quantities and are indexed i in [0, nx], j in [0, ny); horizontal faces
/// ("y-faces") carry +y-directed quantities, i in [0, nx), j in [0, ny].
/// Z is the off-plane depth used for face areas and cell volumes.
struct Grid {
    double L = 0.0;   ///< channel length [m]
    double H = 0.0;   ///< channel height [m]
    double Z = 1.0;   ///< off-plane depth [m]
    int nx = 0;
    int ny = 0;
    double dx = 0.0;
    double dy = 0.0;

    int cells() const { return nx * ny; }
    int cell(int i, int j) const { return j * nx + i; }
    int xface(int i, int j) const { return j * (nx + 1) + i; }
    int yface(int i, int j) const { return j * nx + i; }

    double xc(int i) const { return (i + 0.5) * dx; }
    double yc(int j) const { return (j + 0.5) * dy; }

    double area_x() const { return dy * Z; }  ///< area of a vertical face
    double area_y() const { return dx * Z; }  ///< area of a horizontal face
    double volume() const { return dx * dy * Z; }

    /// Fixed mapping from geometric side to boundary role.
    static BoundaryTag boundary(Side s) {
        switch (s) {
            case Side::Left: return BoundaryTag::Inlet;
            case Side::Right: return BoundaryTag::Outlet;
            case Side::Bottom: return BoundaryTag::Membrane;
            case Side::Top: return BoundaryTag::Wall;
        }
        throw std::invalid_argument("Grid::boundary: bad side");
    }
};

inline Grid build_grid(double L, double H, int nx, int ny, double Z = 1.0) {
    if (!(L > 0.0) || !(H > 0.0) || !(Z > 0.0))
        throw ConfigError("build_grid: dimensions must be positive (L=" + std::to_string(L) +
                          ", H=" + std::to_string(H) + ", Z=" + std::to_string(Z) + ")");
    if (nx <= 0 || ny <= 0)
        throw ConfigError("build_grid: cell counts must be positive (nx=" + std::to_string(nx) +
                          ", ny=" + std::to_string(ny) + ")");
    Grid g;
    g.L = L;
    g.H = H;
    g.Z = Z;
    g.nx = nx;
    g.ny = ny;
    g.dx = L / nx;
    g.dy = H / ny;
    return g;
}

/// Cell-centered scalar field plus one stored value per boundary face.
/// Boundary values are owned by whatever closure applies (Dirichlet data,
/// zero-gradient copies, membrane-face values) and are consumed by the
/// discrete gradient/laplacian operators and by output writers.
struct ScalarField {
    int nx = 0, ny = 0;
    std::vector<double> cell;
    std::vector<double> bnd_left, bnd_right;   // size ny each
    std::vector<double> bnd_bottom, bnd_top;   // size nx each

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double value = 0.0)
        : nx(g.nx), ny(g.ny), cell(static_cast<size_t>(g.nx) * g.ny, value),
          bnd_left(g.ny, value), bnd_right(g.ny, value),
          bnd_bottom(g.nx, value), bnd_top(g.nx, value) {}

    double& operator()(int i, int j) { return cell[static_cast<size_t>(j) * nx + i]; }
    double operator()(int i, int j) const { return cell[static_cast<size_t>(j) * nx + i]; }

    void fill(double value) {
        std::fill(cell.begin(), cell.end(), value);
        std::fill(bnd_left.begin(), bnd_left.end(), value);
        std::fill(bnd_right.begin(), bnd_right.end(), value);
        std::fill(bnd_bottom.begin(), bnd_bottom.end(), value);
        std::fill(bnd_top.begin(), bnd_top.end(), value);
    }

    /// Copy cell values into a boundary array (zero-normal-gradient closure).
    void copy_to_boundary(Side s) {
        switch (s) {
            case Side::Left:
                for (int j = 0; j < ny; ++j) bnd_left[j] = (*this)(0, j);
                break;
            case Side::Right:
                for (int j = 0; j < ny; ++j) bnd_right[j] = (*this)(nx - 1, j);
                break;
            case Side::Bottom:
                for (int i = 0; i < nx; ++i) bnd_bottom[i] = (*this)(i, 0);
                break;
            case Side::Top:
                for (int i = 0; i < nx; ++i) bnd_top[i] = (*this)(i, ny - 1);
                break;
        }
    }

    bool finite() const {
        auto ok = [](const std::vector<double>& v) {
            for (double x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        return ok(cell) && ok(bnd_left) && ok(bnd_right) && ok(bnd_bottom) && ok(bnd_top);
    }
};

/// Face-normal quantities, one value per face (interior and boundary).
/// xf holds +x-directed values on vertical faces, yf +y-directed values on
/// horizontal faces. For volumetric flux [m^3/s] a positive xf means flow in
/// +x, a positive yf flow in +y; outflow through the bottom (membrane) face
/// of a cell therefore shows up as a negative yf at j = 0.
struct FaceField {
    int nx = 0, ny = 0;
    std::vector<double> xf;  // (nx+1) * ny
    std::vector<double> yf;  // nx * (ny+1)

    FaceField() = default;
    explicit FaceField(const Grid& g, double value = 0.0)
        : nx(g.nx), ny(g.ny),
          xf(static_cast<size_t>(g.nx + 1) * g.ny, value),
          yf(static_cast<size_t>(g.nx) * (g.ny + 1), value) {}

    double& x(int i, int j) { return xf[static_cast<size_t>(j) * (nx + 1) + i]; }
    double x(int i, int j) const { return xf[static_cast<size_t>(j) * (nx + 1) + i]; }
    double& y(int i, int j) { return yf[static_cast<size_t>(j) * nx + i]; }
    double y(int i, int j) const { return yf[static_cast<size_t>(j) * nx + i]; }

    size_t count() const { return xf.size() + yf.size(); }

    bool finite() const {
        for (double v : xf)
            if (!std::isfinite(v)) return false;
        for (double v : yf)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Cell-centered vector field (e.g. a gradient), no boundary storage.
struct CellVectorField {
    int nx = 0, ny = 0;
    std::vector<double> x, y;

    CellVectorField() = default;
    explicit CellVectorField(const Grid& g)
        : nx(g.nx), ny(g.ny),
          x(static_cast<size_t>(g.nx) * g.ny, 0.0),
          y(static_cast<size_t>(g.nx) * g.ny, 0.0) {}
};

} // namespace memflow
