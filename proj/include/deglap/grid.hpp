// Uniform cell-centered 2D grid, domain masks (rectangle and Lipschitz
// epigraph), pixel-counted ball/annulus cell sets and cell-set integrals.
#ifndef DEGLAP_GRID_HPP
#define DEGLAP_GRID_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "deglap/common.hpp"

namespace deglap {

struct Grid2D {
    int nx = 0, ny = 0;
    double h = 0.0;
    Vec2 origin; ///< center of cell (0,0)

    double x(int i) const { return origin.x + h * i; }
    double y(int j) const { return origin.y + h * j; }
    Vec2 center(int i, int j) const { return {x(i), y(j)}; }
    int idx(int i, int j) const { return j * nx + i; }
    int cell_count() const { return nx * ny; }
    bool in_lattice(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }
};

Grid2D make_grid(int nx, int ny, double h, Vec2 origin = {0.0, 0.0});

enum class CellClass : std::uint8_t { Exterior = 0, Boundary = 1, Interior = 2 };

struct LipschitzSpec {
    double kappa = 0.0;
    double r0 = 0.0;
    std::vector<double> profile; ///< graph samples at the grid's x coordinates
};

struct DomainMask {
    Grid2D grid;
    std::vector<CellClass> cls;
    double diameter = 0.0; ///< sup of pairwise distances of non-exterior cell centers
    std::optional<LipschitzSpec> lipschitz;

    CellClass cell_class(int i, int j) const {
        return grid.in_lattice(i, j) ? cls[grid.idx(i, j)] : CellClass::Exterior;
    }
    bool exterior(int i, int j) const { return cell_class(i, j) == CellClass::Exterior; }
    bool non_exterior(int i, int j) const { return !exterior(i, j); }

    int count(CellClass c) const;
    int non_exterior_count() const;
    std::vector<int> cells_of(CellClass c) const;
    std::vector<int> non_exterior_cells() const;
};

DomainMask make_rect_domain(int nx, int ny, double h, Vec2 origin = {0.0, 0.0});
DomainMask make_lipschitz_domain(const Grid2D& grid, const LipschitzSpec& spec);

struct ScalarField {
    Grid2D grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid2D& g) : grid(g), v(g.cell_count(), 0.0) {}
    double& at(int i, int j) { return v[grid.idx(i, j)]; }
    double at(int i, int j) const { return v[grid.idx(i, j)]; }
};

struct VectorField {
    Grid2D grid;
    std::vector<double> x, y;

    VectorField() = default;
    explicit VectorField(const Grid2D& g)
        : grid(g), x(g.cell_count(), 0.0), y(g.cell_count(), 0.0) {}
    Vec2 at(int i, int j) const { return {x[grid.idx(i, j)], y[grid.idx(i, j)]}; }
    void set(int i, int j, Vec2 v) {
        x[grid.idx(i, j)] = v.x;
        y[grid.idx(i, j)] = v.y;
    }
};

/// Validates the field invariant: finite on non-exterior cells, zero outside.
void validate_field(const ScalarField& f, const DomainMask& mask, const std::string& what);

/// Contiguous index range; empty when lo > hi.
struct IndexRange {
    int lo = 0, hi = -1;
    bool empty() const { return lo > hi; }
    int count() const { return empty() ? 0 : hi - lo + 1; }
};

/// Indices k with |origin + k*h - z| < w (strict, the open-ball convention
/// used everywhere).  Unclamped: callers clip to the lattice as needed.
IndexRange strict_range(double origin, double h, double z, double w);

/// Number of infinite-lattice cell centers inside the open disc B(c, r).
/// Cells beyond the stored lattice count toward the denominator of
/// zero-extended ball averages.
std::int64_t lattice_disc_count(const Grid2D& grid, Vec2 c, double r);

/// Non-exterior cells with center in the open ball B(center, radius).
std::vector<int> ball_cells(const DomainMask& mask, Vec2 center, double radius);

/// Non-exterior cells in the half-open shell 2^j*rho <= |x-y| < 2^{j+1}*rho.
std::vector<int> annulus_cells(const DomainMask& mask, Vec2 y, double rho, int j);

double integrate(const ScalarField& f, std::span<const int> cells);
double integrate(const ScalarField& f, std::span<const int> cells, const ScalarField& weight);
double average(const ScalarField& f, std::span<const int> cells);

/// Geometric radius ladder {start, start*ratio, ...} up to limit (inclusive
/// within a 1e-12 relative slack).
std::vector<double> geometric_ladder(double start, double limit, double ratio);

} // namespace deglap

#endif
