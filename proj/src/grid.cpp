#include "deglap/grid.hpp"

#include <algorithm>
#include <cmath>

namespace deglap {

Grid2D make_grid(int nx, int ny, double h, Vec2 origin) {
    require(nx >= 4 && ny >= 4, "grid: nx and ny must be >= 4");
    require(h > 0.0 && std::isfinite(h), "grid: spacing must be positive");
    return Grid2D{nx, ny, h, origin};
}

int DomainMask::count(CellClass c) const {
    return static_cast<int>(std::count(cls.begin(), cls.end(), c));
}

int DomainMask::non_exterior_count() const {
    return static_cast<int>(cls.size()) - count(CellClass::Exterior);
}

std::vector<int> DomainMask::cells_of(CellClass c) const {
    std::vector<int> out;
    for (int k = 0; k < grid.cell_count(); ++k)
        if (cls[k] == c) out.push_back(k);
    return out;
}

std::vector<int> DomainMask::non_exterior_cells() const {
    std::vector<int> out;
    for (int k = 0; k < grid.cell_count(); ++k)
        if (cls[k] != CellClass::Exterior) out.push_back(k);
    return out;
}

namespace {

// Classify the rim: non-exterior cells with an exterior 4-neighbor (cells
// beyond the lattice count as exterior), then compute the diameter over
// boundary cells (hull vertices of the center set are always rim cells).
void classify_and_measure(DomainMask& mask) {
    const Grid2D& g = mask.grid;
    std::vector<CellClass>& cls = mask.cls;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = g.idx(i, j);
            if (cls[k] == CellClass::Exterior) continue;
            const bool rim = mask.exterior(i - 1, j) || mask.exterior(i + 1, j) ||
                             mask.exterior(i, j - 1) || mask.exterior(i, j + 1);
            cls[k] = rim ? CellClass::Boundary : CellClass::Interior;
        }
    }
    std::vector<Vec2> pts;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (cls[g.idx(i, j)] == CellClass::Boundary) pts.push_back(g.center(i, j));
    double best = 0.0;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b)
            best = std::max(best, (pts[a] - pts[b]).norm());
    mask.diameter = best;
    require(mask.diameter > 0.0, "domain: diameter must be positive");
}

} // namespace

DomainMask make_rect_domain(int nx, int ny, double h, Vec2 origin) {
    DomainMask mask;
    mask.grid = make_grid(nx, ny, h, origin);
    mask.cls.assign(mask.grid.cell_count(), CellClass::Interior);
    classify_and_measure(mask);
    return mask;
}

DomainMask make_lipschitz_domain(const Grid2D& grid, const LipschitzSpec& spec) {
    require(grid.nx >= 4 && grid.ny >= 4 && grid.h > 0.0, "lipschitz domain: bad grid");
    require(spec.kappa >= 0.0 && spec.kappa <= 0.25,
            "lipschitz domain: kappa must lie in [0, 1/4]");
    require(static_cast<int>(spec.profile.size()) == grid.nx,
            "lipschitz domain: profile must be sampled at the grid's x coordinates");
    for (int i = 0; i + 1 < grid.nx; ++i) {
        const double slope = std::abs(spec.profile[i + 1] - spec.profile[i]) / grid.h;
        require(slope <= spec.kappa * (1.0 + 1e-12),
                "lipschitz domain: profile slope exceeds kappa");
    }
    DomainMask mask;
    mask.grid = grid;
    mask.cls.assign(grid.cell_count(), CellClass::Exterior);
    int inside = 0;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            if (grid.y(j) > spec.profile[i]) {
                mask.cls[grid.idx(i, j)] = CellClass::Interior;
                ++inside;
            }
        }
    }
    require(inside > 0, "lipschitz domain: empty domain");
    classify_and_measure(mask);
    mask.lipschitz = spec;
    return mask;
}

void validate_field(const ScalarField& f, const DomainMask& mask, const std::string& what) {
    require(f.grid.cell_count() == mask.grid.cell_count(), what + ": grid mismatch");
    for (int k = 0; k < mask.grid.cell_count(); ++k) {
        if (mask.cls[k] == CellClass::Exterior)
            require(f.v[k] == 0.0, what + ": nonzero value on exterior cell");
        else
            require(std::isfinite(f.v[k]), what + ": non-finite value on domain cell");
    }
}

IndexRange strict_range(double origin, double h, double z, double w) {
    if (!(w > 0.0)) return {};
    const int lo = static_cast<int>(std::floor((z - w - origin) / h)) + 1;
    const int hi = static_cast<int>(std::ceil((z + w - origin) / h)) - 1;
    return {lo, hi};
}

std::int64_t lattice_disc_count(const Grid2D& grid, Vec2 c, double r) {
    std::int64_t total = 0;
    const IndexRange rows = strict_range(grid.origin.y, grid.h, c.y, r);
    for (int j = rows.lo; j <= rows.hi; ++j) {
        const double dy = grid.origin.y + grid.h * j - c.y;
        const double w = std::sqrt(std::max(0.0, r * r - dy * dy));
        total += strict_range(grid.origin.x, grid.h, c.x, w).count();
    }
    return total;
}

std::vector<int> ball_cells(const DomainMask& mask, Vec2 center, double radius) {
    require(radius > 0.0, "ball_cells: radius must be positive");
    const Grid2D& g = mask.grid;
    std::vector<int> out;
    IndexRange rows = strict_range(g.origin.y, g.h, center.y, radius);
    rows.lo = std::max(rows.lo, 0);
    rows.hi = std::min(rows.hi, g.ny - 1);
    for (int j = rows.lo; j <= rows.hi; ++j) {
        const double dy = g.y(j) - center.y;
        const double w = std::sqrt(std::max(0.0, radius * radius - dy * dy));
        IndexRange cols = strict_range(g.origin.x, g.h, center.x, w);
        cols.lo = std::max(cols.lo, 0);
        cols.hi = std::min(cols.hi, g.nx - 1);
        for (int i = cols.lo; i <= cols.hi; ++i)
            if (mask.cls[g.idx(i, j)] != CellClass::Exterior) out.push_back(g.idx(i, j));
    }
    return out;
}

std::vector<int> annulus_cells(const DomainMask& mask, Vec2 y, double rho, int j) {
    require(rho > 0.0, "annulus_cells: rho must be positive");
    require(j >= 1, "annulus_cells: j must be a positive integer");
    const double rin = std::ldexp(rho, j);  // 2^j * rho
    const double rout = std::ldexp(rho, j + 1);
    const Grid2D& g = mask.grid;
    std::vector<int> out;
    IndexRange rows = strict_range(g.origin.y, g.h, y.y, rout);
    rows.lo = std::max(rows.lo, 0);
    rows.hi = std::min(rows.hi, g.ny - 1);
    for (int jj = rows.lo; jj <= rows.hi; ++jj) {
        for (int i = 0; i < g.nx; ++i) {
            if (mask.cls[g.idx(i, jj)] == CellClass::Exterior) continue;
            const double d = (g.center(i, jj) - y).norm();
            if (d >= rin && d < rout) out.push_back(g.idx(i, jj));
        }
    }
    return out;
}

double integrate(const ScalarField& f, std::span<const int> cells) {
    double s = 0.0;
    for (int k : cells) s += f.v[k];
    return s * f.grid.h * f.grid.h;
}

double integrate(const ScalarField& f, std::span<const int> cells, const ScalarField& weight) {
    require(f.grid.cell_count() == weight.grid.cell_count(), "integrate: grid mismatch");
    double s = 0.0;
    for (int k : cells) s += f.v[k] * weight.v[k];
    return s * f.grid.h * f.grid.h;
}

double average(const ScalarField& f, std::span<const int> cells) {
    require(!cells.empty(), "average: empty cell set");
    double s = 0.0;
    for (int k : cells) s += f.v[k];
    return s / static_cast<double>(cells.size());
}

std::vector<double> geometric_ladder(double start, double limit, double ratio) {
    require(start > 0.0 && limit >= start, "geometric_ladder: bad range");
    require(ratio > 1.0, "geometric_ladder: ratio must exceed 1");
    std::vector<double> out;
    for (double r = start; r <= limit * (1.0 + 1e-12); r *= ratio) out.push_back(r);
    return out;
}

} // namespace deglap
