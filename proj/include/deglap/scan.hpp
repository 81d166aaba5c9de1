// Row prefix sums for O(rows) sums over open discs with the zero-extension
// convention (exterior and off-lattice cells contribute zero).
#ifndef DEGLAP_SCAN_HPP
#define DEGLAP_SCAN_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "deglap/grid.hpp"

namespace deglap {

class MaskedPrefix {
  public:
    MaskedPrefix(const DomainMask& mask, const std::vector<double>& vals)
        : g_(&mask.grid), p_(static_cast<std::size_t>(g_->ny) * (g_->nx + 1), 0.0) {
        for (int j = 0; j < g_->ny; ++j) {
            double run = 0.0;
            const std::size_t base = static_cast<std::size_t>(j) * (g_->nx + 1);
            for (int i = 0; i < g_->nx; ++i) {
                const int k = g_->idx(i, j);
                if (mask.cls[k] != CellClass::Exterior) run += vals[k];
                p_[base + i + 1] = run;
            }
        }
    }

    double row_sum(int j, int ilo, int ihi) const {
        const std::size_t base = static_cast<std::size_t>(j) * (g_->nx + 1);
        return p_[base + ihi + 1] - p_[base + ilo];
    }

    /// Sum over stored non-exterior cells with center in the open disc.
    double disc_sum(Vec2 z, double r) const {
        IndexRange rows = strict_range(g_->origin.y, g_->h, z.y, r);
        rows.lo = std::max(rows.lo, 0);
        rows.hi = std::min(rows.hi, g_->ny - 1);
        double s = 0.0;
        for (int j = rows.lo; j <= rows.hi; ++j) {
            const double dy = g_->y(j) - z.y;
            const double w = std::sqrt(std::max(0.0, r * r - dy * dy));
            IndexRange cols = strict_range(g_->origin.x, g_->h, z.x, w);
            cols.lo = std::max(cols.lo, 0);
            cols.hi = std::min(cols.hi, g_->nx - 1);
            if (!cols.empty()) s += row_sum(j, cols.lo, cols.hi);
        }
        return s;
    }

  private:
    const Grid2D* g_;
    std::vector<double> p_;
};

} // namespace deglap

#endif
