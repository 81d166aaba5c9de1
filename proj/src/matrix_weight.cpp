#include "deglap/matrix_weight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "deglap/parallel.hpp"
#include "deglap/scan.hpp"

namespace deglap {

void SymMat2::eigenvalues(double& lam1, double& lam2) const {
    const double ht = 0.5 * (a11 + a22);
    const double d = std::hypot(0.5 * (a11 - a22), a12);
    lam1 = ht + d;
    lam2 = ht - d;
}

double SymMat2::spectral_norm() const {
    double l1, l2;
    eigenvalues(l1, l2);
    return std::max(std::abs(l1), std::abs(l2));
}

double SymMat2::min_eigenvalue() const {
    double l1, l2;
    eigenvalues(l1, l2);
    return l2;
}

double SymMat2::cond() const {
    double l1, l2;
    eigenvalues(l1, l2);
    require(l2 > 0.0, "cond: matrix not positive definite");
    return std::max(std::abs(l1), std::abs(l2)) / l2;
}

bool SymMat2::positive_definite() const { return min_eigenvalue() > 0.0; }

SymMat2 rotate_congruence(const SymMat2& a, double t) {
    // Q = [[c,-s],[s,c]]; returns Q^T A Q.
    const double c = std::cos(t), s = std::sin(t);
    const double b11 = c * a.a11 + s * a.a12;
    const double b12 = -s * a.a11 + c * a.a12;
    const double b21 = c * a.a12 + s * a.a22;
    const double b22 = -s * a.a12 + c * a.a22;
    return {c * b11 + s * b21, -s * b11 + c * b21, -s * b12 + c * b22};
}

namespace {

template <typename F, typename DF>
SymMat2 apply_spectral(const SymMat2& a, F f, DF df) {
    const double ht = 0.5 * (a.a11 + a.a22);
    const double d = std::hypot(0.5 * (a.a11 - a.a22), a.a12);
    const double scale = std::abs(a.a11) + std::abs(a.a22) + std::abs(a.a12);
    if (d <= 1e-14 * scale || d == 0.0) {
        // Near-scalar matrix: first-order expansion avoids the cancellation
        // in the divided difference.
        const double fv = f(ht), dv = df(ht);
        return {fv + dv * (a.a11 - ht), dv * a.a12, fv + dv * (a.a22 - ht)};
    }
    const double l1 = ht + d, l2 = ht - d;
    const double f1 = f(l1), f2 = f(l2);
    // f(A) = f2*I + (f1-f2)/(l1-l2) * (A - l2*I)
    const double slope = (f1 - f2) / (l1 - l2);
    return {f2 + slope * (a.a11 - l2), slope * a.a12, f2 + slope * (a.a22 - l2)};
}

} // namespace

SymMat2 sym_log(const SymMat2& a) {
    require(a.positive_definite(), "sym_log: input not positive definite");
    return apply_spectral(
        a, [](double t) { return std::log(t); }, [](double t) { return 1.0 / t; });
}

SymMat2 sym_exp(const SymMat2& a) {
    return apply_spectral(
        a, [](double t) { return std::exp(t); }, [](double t) { return std::exp(t); });
}

void validate_matrix_field(const MatrixWeightField& f, const DomainMask& mask) {
    require(f.grid.cell_count() == mask.grid.cell_count(), "matrix field: grid mismatch");
    for (int j = 0; j < f.grid.ny; ++j) {
        for (int i = 0; i < f.grid.nx; ++i) {
            if (mask.exterior(i, j)) continue;
            const SymMat2& m = f.at(i, j);
            const bool finite =
                std::isfinite(m.a11) && std::isfinite(m.a12) && std::isfinite(m.a22);
            require(finite, "matrix field: non-finite entry at cell (" + std::to_string(i) +
                                "," + std::to_string(j) + ")");
            require(m.positive_definite(), "matrix field: not positive definite at cell (" +
                                               std::to_string(i) + "," + std::to_string(j) + ")");
            require(m.cond() <= f.lambda_declared * (1.0 + 1e-12),
                    "matrix field: condition number exceeds declared bound at cell (" +
                        std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
}

void measure_lambda(MatrixWeightField& f) {
    double lam = 1.0;
    for (const SymMat2& m : f.m) lam = std::max(lam, m.cond());
    f.lambda_declared = lam;
}

SymMat2 log_average(const MatrixWeightField& f, std::span<const int> cells) {
    require(!cells.empty(), "log_average: empty cell set");
    SymMat2 acc;
    for (int k : cells) acc = acc + sym_log(f.m[k]);
    return acc * (1.0 / static_cast<double>(cells.size()));
}

double log_bmo_seminorm(const MatrixWeightField& f, const DomainMask& mask, double R,
                        int threads) {
    require(R > 0.0, "log_bmo_seminorm: R must be positive");
    const Grid2D& g = mask.grid;
    require(f.grid.cell_count() == g.cell_count(), "log_bmo_seminorm: grid mismatch");

    // Cache log P componentwise; the per-ball deviation scan reads these flat.
    const int n = g.cell_count();
    std::vector<double> la(n, 0.0), lb(n, 0.0), lc(n, 0.0);
    std::vector<char> inside(n, 0);
    for (int k = 0; k < n; ++k) {
        if (mask.cls[k] == CellClass::Exterior) continue;
        const SymMat2 l = sym_log(f.m[k]);
        la[k] = l.a11;
        lb[k] = l.a12;
        lc[k] = l.a22;
        inside[k] = 1;
    }

    const std::vector<double> ladder = geometric_ladder(g.h, R, std::pow(2.0, 0.25));
    const std::vector<int> centers = mask.non_exterior_cells();
    std::vector<double> best_per_center(centers.size(), 0.0);

    parallel_for(static_cast<int>(centers.size()), threads, [&](int ci) {
        const int kc = centers[ci];
        const Vec2 z = g.center(kc % g.nx, kc / g.nx);
        double best = 0.0;
        for (double r : ladder) {
            IndexRange rows = strict_range(g.origin.y, g.h, z.y, r);
            rows.lo = std::max(rows.lo, 0);
            rows.hi = std::min(rows.hi, g.ny - 1);
            double sa = 0.0, sb = 0.0, sc = 0.0;
            long cnt = 0;
            for (int j = rows.lo; j <= rows.hi; ++j) {
                const double dy = g.y(j) - z.y;
                const double w = std::sqrt(std::max(0.0, r * r - dy * dy));
                IndexRange cols = strict_range(g.origin.x, g.h, z.x, w);
                cols.lo = std::max(cols.lo, 0);
                cols.hi = std::min(cols.hi, g.nx - 1);
                const int base = j * g.nx;
                for (int i = cols.lo; i <= cols.hi; ++i) {
                    const int k = base + i;
                    if (!inside[k]) continue;
                    sa += la[k];
                    sb += lb[k];
                    sc += lc[k];
                    ++cnt;
                }
            }
            if (cnt == 0) continue;
            const double ma = sa / cnt, mb = sb / cnt, mc = sc / cnt;
            double dev = 0.0;
            for (int j = rows.lo; j <= rows.hi; ++j) {
                const double dy = g.y(j) - z.y;
                const double w = std::sqrt(std::max(0.0, r * r - dy * dy));
                IndexRange cols = strict_range(g.origin.x, g.h, z.x, w);
                cols.lo = std::max(cols.lo, 0);
                cols.hi = std::min(cols.hi, g.nx - 1);
                const int base = j * g.nx;
                for (int i = cols.lo; i <= cols.hi; ++i) {
                    const int k = base + i;
                    if (!inside[k]) continue;
                    const double da = la[k] - ma, db = lb[k] - mb, dc = lc[k] - mc;
                    // Spectral norm of a symmetric deviation: |half-trace| + radius.
                    dev += std::abs(0.5 * (da + dc)) + std::hypot(0.5 * (da - dc), db);
                }
            }
            best = std::max(best, dev / static_cast<double>(cnt));
        }
        best_per_center[ci] = best;
    });

    double sup = 0.0;
    for (double b : best_per_center) sup = std::max(sup, b);
    return sup;
}

ScalarWeight scalar_weight_of(const MatrixWeightField& f) {
    ScalarWeight w(f.grid, WeightRole::Omega);
    for (int k = 0; k < f.grid.cell_count(); ++k) w.v[k] = f.m[k].spectral_norm();
    return w;
}

double ellipticity_lambda(const MatrixWeightField& f, const DomainMask& mask) {
    double lam = 1.0;
    for (int k = 0; k < f.grid.cell_count(); ++k)
        if (mask.cls[k] != CellClass::Exterior) lam = std::max(lam, f.m[k].cond());
    return lam;
}


double muckenhoupt_Aq(const ScalarWeight& w, const DomainMask& mask, double q,
                      std::span<const double> radius_ladder, BallWitness* witness) {
    require(q > 1.0 && std::isfinite(q), "muckenhoupt_Aq: q must lie in (1, inf)");
    require(!radius_ladder.empty(), "muckenhoupt_Aq: empty radius ladder");
    const Grid2D& g = mask.grid;
    const int n = g.cell_count();
    std::vector<double> mu(n, 0.0), muinv(n, 0.0), ones(n, 0.0);
    const double e = -1.0 / (q - 1.0);
    for (int k = 0; k < n; ++k) {
        if (mask.cls[k] == CellClass::Exterior) continue;
        require(w.v[k] > 0.0 && std::isfinite(w.v[k]),
                "muckenhoupt_Aq: weight must be positive on domain cells");
        mu[k] = w.v[k];
        muinv[k] = std::pow(w.v[k], e);
        ones[k] = 1.0;
    }
    const MaskedPrefix pmu(mask, mu), pinv(mask, muinv), pcnt(mask, ones);

    double best = 0.0;
    BallWitness bw;
    for (int k = 0; k < n; ++k) {
        if (mask.cls[k] == CellClass::Exterior) continue;
        const Vec2 z = g.center(k % g.nx, k / g.nx);
        for (double r : radius_ladder) {
            const double cnt = pcnt.disc_sum(z, r);
            if (cnt <= 0.0) continue;
            const double avg_mu = pmu.disc_sum(z, r) / cnt;
            const double avg_inv = pinv.disc_sum(z, r) / cnt;
            const double val = std::pow(avg_inv, q - 1.0) * avg_mu;
            if (val > best) {
                best = val;
                bw = {z, r, val};
            }
        }
    }
    if (witness) *witness = bw;
    return best;
}

std::vector<SubsetPair> make_subset_family(const DomainMask& mask, const ScalarWeight& w,
                                           std::uint64_t seed, int n_balls) {
    require(n_balls > 0, "make_subset_family: need at least one ball");
    const Grid2D& g = mask.grid;
    Rng rng(seed);
    const std::vector<int> domain = mask.non_exterior_cells();
    std::vector<SubsetPair> out;
    for (int b = 0; b < n_balls; ++b) {
        const int kc = domain[rng.below(domain.size())];
        const Vec2 z = g.center(kc % g.nx, kc / g.nx);
        const double r = rng.log_uniform(4.0 * g.h, std::max(8.0 * g.h, 0.5 * mask.diameter));
        std::vector<int> ball = ball_cells(mask, z, r);
        if (ball.size() < 8) continue;

        // The ball itself (t = 1).
        out.push_back({ball, ball});
        // Concentric sub-balls.
        for (double f : {0.5, 0.25, 0.125}) {
            std::vector<int> sub = ball_cells(mask, z, f * r);
            if (!sub.empty()) out.push_back({sub, ball});
        }
        // Random sub-cells.
        for (double frac : {0.1, 0.3, 0.5}) {
            std::vector<int> sub;
            for (int k : ball)
                if (rng.uniform() < frac) sub.push_back(k);
            if (!sub.empty()) out.push_back({sub, ball});
        }
        // Weight-ranked subsets stress the A-infinity sandwich in both
        // directions (mass concentration and mass starvation).
        std::vector<int> ranked = ball;
        std::sort(ranked.begin(), ranked.end(),
                  [&](int a, int c) { return w.v[a] != w.v[c] ? w.v[a] > w.v[c] : a < c; });
        for (double frac : {0.1, 0.25}) {
            const std::size_t m =
                std::max<std::size_t>(1, static_cast<std::size_t>(frac * ranked.size()));
            out.push_back({std::vector<int>(ranked.begin(), ranked.begin() + m), ball});
            out.push_back({std::vector<int>(ranked.end() - m, ranked.end()), ball});
        }
    }
    require(!out.empty(), "make_subset_family: no usable balls (domain too small)");
    return out;
}

AInftyParams a_infty_params(const ScalarWeight& w, const DomainMask& mask,
                            std::span<const SubsetPair> family) {
    require(!family.empty(), "a_infty_params: empty subset family");
    double mass_total = 0.0;
    for (int k : mask.non_exterior_cells()) {
        require(w.v[k] > 0.0, "a_infty_params: weight must be positive on domain cells");
        mass_total += w.v[k];
    }
    require(mass_total > 0.0, "a_infty_params: zero-mass weight");

    auto mass = [&](std::span<const int> cells) {
        double s = 0.0;
        for (int k : cells) s += w.v[k];
        return s;
    };

    double nu_min = std::numeric_limits<double>::infinity();
    double nu_max = 0.0;
    bool saw_proper = false;
    for (const SubsetPair& pr : family) {
        require(!pr.ball.empty() && !pr.subset.empty(), "a_infty_params: empty pair member");
        const double t = static_cast<double>(pr.subset.size()) / pr.ball.size();
        if (t >= 1.0) continue;
        const double ratio = mass(pr.subset) / mass(pr.ball);
        const double expo = std::log(ratio) / std::log(t);
        nu_min = std::min(nu_min, expo);
        nu_max = std::max(nu_max, expo);
        saw_proper = true;
    }
    AInftyParams p;
    if (!saw_proper) return p; // only t = 1 pairs: (1,1,1,1) is exact

    // Nudge the exponents so that c1 = c2 = 1 is feasible despite FP
    // round-off at the envelope-attaining pairs (smaller nu weakens the
    // upper bound, larger nu weakens the lower one).
    p.nu2 = std::max(nu_min * (1.0 - 1e-9), 1e-12);
    p.nu1 = nu_max * (1.0 + 1e-9) + 1e-15;
    double c2 = 1.0, c1 = 1.0;
    for (const SubsetPair& pr : family) {
        const double t = static_cast<double>(pr.subset.size()) / pr.ball.size();
        const double ratio = mass(pr.subset) / mass(pr.ball);
        c2 = std::max(c2, ratio / std::pow(t, p.nu2));
        c1 = std::min(c1, ratio / std::pow(t, p.nu1));
    }
    p.c2 = c2;
    p.c1 = c1;
    return p;
}

double FourierModes::eval(double x, double y) const {
    double s = offset;
    for (const Mode& m : modes) s += m.amp * std::sin(m.ax * x + m.ay * y + m.phase);
    return s;
}

Vec2 FourierModes::grad(double x, double y) const {
    Vec2 g;
    for (const Mode& m : modes) {
        const double c = m.amp * std::cos(m.ax * x + m.ay * y + m.phase);
        g.x += c * m.ax;
        g.y += c * m.ay;
    }
    return g;
}

FourierModes FourierModes::random(Rng& rng, int n_modes, int max_wavenumber, double amp_scale) {
    FourierModes f;
    const double two_pi = 6.283185307179586476925286766559;
    for (int k = 0; k < n_modes; ++k) {
        Mode m;
        m.ax = two_pi * static_cast<double>(1 + rng.below(max_wavenumber));
        m.ay = two_pi * static_cast<double>(1 + rng.below(max_wavenumber));
        if (rng.uniform() < 0.5) m.ax = -m.ax;
        m.amp = amp_scale * rng.uniform(0.5, 1.0);
        m.phase = rng.uniform(0.0, two_pi);
        f.modes.push_back(m);
    }
    return f;
}

MatrixWeightField constant_matrix_field(const Grid2D& grid, const SymMat2& value) {
    require(value.positive_definite(), "constant_matrix_field: value must be PD");
    MatrixWeightField f(grid);
    for (auto& m : f.m) m = value;
    measure_lambda(f);
    return f;
}

MatrixWeightField rotated_anisotropy_field(const Grid2D& grid, double a,
                                           const FourierModes& theta) {
    require(std::isfinite(a) && a >= 0.0, "rotated_anisotropy_field: bad amplitude");
    MatrixWeightField f(grid);
    const SymMat2 core = SymMat2::diag(a, -a);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            f.at(i, j) = sym_exp(rotate_congruence(core, theta.eval(grid.x(i), grid.y(j))));
    measure_lambda(f);
    return f;
}

MatrixWeightField checkerboard_matrix_field(const Grid2D& grid, double lo, double hi,
                                            int block) {
    require(lo > 0.0 && hi > 0.0, "checkerboard_matrix_field: phases must be positive");
    require(block >= 1, "checkerboard_matrix_field: block must be >= 1");
    MatrixWeightField f(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const bool odd = ((i / block) + (j / block)) % 2 == 1;
            const double v = odd ? hi : lo;
            f.at(i, j) = SymMat2::diag(v, v);
        }
    measure_lambda(f);
    return f;
}

MatrixWeightField power_matrix_field(const Grid2D& grid, double beta, Vec2 center) {
    MatrixWeightField f(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double d = (grid.center(i, j) - center).norm();
            require(d > 0.0, "power_matrix_field: center coincides with a cell center");
            const double v = std::pow(d, beta);
            f.at(i, j) = SymMat2::diag(v, v);
        }
    measure_lambda(f);
    return f;
}

ScalarWeight constant_weight(const Grid2D& grid, double c, WeightRole role) {
    require(c >= 0.0 && std::isfinite(c), "constant_weight: bad value");
    ScalarWeight w(grid, role);
    std::fill(w.v.begin(), w.v.end(), c);
    return w;
}

ScalarWeight checkerboard_weight(const Grid2D& grid, double lo, double hi, int block) {
    require(block >= 1, "checkerboard_weight: block must be >= 1");
    ScalarWeight w(grid, WeightRole::Mu);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            w.v[grid.idx(i, j)] = ((i / block) + (j / block)) % 2 == 1 ? hi : lo;
    return w;
}

ScalarWeight power_weight(const Grid2D& grid, double beta, Vec2 center) {
    ScalarWeight w(grid, WeightRole::Mu);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double d = (grid.center(i, j) - center).norm();
            require(d > 0.0 || beta >= 0.0, "power_weight: singular at a cell center");
            w.v[grid.idx(i, j)] = std::pow(d, beta);
        }
    return w;
}

} // namespace deglap
