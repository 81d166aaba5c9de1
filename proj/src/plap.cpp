#include "deglap/plap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace deglap {

namespace {

// Flux |P v|^{p-2} P(P v) with the continuity convention flux(0) = 0 (valid
// for every p > 1 since |P v|^{p-1} -> 0).
Vec2 flux_vector(const SymMat2& P, Vec2 v, double p) {
    const Vec2 pv = P.apply(v);
    const double n = pv.norm();
    if (n == 0.0) return {0.0, 0.0};
    return P.apply(pv) * std::pow(n, p - 2.0);
}

struct GradStencil {
    int c = 0, cx = 0, cy = 0;  // cell, +e1 neighbor, +e2 neighbor
    SymMat2 P;
    Vec2 a;          // |P F|^{p-2} P(P F) at c, zero when P F vanishes
    double pf = 0.0;  // |P F| at c, for the data scale
};

// Cell classes for one minimization: 0 outside, 1 pinned, 2 free.
struct RegionProblem {
    const Grid2D* grid = nullptr;
    double p = 2.0;
    double h2 = 0.0;
    std::vector<char> rc;
    std::vector<int> free_cells;
    std::vector<int> dof;  // cell -> dof index, -1 when not free
    std::vector<GradStencil> sten;
};

RegionProblem build_region(const Grid2D& g, const MatrixWeightField& P, double p,
                           std::vector<char> rc, const VectorField* F) {
    RegionProblem rp;
    rp.grid = &g;
    rp.p = p;
    rp.h2 = g.h * g.h;
    rp.rc = std::move(rc);
    rp.dof.assign(g.cell_count(), -1);
    for (int k = 0; k < g.cell_count(); ++k) {
        if (rp.rc[k] != 2) continue;
        rp.dof[k] = static_cast<int>(rp.free_cells.size());
        rp.free_cells.push_back(k);
    }
    for (int j = 0; j + 1 < g.ny; ++j) {
        for (int i = 0; i + 1 < g.nx; ++i) {
            const int c = g.idx(i, j), cx = g.idx(i + 1, j), cy = g.idx(i, j + 1);
            if (rp.rc[c] == 0 || rp.rc[cx] == 0 || rp.rc[cy] == 0) continue;
            GradStencil s;
            s.c = c;
            s.cx = cx;
            s.cy = cy;
            s.P = P.m[c];
            if (F) {
                const Vec2 fv = F->at(i, j);
                s.pf = s.P.apply(fv).norm();
                s.a = flux_vector(s.P, fv, p);
            }
            rp.sten.push_back(s);
        }
    }
    return rp;
}

double region_energy(const RegionProblem& rp, const std::vector<double>& w, double delta) {
    const double invh = 1.0 / rp.grid->h;
    const double d2 = delta * delta;
    double acc = 0.0;
    for (const GradStencil& s : rp.sten) {
        const Vec2 gv{(w[s.cx] - w[s.c]) * invh, (w[s.cy] - w[s.c]) * invh};
        const Vec2 pg = s.P.apply(gv);
        acc += std::pow(pg.norm2() + d2, 0.5 * rp.p) - rp.p * s.a.dot(gv);
    }
    return acc * rp.h2;
}

void region_gradient(const RegionProblem& rp, const std::vector<double>& w, double delta,
                     std::vector<double>& grad) {
    grad.assign(rp.free_cells.size(), 0.0);
    const double invh = 1.0 / rp.grid->h;
    const double d2 = delta * delta;
    const double fc = rp.h2 * rp.p;
    for (const GradStencil& s : rp.sten) {
        const Vec2 gv{(w[s.cx] - w[s.c]) * invh, (w[s.cy] - w[s.c]) * invh};
        const Vec2 pg = s.P.apply(gv);
        const double s1 = std::pow(pg.norm2() + d2, 0.5 * rp.p - 1.0);
        const Vec2 q = s.P.apply(pg) * s1;
        const Vec2 r{q.x - s.a.x, q.y - s.a.y};
        if (rp.dof[s.c] >= 0) grad[rp.dof[s.c]] -= fc * (r.x + r.y) * invh;
        if (rp.dof[s.cx] >= 0) grad[rp.dof[s.cx]] += fc * r.x * invh;
        if (rp.dof[s.cy] >= 0) grad[rp.dof[s.cy]] += fc * r.y * invh;
    }
}

// Unregularized weak-form imbalance at every free cell (hat tests).
std::vector<double> region_residual(const RegionProblem& rp, const std::vector<double>& w) {
    std::vector<double> res(rp.free_cells.size(), 0.0);
    const double invh = 1.0 / rp.grid->h;
    for (const GradStencil& s : rp.sten) {
        const Vec2 gv{(w[s.cx] - w[s.c]) * invh, (w[s.cy] - w[s.c]) * invh};
        const Vec2 q = flux_vector(s.P, gv, rp.p);
        const Vec2 r{q.x - s.a.x, q.y - s.a.y};
        if (rp.dof[s.c] >= 0) res[rp.dof[s.c]] -= rp.h2 * (r.x + r.y) * invh;
        if (rp.dof[s.cx] >= 0) res[rp.dof[s.cx]] += rp.h2 * r.x * invh;
        if (rp.dof[s.cy] >= 0) res[rp.dof[s.cy]] += rp.h2 * r.y * invh;
    }
    return res;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void region_hessian(const RegionProblem& rp, const std::vector<double>& w, double delta,
                    std::vector<Eigen::Triplet<double>>& trips) {
    trips.clear();
    const double invh = 1.0 / rp.grid->h;
    const double d2 = delta * delta;
    const double p = rp.p;
    const double fc = rp.h2 * p;
    const Vec2 D[3] = {{-invh, -invh}, {invh, 0.0}, {0.0, invh}};
    for (const GradStencil& s : rp.sten) {
        const int cells[3] = {s.c, s.cx, s.cy};
        const Vec2 gv{(w[s.cx] - w[s.c]) * invh, (w[s.cy] - w[s.c]) * invh};
        const Vec2 pg = s.P.apply(gv);
        const double m2 = pg.norm2() + d2;
        const double s1 = std::pow(m2, 0.5 * p - 1.0);
        const double c2 = p == 2.0 ? 0.0 : (p - 2.0) * std::pow(m2, 0.5 * p - 2.0);
        Vec2 pd[3];
        double b[3];
        for (int t = 0; t < 3; ++t) {
            pd[t] = s.P.apply(D[t]);
            b[t] = pg.dot(pd[t]);
        }
        for (int si = 0; si < 3; ++si) {
            const int ks = rp.dof[cells[si]];
            if (ks < 0) continue;
            for (int ti = 0; ti < 3; ++ti) {
                const int kt = rp.dof[cells[ti]];
                if (kt < 0) continue;
                trips.emplace_back(ks, kt, fc * (s1 * pd[si].dot(pd[ti]) + c2 * b[si] * b[ti]));
            }
        }
    }
}

struct StageResult {
    int iters = 0;
    bool stagnated = false;
};

StageResult newton_stage(const RegionProblem& rp, std::vector<double>& w, double delta,
                         double gtol, int max_iter, SolveReport& rep) {
    const int n = static_cast<int>(rp.free_cells.size());
    StageResult out;
    if (n == 0) return out;
    std::vector<double> grad, gtrial;
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::SparseMatrix<double> H(n, n);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    std::vector<double> wc = w;
    double cur = region_energy(rp, w, delta);
    for (; out.iters < max_iter; ++out.iters) {
        region_gradient(rp, w, delta, grad);
        const double gn = max_abs(grad);
        if (gn <= gtol) return out;
        region_hessian(rp, w, delta, trips);
        H.setFromTriplets(trips.begin(), trips.end());
        Eigen::VectorXd rhs(n);
        for (int k = 0; k < n; ++k) rhs[k] = -grad[k];
        solver.compute(H);
        Eigen::VectorXd d;
        bool fallback = solver.info() != Eigen::Success;
        if (!fallback) {
            d = solver.solve(rhs);
            fallback = solver.info() != Eigen::Success;
        }
        if (fallback) {
            d = rhs;
            ++rep.gradient_fallbacks;
        }
        double slope = 0.0;
        for (int k = 0; k < n; ++k) slope += grad[k] * d[k];
        if (!(slope < 0.0)) {
            if (fallback) {
                out.stagnated = true;
                return out;
            }
            d = rhs;
            slope = -rhs.squaredNorm();
            ++rep.gradient_fallbacks;
            if (!(slope < 0.0)) {
                out.stagnated = true;
                return out;
            }
        }
        // Near the minimizer the per-step energy decrease drops below the
        // representable resolution of the energy itself; the gradient does
        // not, so flat-energy steps are accepted on gradient-norm decrease.
        const double flat_slack = 1e-12 * std::max(1.0, std::abs(cur));
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            for (int k = 0; k < n; ++k) wc[rp.free_cells[k]] = w[rp.free_cells[k]] + t * d[k];
            const double cand = region_energy(rp, wc, delta);
            if (!std::isfinite(cand)) continue;
            accepted = cand < cur + 1e-4 * t * slope;
            if (!accepted && ls < 8 && cand <= cur + flat_slack) {
                region_gradient(rp, wc, delta, gtrial);
                accepted = max_abs(gtrial) <= (1.0 - 1e-4) * gn;
            }
            if (accepted) {
                w.swap(wc);
                cur = cand;
                rep.energy_trace.push_back(cand);
                break;
            }
        }
        if (!accepted) {
            out.stagnated = true;
            return out;
        }
    }
    return out;
}

SolveReport run_solve(const RegionProblem& rp, std::vector<double> w, double delta_hint,
                      double tol, int max_iter) {
    require(max_iter >= 1, "solve: max_iter must be >= 1");
    SolveReport rep;
    const Grid2D& g = *rp.grid;
    const double invh = 1.0 / g.h;
    double scale = 0.0;
    for (const GradStencil& s : rp.sten) {
        const Vec2 gv{(w[s.cx] - w[s.c]) * invh, (w[s.cy] - w[s.c]) * invh};
        scale = std::max({scale, s.pf, s.P.apply(gv).norm()});
    }
    const auto finish = [&](bool converged) {
        rep.u = ScalarField(g);
        rep.u.v = std::move(w);
        rep.energy = region_energy(rp, rep.u.v, 0.0);
        rep.converged = converged;
        return rep;
    };
    if (scale == 0.0) {
        // P F = 0 and the pinned data admit a constant extension: the initial
        // guess is already the minimizer.
        rep.weak_residual = max_abs(region_residual(rp, w));
        rep.delta_path.push_back(0.0);
        return finish(true);
    }
    if (tol <= 0.0) tol = 1e-9 * std::max(1.0, std::abs(region_energy(rp, w, 0.0)));
    const double gtol = 0.2 * rp.p * tol;
    // The unregularized residual of the delta-minimizer carries a flux bias
    // of order delta^{p-1}, so for p < 2 the floor must sit much deeper.
    const double floor_expo = rp.p < 2.0 ? std::min(2.0, 1.0 / (rp.p - 1.0)) : 1.0;
    const double delta_floor = std::pow(1e-8, floor_expo) * scale;
    double delta = rp.p == 2.0 ? 0.0 : (delta_hint > 0.0 ? delta_hint : 0.1 * scale);
    bool stagnated = false;
    while (true) {
        rep.delta_path.push_back(delta);
        const StageResult sr = newton_stage(rp, w, delta, gtol, max_iter, rep);
        rep.iterations += sr.iters;
        stagnated = sr.stagnated;
        rep.weak_residual = max_abs(region_residual(rp, w));
        if (std::getenv("DEGLAP_STAGE_DEBUG")) {
            std::vector<double> gdbg;
            region_gradient(rp, w, delta, gdbg);
            std::fprintf(stderr, "stage delta=%.3e iters=%d stag=%d grad=%.3e R0=%.3e\n", delta,
                         sr.iters, sr.stagnated ? 1 : 0, max_abs(gdbg), rep.weak_residual);
        }
        if (rep.weak_residual <= tol) return finish(true);
        if (rp.p == 2.0 || delta <= delta_floor) break;
        delta = std::max(0.25 * delta, delta_floor);
    }
    rep.notes = stagnated ? "line search stagnated before reaching tol"
                          : "continuation exhausted before reaching tol";
    return finish(false);
}

std::vector<char> mask_region_classes(const DomainMask& mask) {
    std::vector<char> rc(mask.grid.cell_count(), 0);
    for (int k = 0; k < mask.grid.cell_count(); ++k) {
        if (mask.cls[k] == CellClass::Boundary) rc[k] = 1;
        else if (mask.cls[k] == CellClass::Interior) rc[k] = 2;
    }
    return rc;
}

void validate_vector_field(const VectorField& f, const DomainMask& mask,
                           const std::string& what) {
    require(f.grid.cell_count() == mask.grid.cell_count(), what + ": grid mismatch");
    for (int k = 0; k < mask.grid.cell_count(); ++k) {
        if (mask.cls[k] == CellClass::Exterior)
            require(f.x[k] == 0.0 && f.y[k] == 0.0, what + ": nonzero value on exterior cell");
        else
            require(std::isfinite(f.x[k]) && std::isfinite(f.y[k]),
                    what + ": non-finite value on domain cell");
    }
}

} // namespace

void validate_problem(const ProblemSpec& spec) {
    require(spec.p > 1.0 && std::isfinite(spec.p), "problem: p must lie in (1, inf)");
    require(spec.delta >= 0.0 && std::isfinite(spec.delta), "problem: delta must be >= 0");
    require(static_cast<int>(spec.mask.cls.size()) == spec.mask.grid.cell_count(),
            "problem: malformed domain mask");
    validate_matrix_field(spec.P, spec.mask);
    validate_field(spec.g, spec.mask, "problem datum g");
    validate_vector_field(spec.F, spec.mask, "problem datum F");
}

std::vector<int> gradient_cells(const DomainMask& mask) {
    const Grid2D& g = mask.grid;
    std::vector<int> out;
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            if (mask.non_exterior(i, j) && mask.non_exterior(i + 1, j) &&
                mask.non_exterior(i, j + 1))
                out.push_back(g.idx(i, j));
    return out;
}

VectorField forward_gradient(const ScalarField& w, const DomainMask& mask) {
    require(w.grid.cell_count() == mask.grid.cell_count(), "forward_gradient: grid mismatch");
    const Grid2D& g = mask.grid;
    VectorField out(g);
    const double invh = 1.0 / g.h;
    for (int k : gradient_cells(mask)) {
        const int i = k % g.nx, j = k / g.nx;
        out.set(i, j, {(w.at(i + 1, j) - w.at(i, j)) * invh, (w.at(i, j + 1) - w.at(i, j)) * invh});
    }
    return out;
}

ScalarField p_power_field(const MatrixWeightField& P, const VectorField& v, double p,
                          const DomainMask& mask) {
    require(p > 0.0, "p_power_field: p must be positive");
    require(P.grid.cell_count() == mask.grid.cell_count() &&
                v.grid.cell_count() == mask.grid.cell_count(),
            "p_power_field: grid mismatch");
    ScalarField out(mask.grid);
    for (int k = 0; k < mask.grid.cell_count(); ++k) {
        if (mask.cls[k] == CellClass::Exterior) continue;
        const Vec2 pv = P.m[k].apply({v.x[k], v.y[k]});
        const double n = pv.norm();
        out.v[k] = n == 0.0 ? 0.0 : std::pow(n, p);
    }
    return out;
}

double energy(const ProblemSpec& spec, const ScalarField& w) {
    validate_problem(spec);
    validate_field(w, spec.mask, "energy argument");
    for (int k = 0; k < spec.mask.grid.cell_count(); ++k)
        if (spec.mask.cls[k] == CellClass::Boundary)
            require(w.v[k] == spec.g.v[k], "energy: w must equal g on boundary cells");
    const RegionProblem rp =
        build_region(spec.mask.grid, spec.P, spec.p, mask_region_classes(spec.mask), &spec.F);
    return region_energy(rp, w.v, spec.delta);
}

double energy_and_gradient(const ProblemSpec& spec, const ScalarField& w, double delta,
                           ScalarField& grad) {
    validate_problem(spec);
    require(delta >= 0.0, "energy_and_gradient: delta must be >= 0");
    const RegionProblem rp =
        build_region(spec.mask.grid, spec.P, spec.p, mask_region_classes(spec.mask), &spec.F);
    std::vector<double> gv;
    region_gradient(rp, w.v, delta, gv);
    grad = ScalarField(spec.mask.grid);
    for (std::size_t k = 0; k < rp.free_cells.size(); ++k)
        grad.v[rp.free_cells[k]] = gv[k];
    return region_energy(rp, w.v, delta);
}

double weak_residual_max(const ProblemSpec& spec, const ScalarField& u) {
    validate_problem(spec);
    const RegionProblem rp =
        build_region(spec.mask.grid, spec.P, spec.p, mask_region_classes(spec.mask), &spec.F);
    return max_abs(region_residual(rp, u.v));
}

double weak_form_imbalance(const ProblemSpec& spec, const ScalarField& u,
                           const ScalarField& phi) {
    validate_problem(spec);
    const Grid2D& g = spec.mask.grid;
    require(u.grid.cell_count() == g.cell_count() && phi.grid.cell_count() == g.cell_count(),
            "weak_form_imbalance: grid mismatch");
    const double invh = 1.0 / g.h;
    double acc = 0.0;
    for (int k : gradient_cells(spec.mask)) {
        const int i = k % g.nx, j = k / g.nx;
        const Vec2 gu{(u.at(i + 1, j) - u.at(i, j)) * invh, (u.at(i, j + 1) - u.at(i, j)) * invh};
        const Vec2 gp{(phi.at(i + 1, j) - phi.at(i, j)) * invh,
                      (phi.at(i, j + 1) - phi.at(i, j)) * invh};
        const Vec2 q = flux_vector(spec.P.m[k], gu, spec.p);
        const Vec2 a = flux_vector(spec.P.m[k], spec.F.at(i, j), spec.p);
        acc += (q.x - a.x) * gp.x + (q.y - a.y) * gp.y;
    }
    return acc * g.h * g.h;
}

std::vector<int> region_rim(const DomainMask& mask, std::span<const int> region_cells) {
    const Grid2D& g = mask.grid;
    std::vector<char> in(g.cell_count(), 0);
    for (int k : region_cells) {
        require(k >= 0 && k < g.cell_count(), "region_rim: cell index out of range");
        require(mask.cls[k] != CellClass::Exterior, "region_rim: region contains exterior cells");
        in[k] = 1;
    }
    std::vector<int> rim;
    for (int k : region_cells) {
        const int i = k % g.nx, j = k / g.nx;
        bool edge = false;
        for (int dj = -1; dj <= 1 && !edge; ++dj)
            for (int di = -1; di <= 1 && !edge; ++di) {
                if (di == 0 && dj == 0) continue;
                const int ii = i + di, jj = j + dj;
                if (!g.in_lattice(ii, jj) || !in[g.idx(ii, jj)]) edge = true;
            }
        if (edge) rim.push_back(k);
    }
    return rim;
}

SolveReport solve(const ProblemSpec& spec, double tol, int max_iter) {
    validate_problem(spec);
    const Grid2D& g = spec.mask.grid;
    RegionProblem rp =
        build_region(g, spec.P, spec.p, mask_region_classes(spec.mask), &spec.F);
    std::vector<double> w(g.cell_count(), 0.0);
    for (int k = 0; k < g.cell_count(); ++k)
        if (spec.mask.cls[k] == CellClass::Boundary) w[k] = spec.g.v[k];
    return run_solve(rp, std::move(w), spec.delta, tol, max_iter);
}

SolveReport solve_homogeneous(const ProblemSpec& spec, std::span<const int> region_cells,
                              const ScalarField& boundary_values, double tol, int max_iter) {
    validate_problem(spec);
    const Grid2D& g = spec.mask.grid;
    require(!region_cells.empty(), "solve_homogeneous: empty region");
    require(boundary_values.grid.cell_count() == g.cell_count(),
            "solve_homogeneous: boundary value grid mismatch");
    const std::vector<int> rim = region_rim(spec.mask, region_cells);
    std::vector<char> rc(g.cell_count(), 0);
    for (int k : region_cells) rc[k] = 2;
    for (int k : rim) rc[k] = 1;
    std::vector<double> w(g.cell_count(), 0.0);
    for (int k : rim) {
        require(std::isfinite(boundary_values.v[k]),
                "solve_homogeneous: non-finite boundary value on the rim");
        w[k] = boundary_values.v[k];
    }
    RegionProblem rp = build_region(g, spec.P, spec.p, std::move(rc), nullptr);
    return run_solve(rp, std::move(w), spec.delta, tol, max_iter);
}

Vec2 v_p_map(Vec2 zeta, double p) {
    require(p > 1.0, "v_p_map: p must exceed 1");
    const double n = zeta.norm();
    if (n == 0.0) return {0.0, 0.0};
    return zeta * std::pow(n, 0.5 * (p - 2.0));
}

double shifted_N(double a, double t, double p) {
    require(p > 1.0, "shifted_N: p must exceed 1");
    require(a >= 0.0 && t >= 0.0, "shifted_N: arguments must be non-negative");
    if (t == 0.0) return 0.0;
    if (t <= a) return 0.5 * std::pow(a, p - 2.0) * t * t;
    const double ap = a == 0.0 ? 0.0 : std::pow(a, p);
    return 0.5 * ap + (std::pow(t, p) - ap) / p;
}

} // namespace deglap
