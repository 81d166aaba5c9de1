#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <vector>

#include "deglap/grid.hpp"
#include "deglap/matrix_weight.hpp"
#include "deglap/plap.hpp"
#include "deglap/rng.hpp"

using namespace deglap;

namespace {

ScalarField affine_field(const Grid2D& g, double c0, double cx, double cy) {
    ScalarField f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 z = g.center(i, j);
            f.at(i, j) = c0 + cx * z.x + cy * z.y;
        }
    return f;
}

ScalarField smooth_field(const Grid2D& g) {
    ScalarField f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 z = g.center(i, j);
            f.at(i, j) = z.x + 0.3 * std::sin(2.0 * z.x) * std::cos(3.0 * z.y);
        }
    return f;
}

ProblemSpec base_problem(int n, double p) {
    ProblemSpec spec;
    spec.mask = make_rect_domain(n, n, 1.0 / n);
    spec.P = constant_matrix_field(spec.mask.grid, SymMat2::identity());
    spec.p = p;
    spec.F = VectorField(spec.mask.grid);
    spec.g = ScalarField(spec.mask.grid);
    return spec;
}

double max_error(const ScalarField& a, const ScalarField& b, const DomainMask& mask) {
    double m = 0.0;
    for (int k = 0; k < mask.grid.cell_count(); ++k)
        if (mask.cls[k] != CellClass::Exterior)
            m = std::max(m, std::abs(a.v[k] - b.v[k]));
    return m;
}

} // namespace

TEST_CASE("gradient cells and forward gradient") {
    const DomainMask m = make_rect_domain(6, 5, 0.5);
    const std::vector<int> gc = gradient_cells(m);
    CHECK(gc.size() == 5 * 4);
    for (int k : gc) {
        const int i = k % 6, j = k / 6;
        CHECK(i < 5);
        CHECK(j < 4);
    }

    const ScalarField f = affine_field(m.grid, 0.4, 1.3, -0.7);
    const VectorField grad = forward_gradient(f, m);
    std::vector<char> is_gc(m.grid.cell_count(), 0);
    for (int k : gc) is_gc[k] = 1;
    for (int k = 0; k < m.grid.cell_count(); ++k) {
        if (is_gc[k]) {
            CHECK(grad.x[k] == doctest::Approx(1.3).epsilon(1e-13));
            CHECK(grad.y[k] == doctest::Approx(-0.7).epsilon(1e-13));
        } else {
            CHECK(grad.x[k] == 0.0);
            CHECK(grad.y[k] == 0.0);
        }
    }
}

TEST_CASE("p power field applies the matrix before the norm") {
    const DomainMask m = make_rect_domain(4, 4, 1.0);
    MatrixWeightField P = constant_matrix_field(m.grid, SymMat2::diag(2.0, 0.5));
    P.lambda_declared = 16.0;
    VectorField v(m.grid);
    for (int k = 0; k < 16; ++k) v.set(k % 4, k / 4, {1.0, 1.0});
    const ScalarField w = p_power_field(P, v, 3.0, m);
    const double expect = std::pow(std::hypot(2.0, 0.5), 3.0);
    for (int k = 0; k < 16; ++k) CHECK(w.v[k] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("region rim follows the 8-neighbor rule") {
    const DomainMask m = make_rect_domain(10, 10, 0.1);
    std::vector<int> block;
    for (int j = 3; j < 6; ++j)
        for (int i = 4; i < 7; ++i) block.push_back(m.grid.idx(i, j));
    const std::vector<int> rim = region_rim(m, block);
    CHECK(rim.size() == 8);
    for (int k : rim) CHECK(k != m.grid.idx(5, 4));

    std::vector<int> corner = {m.grid.idx(0, 0), m.grid.idx(1, 0), m.grid.idx(0, 1),
                               m.grid.idx(1, 1)};
    CHECK(region_rim(m, corner).size() == 4);
    CHECK_THROWS_AS(region_rim(m, std::vector<int>{-1}), std::invalid_argument);
}

TEST_CASE("affine data is reproduced exactly") {
    for (double p : {1.5, 2.0, 3.0}) {
        for (int variant = 0; variant < 2; ++variant) {
            ProblemSpec spec = base_problem(16, p);
            if (variant == 1)
                spec.P = constant_matrix_field(spec.mask.grid, SymMat2::diag(2.0, 1.0));
            measure_lambda(spec.P);
            spec.g = affine_field(spec.mask.grid, 0.1, 0.8, -0.5);
            const SolveReport rep = solve(spec, 1e-12);
            CHECK(rep.converged);
            CHECK(max_error(rep.u, spec.g, spec.mask) <= 1e-10);
        }
    }
}

TEST_CASE("F equal to the forward gradient of g pins u to g") {
    for (double p : {1.5, 2.5}) {
        ProblemSpec spec = base_problem(16, p);
        spec.g = smooth_field(spec.mask.grid);
        spec.F = forward_gradient(spec.g, spec.mask);
        const SolveReport rep = solve(spec, 1e-13);
        CHECK(rep.converged);
        CHECK(max_error(rep.u, spec.g, spec.mask) <= 1e-8);
        CHECK(weak_residual_max(spec, spec.g) <= 1e-12);
    }
}

TEST_CASE("p = 2 identity weight matches a five-point Poisson solve") {
    const int n = 20;
    ProblemSpec spec = base_problem(n, 2.0);
    spec.g = smooth_field(spec.mask.grid);
    Rng rng(3);
    for (int k = 0; k < spec.mask.grid.cell_count(); ++k) {
        spec.F.x[k] = rng.uniform(-1.0, 1.0);
        spec.F.y[k] = rng.uniform(-1.0, 1.0);
    }
    const SolveReport rep = solve(spec, 1e-13);
    REQUIRE(rep.converged);

    const Grid2D& g = spec.mask.grid;
    const double h = g.h;
    std::vector<int> row_of(g.cell_count(), -1);
    std::vector<int> interior;
    for (int k = 0; k < g.cell_count(); ++k)
        if (spec.mask.cls[k] == CellClass::Interior) {
            row_of[k] = static_cast<int>(interior.size());
            interior.push_back(k);
        }
    const int N = static_cast<int>(interior.size());
    Eigen::SparseMatrix<double> A(N, N);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
    std::vector<Eigen::Triplet<double>> trip;
    for (int r = 0; r < N; ++r) {
        const int k = interior[r];
        const int i = k % g.nx, j = k / g.nx;
        trip.emplace_back(r, r, 4.0);
        const int nb[4] = {g.idx(i - 1, j), g.idx(i + 1, j), g.idx(i, j - 1),
                           g.idx(i, j + 1)};
        for (int q : nb) {
            if (row_of[q] >= 0)
                trip.emplace_back(r, row_of[q], -1.0);
            else
                b[r] += spec.g.v[q];
        }
        b[r] += h * (spec.F.x[g.idx(i - 1, j)] - spec.F.x[k] +
                     spec.F.y[g.idx(i, j - 1)] - spec.F.y[k]);
    }
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    REQUIRE(ldlt.info() == Eigen::Success);
    const Eigen::VectorXd x = ldlt.solve(b);

    double err = 0.0;
    for (int r = 0; r < N; ++r) err = std::max(err, std::abs(rep.u.v[interior[r]] - x[r]));
    CHECK(err <= 1e-8);
    for (int k = 0; k < g.cell_count(); ++k)
        if (spec.mask.cls[k] == CellClass::Boundary) CHECK(rep.u.v[k] == spec.g.v[k]);
}

TEST_CASE("energy gradient agrees with central differences") {
    ProblemSpec spec = base_problem(12, 2.7);
    spec.g = smooth_field(spec.mask.grid);
    Rng rng(19);
    for (int k = 0; k < spec.mask.grid.cell_count(); ++k) {
        spec.F.x[k] = rng.uniform(-0.5, 0.5);
        spec.F.y[k] = rng.uniform(-0.5, 0.5);
    }
    ScalarField w = spec.g;
    const std::vector<int> interior = spec.mask.cells_of(CellClass::Interior);
    for (int k : interior) w.v[k] += rng.uniform(-0.3, 0.3);

    const double delta = 0.05;
    ScalarField grad(spec.mask.grid);
    energy_and_gradient(spec, w, delta, grad);

    for (int trial = 0; trial < 100; ++trial) {
        ScalarField dir(spec.mask.grid);
        for (int k : interior) dir.v[k] = rng.uniform(-1.0, 1.0);
        double dot = 0.0;
        for (int k : interior) dot += grad.v[k] * dir.v[k];

        const double eps = 1e-6;
        ScalarField wp = w, wm = w;
        for (int k : interior) {
            wp.v[k] += eps * dir.v[k];
            wm.v[k] -= eps * dir.v[k];
        }
        ScalarField scratch(spec.mask.grid);
        const double ep = energy_and_gradient(spec, wp, delta, scratch);
        const double em = energy_and_gradient(spec, wm, delta, scratch);
        const double fd = (ep - em) / (2.0 * eps);
        CHECK(std::abs(fd - dot) <= 1e-5 * std::max(1.0, std::abs(dot)));
    }
}

TEST_CASE("maximum principle without volume data") {
    ProblemSpec spec = base_problem(24, 2.0);
    spec.g = smooth_field(spec.mask.grid);
    const SolveReport rep = solve(spec);
    REQUIRE(rep.converged);
    double lo = 1e300, hi = -1e300;
    for (int k : spec.mask.cells_of(CellClass::Boundary)) {
        lo = std::min(lo, spec.g.v[k]);
        hi = std::max(hi, spec.g.v[k]);
    }
    for (int k : spec.mask.non_exterior_cells()) {
        CHECK(rep.u.v[k] >= lo - 1e-9);
        CHECK(rep.u.v[k] <= hi + 1e-9);
    }
}

TEST_CASE("continuation paths land on the same minimizer") {
    ProblemSpec spec = base_problem(16, 3.0);
    spec.g = smooth_field(spec.mask.grid);
    Rng rng(8);
    for (int k = 0; k < spec.mask.grid.cell_count(); ++k) {
        spec.F.x[k] = rng.uniform(-0.8, 0.8);
        spec.F.y[k] = rng.uniform(-0.8, 0.8);
    }
    const SolveReport a = solve(spec, 1e-11);
    ProblemSpec alt = spec;
    alt.delta = 0.02;
    const SolveReport b = solve(alt, 1e-11);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(a.delta_path.front() != b.delta_path.front());
    CHECK(max_error(a.u, b.u, spec.mask) <= 1e-6);
}

TEST_CASE("energy trace is non-increasing") {
    ProblemSpec spec = base_problem(16, 3.5);
    spec.g = smooth_field(spec.mask.grid);
    Rng rng(14);
    for (int k = 0; k < spec.mask.grid.cell_count(); ++k) {
        spec.F.x[k] = rng.uniform(-1.0, 1.0);
        spec.F.y[k] = rng.uniform(-1.0, 1.0);
    }
    const SolveReport rep = solve(spec);
    REQUIRE(rep.converged);
    REQUIRE(rep.energy_trace.size() >= 2);
    for (std::size_t k = 1; k < rep.energy_trace.size(); ++k)
        CHECK(rep.energy_trace[k] <=
              rep.energy_trace[k - 1] + 1e-12 * std::abs(rep.energy_trace[k - 1]));
    CHECK(std::is_sorted(rep.delta_path.rbegin(), rep.delta_path.rend()));
}

TEST_CASE("weak form imbalance is linear in the test field") {
    ProblemSpec spec = base_problem(12, 2.4);
    spec.g = smooth_field(spec.mask.grid);
    Rng rng(27);
    for (int k = 0; k < spec.mask.grid.cell_count(); ++k) {
        spec.F.x[k] = rng.uniform(-1.0, 1.0);
        spec.F.y[k] = rng.uniform(-1.0, 1.0);
    }
    ScalarField u = spec.g;
    for (int k : spec.mask.cells_of(CellClass::Interior)) u.v[k] += rng.uniform(-0.2, 0.2);

    ScalarField p1(spec.mask.grid), p2(spec.mask.grid);
    for (int k : spec.mask.non_exterior_cells()) {
        p1.v[k] = rng.uniform(-1.0, 1.0);
        p2.v[k] = rng.uniform(-1.0, 1.0);
    }
    const double a = 1.7, b = -0.9;
    ScalarField combo(spec.mask.grid);
    for (int k = 0; k < spec.mask.grid.cell_count(); ++k)
        combo.v[k] = a * p1.v[k] + b * p2.v[k];
    const double lhs = weak_form_imbalance(spec, u, combo);
    const double rhs = a * weak_form_imbalance(spec, u, p1) + b * weak_form_imbalance(spec, u, p2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("homogeneous sub-region solves") {
    ProblemSpec spec = base_problem(20, 2.0);
    spec.g = affine_field(spec.mask.grid, 0.2, 0.6, -0.4);

    SUBCASE("affine rim data extends affinely") {
        const std::vector<int> region =
            ball_cells(spec.mask, {0.5, 0.5}, 0.3);
        REQUIRE(!region.empty());
        const SolveReport rep = solve_homogeneous(spec, region, spec.g, 1e-12);
        CHECK(rep.converged);
        double err = 0.0;
        for (int k : region) err = std::max(err, std::abs(rep.u.v[k] - spec.g.v[k]));
        CHECK(err <= 1e-10);
    }

    SUBCASE("full region with affine g returns u itself") {
        const SolveReport su = solve(spec, 1e-12);
        REQUIRE(su.converged);
        const std::vector<int> all_cells = spec.mask.non_exterior_cells();
        const SolveReport sv = solve_homogeneous(spec, all_cells, su.u, 1e-12);
        CHECK(sv.converged);
        CHECK(max_error(sv.u, su.u, spec.mask) <= 1e-9);
    }

    SUBCASE("p = 3 disc region converges with monotone trace") {
        ProblemSpec cubic = base_problem(20, 3.0);
        cubic.g = smooth_field(cubic.mask.grid);
        const std::vector<int> region = ball_cells(cubic.mask, {0.5, 0.5}, 0.35);
        const SolveReport rep = solve_homogeneous(cubic, region, cubic.g);
        CHECK(rep.converged);
        for (std::size_t k = 1; k < rep.energy_trace.size(); ++k)
            CHECK(rep.energy_trace[k] <=
                  rep.energy_trace[k - 1] + 1e-12 * std::abs(rep.energy_trace[k - 1]));
    }
}

TEST_CASE("problem validation") {
    ProblemSpec spec = base_problem(8, 1.0);
    CHECK_THROWS_AS(validate_problem(spec), std::invalid_argument);
    spec.p = 2.0;
    CHECK_NOTHROW(validate_problem(spec));
    spec.delta = -1.0;
    CHECK_THROWS_AS(validate_problem(spec), std::invalid_argument);
    spec.delta = 0.0;
    spec.F = VectorField(make_grid(4, 4, 0.25));
    CHECK_THROWS_AS(validate_problem(spec), std::invalid_argument);
}

TEST_CASE("solver reports are deterministic") {
    ProblemSpec spec = base_problem(12, 2.6);
    spec.g = smooth_field(spec.mask.grid);
    Rng rng(55);
    for (int k = 0; k < spec.mask.grid.cell_count(); ++k) {
        spec.F.x[k] = rng.uniform(-1.0, 1.0);
        spec.F.y[k] = rng.uniform(-1.0, 1.0);
    }
    const SolveReport a = solve(spec);
    const SolveReport b = solve(spec);
    CHECK(a.u.v == b.u.v);
    CHECK(a.iterations == b.iterations);
    CHECK(a.delta_path == b.delta_path);
    CHECK(a.energy == b.energy);
}
