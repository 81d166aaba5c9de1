#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "deglap/grid.hpp"
#include "deglap/rng.hpp"

using namespace deglap;

TEST_CASE("rect domain cell classes") {
    const DomainMask m = make_rect_domain(8, 8, 0.125);
    CHECK(m.count(CellClass::Interior) == 36);
    CHECK(m.count(CellClass::Boundary) == 28);
    CHECK(m.count(CellClass::Exterior) == 0);
    CHECK(m.non_exterior_count() == 64);

    const DomainMask big = make_rect_domain(64, 64, 1.0 / 64.0);
    CHECK(big.count(CellClass::Interior) == 62 * 62);
}

TEST_CASE("rect diameter is the corner-to-corner distance") {
    const DomainMask m = make_rect_domain(4, 4, 1.0);
    CHECK(m.diameter == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("strict ranges define open balls") {
    const DomainMask m = make_rect_domain(8, 8, 1.0, {0.0, 0.0});
    SUBCASE("radius 0.4h keeps only the center cell") {
        const auto cells = ball_cells(m, {3.0, 3.0}, 0.4);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0] == m.grid.idx(3, 3));
    }
    SUBCASE("radius equal to the spacing excludes the 4-neighbors") {
        const auto cells = ball_cells(m, {3.0, 3.0}, 1.0);
        CHECK(cells.size() == 1);
    }
    SUBCASE("radius 1.5h collects the 9-cell block") {
        const auto cells = ball_cells(m, {3.0, 3.0}, 1.5);
        CHECK(cells.size() == 9);
    }
}

TEST_CASE("lattice disc count matches brute force") {
    const Grid2D g = make_grid(16, 16, 0.25, {0.1, -0.3});
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const Vec2 c = {rng.uniform(-1.0, 5.0), rng.uniform(-2.0, 4.0)};
        const double r = rng.uniform(0.05, 3.0);
        std::int64_t brute = 0;
        for (int j = -40; j < 60; ++j)
            for (int i = -40; i < 60; ++i) {
                const Vec2 z = {g.origin.x + g.h * i, g.origin.y + g.h * j};
                if ((z - c).norm() < r) ++brute;
            }
        CHECK(lattice_disc_count(g, c, r) == brute);
    }
}

TEST_CASE("annuli are disjoint and distance-correct") {
    const DomainMask m = make_rect_domain(32, 32, 1.0 / 32.0, {0.5 / 32.0, 0.5 / 32.0});
    const Vec2 y = {0.5, 0.5};
    const double rho = 0.05;
    std::set<int> seen;
    for (int j = 1; j <= 3; ++j) {
        for (int c : annulus_cells(m, y, rho, j)) {
            CHECK(!seen.count(c));
            seen.insert(c);
            const Vec2 z = m.grid.center(c % 32, c / 32);
            const double d = (z - y).norm();
            CHECK(d >= std::ldexp(rho, j));
            CHECK(d < std::ldexp(rho, j + 1));
        }
    }
}

TEST_CASE("ball cells grow monotonically with the radius") {
    const DomainMask m = make_rect_domain(16, 16, 0.1);
    const Vec2 c = {0.77, 0.61};
    std::size_t prev = 0;
    for (double r = 0.05; r < 1.0; r += 0.07) {
        const auto cells = ball_cells(m, c, r);
        CHECK(cells.size() >= prev);
        prev = cells.size();
    }
}

TEST_CASE("integrate and average") {
    const DomainMask m = make_rect_domain(8, 8, 0.5);
    ScalarField f(m.grid);
    for (auto& v : f.v) v = 3.0;
    const auto cells = m.non_exterior_cells();
    CHECK(integrate(f, cells) == doctest::Approx(3.0 * 64 * 0.25).epsilon(1e-14));
    CHECK(average(f, cells) == doctest::Approx(3.0).epsilon(1e-14));

    ScalarField w(m.grid);
    for (auto& v : w.v) v = 2.0;
    CHECK(integrate(f, cells, w) == doctest::Approx(6.0 * 64 * 0.25).epsilon(1e-14));
}

TEST_CASE("geometric ladder") {
    const auto ladder = geometric_ladder(0.1, 1.0, std::pow(2.0, 0.25));
    REQUIRE(!ladder.empty());
    CHECK(ladder.front() == 0.1);
    CHECK(ladder.back() <= 1.0 * (1.0 + 1e-12));
    for (std::size_t k = 1; k < ladder.size(); ++k)
        CHECK(ladder[k] / ladder[k - 1] == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-12));
    CHECK_THROWS(geometric_ladder(0.0, 1.0, 2.0));
    CHECK_THROWS(geometric_ladder(0.1, 1.0, 1.0));
}

TEST_CASE("lipschitz domain respects the graph") {
    const Grid2D g = make_grid(16, 8, 0.125, {0.0625, 0.0625});
    LipschitzSpec spec;
    spec.kappa = 0.25;
    spec.r0 = 0.25;
    spec.profile.resize(16);
    for (int i = 0; i < 16; ++i) spec.profile[i] = 0.25 + 0.25 * 0.5 * std::abs(g.x(i) - 1.0);
    const DomainMask m = make_lipschitz_domain(g, spec);
    CHECK(m.count(CellClass::Exterior) > 0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const bool inside = g.y(j) > spec.profile[i];
            CHECK(m.non_exterior(i, j) == inside);
        }
    CHECK(m.lipschitz.has_value());

    LipschitzSpec steep = spec;
    steep.profile[4] += 10.0;
    CHECK_THROWS(make_lipschitz_domain(g, steep));
}

TEST_CASE("field validation") {
    const Grid2D g = make_grid(16, 8, 0.125, {0.0625, 0.0625});
    LipschitzSpec spec;
    spec.kappa = 0.0;
    spec.r0 = 0.25;
    spec.profile.assign(16, 0.5);
    const DomainMask m = make_lipschitz_domain(g, spec);

    ScalarField f(g);
    CHECK_NOTHROW(validate_field(f, m, "f"));
    for (int k = 0; k < g.cell_count(); ++k)
        if (m.cls[k] != CellClass::Exterior) f.v[k] = 1.0;
    CHECK_NOTHROW(validate_field(f, m, "f"));

    ScalarField bad = f;
    bad.v[0] = 1.0;  // exterior cell for this profile
    REQUIRE(m.cls[0] == CellClass::Exterior);
    CHECK_THROWS(validate_field(bad, m, "bad"));

    ScalarField nan_field = f;
    for (int k = 0; k < g.cell_count(); ++k)
        if (m.cls[k] != CellClass::Exterior) {
            nan_field.v[k] = std::nan("");
            break;
        }
    CHECK_THROWS(validate_field(nan_field, m, "nan"));
}
