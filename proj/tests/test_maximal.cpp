#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "deglap/grid.hpp"
#include "deglap/maximal.hpp"
#include "deglap/rng.hpp"

using namespace deglap;

namespace {

ScalarField random_field(const DomainMask& mask, std::uint64_t seed, double lo, double hi) {
    ScalarField f(mask.grid);
    Rng rng(seed);
    for (int k = 0; k < mask.grid.cell_count(); ++k)
        if (mask.cls[k] != CellClass::Exterior) f.v[k] = rng.uniform(lo, hi);
    return f;
}

} // namespace

TEST_CASE("indicator maximal with single-radius ladders") {
    const DomainMask m = make_rect_domain(9, 9, 1.0, {0.0, 0.0});
    ScalarField chi(m.grid);
    chi.at(4, 4) = 1.0;

    MaximalConfig cfg;
    cfg.alpha = 0.0;

    SUBCASE("radius below spacing reproduces the field") {
        cfg.radius_ladder = {0.5};
        const ScalarField mf = fractional_maximal(chi, m, cfg);
        for (int k = 0; k < m.grid.cell_count(); ++k) CHECK(mf.v[k] == chi.v[k]);
    }

    SUBCASE("radius 1.5 sees a nine cell disc") {
        cfg.radius_ladder = {1.5};
        const ScalarField mf = fractional_maximal(chi, m, cfg);
        for (int j = 0; j < 9; ++j) {
            for (int i = 0; i < 9; ++i) {
                const int di = i - 4, dj = j - 4;
                const double expect = di * di + dj * dj < 2.25 ? 1.0 / 9.0 : 0.0;
                CHECK(mf.at(i, j) == doctest::Approx(expect).epsilon(1e-14));
            }
        }
    }

    SUBCASE("two radii take the pointwise max") {
        cfg.radius_ladder = {0.5, 1.5};
        const ScalarField mf = fractional_maximal(chi, m, cfg);
        CHECK(mf.at(4, 4) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(mf.at(5, 4) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
        CHECK(mf.at(6, 4) == 0.0);
    }
}

TEST_CASE("maximal dominates the field at alpha zero") {
    const DomainMask m = make_rect_domain(12, 12, 0.25);
    const ScalarField f = random_field(m, 7, -2.0, 2.0);
    const ScalarField mf = fractional_maximal(f, m, default_maximal_config(m, 0.0));
    for (int k = 0; k < m.grid.cell_count(); ++k)
        CHECK(mf.v[k] >= std::abs(f.v[k]) * (1.0 - 1e-12));
}

TEST_CASE("sublinearity") {
    const DomainMask m = make_rect_domain(16, 16, 1.0 / 16.0);
    const ScalarField f = random_field(m, 11, -1.0, 3.0);
    const ScalarField g = random_field(m, 13, -2.0, 1.0);
    ScalarField sum(m.grid);
    for (int k = 0; k < m.grid.cell_count(); ++k) sum.v[k] = f.v[k] + g.v[k];
    const MaximalConfig cfg = default_maximal_config(m, 0.5);
    const ScalarField mf = fractional_maximal(f, m, cfg);
    const ScalarField mg = fractional_maximal(g, m, cfg);
    const ScalarField ms = fractional_maximal(sum, m, cfg);
    for (int k = 0; k < m.grid.cell_count(); ++k)
        CHECK(ms.v[k] <= (mf.v[k] + mg.v[k]) * (1.0 + 1e-12));
}

TEST_CASE("alpha is monotone when every radius is at most one") {
    const DomainMask m = make_rect_domain(16, 16, 1.0 / 16.0);
    const ScalarField f = random_field(m, 17, 0.0, 5.0);
    MaximalConfig cfg;
    cfg.radius_ladder = geometric_ladder(m.grid.h, 1.0, std::pow(2.0, 0.25));
    REQUIRE(cfg.radius_ladder.back() <= 1.0);
    std::vector<ScalarField> fields;
    for (double a : {0.0, 0.5, 1.0}) {
        cfg.alpha = a;
        fields.push_back(fractional_maximal(f, m, cfg));
    }
    for (int k = 0; k < m.grid.cell_count(); ++k) {
        CHECK(fields[1].v[k] <= fields[0].v[k] * (1.0 + 1e-12));
        CHECK(fields[2].v[k] <= fields[1].v[k] * (1.0 + 1e-12));
    }
}

TEST_CASE("square smoke matches a direct window scan") {
    Grid2D g = make_grid(16, 8, 0.125, {0.0625, 0.0625});
    LipschitzSpec spec;
    spec.kappa = 0.25;
    spec.r0 = 0.5;
    spec.profile.resize(16);
    for (int i = 0; i < 16; ++i) spec.profile[i] = 0.25 + 0.0625 * std::abs(g.x(i) - 1.0);
    const DomainMask m = make_lipschitz_domain(g, spec);
    REQUIRE(m.count(CellClass::Exterior) > 0);

    ScalarField f(g);
    Rng rng(23);
    for (int k = 0; k < g.cell_count(); ++k)
        if (m.cls[k] != CellClass::Exterior) f.v[k] = rng.uniform(-1.0, 1.0);

    const std::vector<int> widths = {0, 1, 3};
    const ScalarField smoke = maximal_square_smoke(f, m, widths);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (m.cls[g.idx(i, j)] == CellClass::Exterior) {
                CHECK(smoke.at(i, j) == 0.0);
                continue;
            }
            double best = 0.0;
            for (int w : widths) {
                double sum = 0.0;
                for (int jj = std::max(0, j - w); jj <= std::min(g.ny - 1, j + w); ++jj)
                    for (int ii = std::max(0, i - w); ii <= std::min(g.nx - 1, i + w); ++ii)
                        if (m.cls[g.idx(ii, jj)] != CellClass::Exterior)
                            sum += std::abs(f.at(ii, jj));
                best = std::max(best, sum / ((2.0 * w + 1.0) * (2.0 * w + 1.0)));
            }
            CHECK(smoke.at(i, j) == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("step distribution matches strict counting") {
    const DomainMask m = make_rect_domain(6, 6, 0.5);
    const Grid2D& g = m.grid;
    ScalarField f(g);
    for (int j = 0; j < 6; ++j)
        for (int i = 0; i < 6; ++i) f.at(i, j) = static_cast<double>((i + 2 * j) % 4);
    ScalarWeight mu(g, WeightRole::Mu);
    for (int k = 0; k < g.cell_count(); ++k) mu.v[k] = 1.0 + 0.5 * (k % 3);

    const StepDistribution sd = step_distribution(f, mu, m);
    CHECK(std::is_sorted(sd.values.begin(), sd.values.end()));
    for (std::size_t k = 1; k < sd.values.size(); ++k) CHECK(sd.values[k] > sd.values[k - 1]);
    for (double v : sd.values) CHECK(v > 0.0);

    const double cell_area = g.h * g.h;
    const auto strict_mass = [&](double lambda) {
        double s = 0.0;
        for (int k = 0; k < g.cell_count(); ++k)
            if (std::abs(f.v[k]) > lambda) s += mu.v[k];
        return s * cell_area;
    };
    const auto closed_mass = [&](double lambda) {
        double s = 0.0;
        for (int k = 0; k < g.cell_count(); ++k)
            if (std::abs(f.v[k]) >= lambda) s += mu.v[k];
        return s * cell_area;
    };

    for (std::size_t k = 0; k < sd.values.size(); ++k)
        CHECK(sd.tail_mass[k] == doctest::Approx(closed_mass(sd.values[k])).epsilon(1e-13));
    for (double lam : {0.0, 0.5, 1.0, 1.5, 2.0, 2.9999, 3.0, 4.0})
        CHECK(sd.mass_above(lam) == doctest::Approx(strict_mass(lam)).epsilon(1e-13));

    double total = 0.0;
    for (int k = 0; k < g.cell_count(); ++k) total += mu.v[k];
    CHECK(sd.domain_mass == doctest::Approx(total * cell_area).epsilon(1e-13));
}

TEST_CASE("mass_above edge cases") {
    const DomainMask m = make_rect_domain(4, 4, 1.0);
    const ScalarWeight ones = constant_weight(m.grid, 1.0);

    SUBCASE("zero field has empty steps") {
        const ScalarField f(m.grid);
        const StepDistribution sd = step_distribution(f, ones, m);
        CHECK(sd.values.empty());
        CHECK(sd.mass_above(0.0) == 0.0);
        CHECK(sd.domain_mass == doctest::Approx(16.0));
    }

    SUBCASE("above the top value the mass vanishes") {
        ScalarField f(m.grid);
        f.at(1, 1) = 2.0;
        const StepDistribution sd = step_distribution(f, ones, m);
        CHECK(sd.mass_above(2.0) == 0.0);
        CHECK(sd.mass_above(5.0) == 0.0);
        CHECK(sd.mass_above(1.9) == doctest::Approx(1.0));
    }
}

TEST_CASE("default lambda grid") {
    const DomainMask m = make_rect_domain(8, 8, 0.125);
    ScalarField f(m.grid);
    f.at(3, 3) = 2.0;
    f.at(5, 2) = -0.7;

    const std::vector<double> lam = default_lambda_grid(f, m);
    CHECK(lam.size() == 400);
    CHECK(std::is_sorted(lam.begin(), lam.end()));
    CHECK(lam.front() == doctest::Approx(2e-6).epsilon(1e-9));
    CHECK(lam.back() == doctest::Approx(2.0).epsilon(1e-8));

    const ScalarField zero(m.grid);
    CHECK_THROWS_AS(default_lambda_grid(zero, m), NumericError);
    CHECK_THROWS_AS(default_lambda_grid(f, m, 1), std::invalid_argument);
}

TEST_CASE("distribution curves wire through the step form") {
    const DomainMask m = make_rect_domain(10, 10, 0.1);
    const ScalarField f = random_field(m, 31, 0.0, 4.0);
    const ScalarWeight mu = constant_weight(m.grid, 1.0, WeightRole::Mu);
    const std::vector<double> lambdas = {0.5, 1.0, 2.0, 3.5};

    const DistributionCurve curve = distribution(f, mu, m, lambdas);
    CHECK(curve.weight_id == "mu");
    const StepDistribution sd = step_distribution(f, mu, m);
    REQUIRE(curve.masses.size() == lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k)
        CHECK(curve.masses[k] == sd.mass_above(lambdas[k]));

    const MaximalConfig cfg = default_maximal_config(m, 0.0);
    const DistributionCurve fc = fractional_distribution(f, mu, m, cfg, lambdas);
    const ScalarField mf = fractional_maximal(f, m, cfg);
    const StepDistribution msd = step_distribution(mf, mu, m);
    for (std::size_t k = 0; k < lambdas.size(); ++k)
        CHECK(fc.masses[k] == msd.mass_above(lambdas[k]));

    CHECK_THROWS_AS(distribution(f, mu, m, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(distribution(f, mu, m, std::vector<double>{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("rho_cut truncates the radius ladder") {
    const DomainMask m = make_rect_domain(12, 12, 0.25);
    const ScalarField f = random_field(m, 41, 0.0, 1.0);
    const double h = m.grid.h;

    MaximalConfig cut;
    cut.alpha = 0.5;
    cut.radius_ladder = {h, 2 * h, 4 * h, 8 * h};
    cut.rho_cut = 4 * h;

    MaximalConfig manual;
    manual.alpha = 0.5;
    manual.radius_ladder = {h, 2 * h, 4 * h};

    const ScalarField a = fractional_maximal(f, m, cut);
    const ScalarField b = fractional_maximal(f, m, manual);
    for (int k = 0; k < m.grid.cell_count(); ++k) CHECK(a.v[k] == b.v[k]);

    MaximalConfig bad = cut;
    bad.rho_cut = 0.5 * h;
    CHECK_THROWS_AS(fractional_maximal(f, m, bad), std::invalid_argument);
}

TEST_CASE("config validation") {
    MaximalConfig cfg;
    cfg.radius_ladder = {1.0, 2.0};
    cfg.alpha = 2.0;
    CHECK_THROWS_AS(validate_maximal_config(cfg), std::invalid_argument);
    cfg.alpha = 0.0;
    cfg.radius_ladder = {};
    CHECK_THROWS_AS(validate_maximal_config(cfg), std::invalid_argument);
    cfg.radius_ladder = {2.0, 1.0};
    CHECK_THROWS_AS(validate_maximal_config(cfg), std::invalid_argument);
    cfg.radius_ladder = {1.0, 2.0};
    cfg.rho_cut = -1.0;
    CHECK_THROWS_AS(validate_maximal_config(cfg), std::invalid_argument);
}

TEST_CASE("weak type check on a smooth field") {
    const DomainMask m = make_rect_domain(32, 32, 1.0 / 32.0);
    ScalarField f(m.grid);
    for (int j = 0; j < 32; ++j)
        for (int i = 0; i < 32; ++i) {
            const Vec2 z = m.grid.center(i, j);
            f.at(i, j) = std::sin(3.0 * z.x) * std::cos(2.0 * z.y) + 0.5;
        }

    const double q = 1.5, alpha = 0.5;
    const CheckReport rep = check_weak_type(f, m, q, alpha);
    CHECK(rep.passed);
    CHECK(rep.name == "maximal_weak_type");
    CHECK(std::isfinite(rep.empirical_C));
    CHECK(rep.empirical_C > 0.0);

    const double lam = rep.witness.at("lambda").get<double>();
    const double mass = rep.witness.at("mass").get<double>();
    const double ratio = rep.witness.at("ratio").get<double>();

    const ScalarField mf = fractional_maximal(f, m, default_maximal_config(m, alpha));
    const ScalarWeight ones = constant_weight(m.grid, 1.0);
    const StepDistribution sd = step_distribution(mf, ones, m);
    CHECK(sd.mass_above(lam) == doctest::Approx(mass).epsilon(1e-12));

    double norm_q = 0.0;
    for (int k = 0; k < m.grid.cell_count(); ++k) norm_q += std::pow(std::abs(f.v[k]), q);
    norm_q *= m.grid.h * m.grid.h;
    const double re = std::pow(lam, q) * std::pow(mass, 1.0 - alpha * q / 2.0) / norm_q;
    CHECK(re == doctest::Approx(ratio).epsilon(1e-9));
    CHECK(ratio == doctest::Approx(rep.empirical_C).epsilon(1e-12));

    const ScalarField zero(m.grid);
    const CheckReport vac = check_weak_type(zero, m, q, alpha);
    CHECK(vac.passed);
    CHECK(vac.empirical_C == 0.0);

    CHECK_THROWS_AS(check_weak_type(f, m, 0.0, alpha), std::invalid_argument);
    CHECK_THROWS_AS(check_weak_type(f, m, 5.0, 1.0), std::invalid_argument);
}
