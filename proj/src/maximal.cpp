#include "deglap/maximal.hpp"

#include <algorithm>
#include <cmath>

#include "deglap/parallel.hpp"
#include "deglap/scan.hpp"

namespace deglap {

namespace {

const char* role_name(WeightRole r) {
    switch (r) {
        case WeightRole::Omega: return "omega";
        case WeightRole::Mu: return "mu";
        default: return "nu";
    }
}

void validate_weight(const ScalarWeight& mu, const DomainMask& mask, const char* what) {
    require(mu.grid.cell_count() == mask.grid.cell_count(),
            std::string(what) + ": weight grid mismatch");
    for (int k = 0; k < mask.grid.cell_count(); ++k)
        if (mask.cls[k] != CellClass::Exterior)
            require(std::isfinite(mu.v[k]) && mu.v[k] >= 0.0,
                    std::string(what) + ": weight must be finite and non-negative");
}

std::vector<double> truncated_ladder(const MaximalConfig& cfg) {
    std::vector<double> radii;
    for (double r : cfg.radius_ladder) {
        if (cfg.rho_cut && r > *cfg.rho_cut * (1.0 + 1e-12)) break;
        radii.push_back(r);
    }
    require(!radii.empty(), "maximal: rho_cut truncates the whole radius ladder");
    return radii;
}

} // namespace

MaximalConfig default_maximal_config(const DomainMask& mask, double alpha) {
    MaximalConfig cfg;
    cfg.alpha = alpha;
    cfg.radius_ladder =
        geometric_ladder(mask.grid.h, 2.0 * mask.diameter, std::pow(2.0, 0.25));
    validate_maximal_config(cfg);
    return cfg;
}

void validate_maximal_config(const MaximalConfig& cfg) {
    require(cfg.alpha >= 0.0 && cfg.alpha < 2.0, "maximal: alpha must lie in [0, 2)");
    require(!cfg.radius_ladder.empty(), "maximal: radius ladder must be non-empty");
    double prev = 0.0;
    for (double r : cfg.radius_ladder) {
        require(std::isfinite(r) && r > prev, "maximal: radius ladder must be ascending positive");
        prev = r;
    }
    if (cfg.rho_cut) require(*cfg.rho_cut > 0.0, "maximal: rho_cut must be positive");
}

ScalarField fractional_maximal(const ScalarField& f, const DomainMask& mask,
                               const MaximalConfig& cfg, int threads) {
    validate_field(f, mask, "fractional_maximal input");
    validate_maximal_config(cfg);
    const Grid2D& g = mask.grid;
    std::vector<double> absf(f.v.size());
    for (std::size_t k = 0; k < f.v.size(); ++k) absf[k] = std::abs(f.v[k]);
    const MaskedPrefix prefix(mask, absf);
    const std::vector<double> radii = truncated_ladder(cfg);
    const std::vector<int> cells = mask.non_exterior_cells();
    ScalarField out(g);
    parallel_for(static_cast<int>(cells.size()), threads, [&](int c) {
        const int k = cells[static_cast<std::size_t>(c)];
        const Vec2 z = g.center(k % g.nx, k / g.nx);
        double best = 0.0;
        for (double rho : radii) {
            const std::int64_t denom = lattice_disc_count(g, z, rho);
            if (denom <= 0) continue;
            const double avg = prefix.disc_sum(z, rho) / static_cast<double>(denom);
            best = std::max(best, std::pow(rho, cfg.alpha) * avg);
        }
        out.v[k] = best;
    });
    return out;
}

ScalarField maximal_square_smoke(const ScalarField& f, const DomainMask& mask,
                                 std::span<const int> half_widths) {
    validate_field(f, mask, "maximal_square_smoke input");
    require(!half_widths.empty(), "maximal: need at least one square half-width");
    for (int w : half_widths) require(w >= 0, "maximal: half-widths must be non-negative");
    const Grid2D& g = mask.grid;
    const int W = g.nx + 1;
    std::vector<double> P(static_cast<std::size_t>(W) * (g.ny + 1), 0.0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = g.idx(i, j);
            const double val =
                mask.cls[k] == CellClass::Exterior ? 0.0 : std::abs(f.v[k]);
            P[static_cast<std::size_t>(j + 1) * W + i + 1] =
                P[static_cast<std::size_t>(j) * W + i + 1] +
                P[static_cast<std::size_t>(j + 1) * W + i] -
                P[static_cast<std::size_t>(j) * W + i] + val;
        }
    }
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = g.idx(i, j);
            if (mask.cls[k] == CellClass::Exterior) continue;
            double best = 0.0;
            for (int w : half_widths) {
                const int ilo = std::max(0, i - w), ihi = std::min(g.nx - 1, i + w);
                const int jlo = std::max(0, j - w), jhi = std::min(g.ny - 1, j + w);
                const double sum = P[static_cast<std::size_t>(jhi + 1) * W + ihi + 1] -
                                   P[static_cast<std::size_t>(jlo) * W + ihi + 1] -
                                   P[static_cast<std::size_t>(jhi + 1) * W + ilo] +
                                   P[static_cast<std::size_t>(jlo) * W + ilo];
                const double denom = static_cast<double>(2 * w + 1) * (2 * w + 1);
                best = std::max(best, sum / denom);
            }
            out.v[k] = best;
        }
    }
    return out;
}

double StepDistribution::mass_above(double lambda) const {
    const auto it = std::upper_bound(values.begin(), values.end(), lambda);
    if (it == values.end()) return 0.0;
    return tail_mass[static_cast<std::size_t>(it - values.begin())];
}

StepDistribution step_distribution(const ScalarField& f, const ScalarWeight& mu,
                                   const DomainMask& mask) {
    validate_field(f, mask, "step_distribution");
    validate_weight(mu, mask, "step_distribution");
    const Grid2D& g = mask.grid;
    std::vector<std::pair<double, double>> items;
    double total_weight = 0.0;
    for (int k = 0; k < g.cell_count(); ++k) {
        if (mask.cls[k] == CellClass::Exterior) continue;
        total_weight += mu.v[k];
        const double a = std::abs(f.v[k]);
        if (a > 0.0) items.emplace_back(a, mu.v[k]);
    }
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    StepDistribution d;
    const double cell_area = g.h * g.h;
    d.domain_mass = total_weight * cell_area;
    std::vector<double> weights;
    for (const auto& [v, m] : items) {
        if (!d.values.empty() && v == d.values.back()) {
            weights.back() += m;
        } else {
            d.values.push_back(v);
            weights.push_back(m);
        }
    }
    d.tail_mass.assign(d.values.size(), 0.0);
    double run = 0.0;
    for (int k = static_cast<int>(d.values.size()) - 1; k >= 0; --k) {
        run += weights[static_cast<std::size_t>(k)];
        d.tail_mass[static_cast<std::size_t>(k)] = run * cell_area;
    }
    return d;
}

DistributionCurve distribution(const ScalarField& f, const ScalarWeight& mu,
                               const DomainMask& mask, std::span<const double> lambdas) {
    require(!lambdas.empty(), "distribution: empty lambda grid");
    double prev = 0.0;
    for (double l : lambdas) {
        require(std::isfinite(l) && l > prev, "distribution: lambdas must be ascending positive");
        prev = l;
    }
    const StepDistribution sd = step_distribution(f, mu, mask);
    DistributionCurve curve;
    curve.weight_id = role_name(mu.role);
    curve.lambdas.assign(lambdas.begin(), lambdas.end());
    curve.masses.reserve(lambdas.size());
    for (double l : lambdas) curve.masses.push_back(sd.mass_above(l));
    return curve;
}

DistributionCurve fractional_distribution(const ScalarField& f, const ScalarWeight& mu,
                                          const DomainMask& mask, const MaximalConfig& cfg,
                                          std::span<const double> lambdas) {
    const ScalarField mf = fractional_maximal(f, mask, cfg);
    return distribution(mf, mu, mask, lambdas);
}

std::vector<double> default_lambda_grid(const ScalarField& f, const DomainMask& mask,
                                        int points) {
    require(points >= 2, "lambda grid: need at least 2 points");
    validate_field(f, mask, "lambda grid");
    double top = 0.0;
    for (int k = 0; k < mask.grid.cell_count(); ++k)
        if (mask.cls[k] != CellClass::Exterior) top = std::max(top, std::abs(f.v[k]));
    if (!(top > 0.0)) throw NumericError("lambda grid: field is identically zero");
    const double llo = std::log(top * 1e-6);
    const double lhi = std::log(top * (1.0 + 1e-9));
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        out[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (points - 1));
    return out;
}

CheckReport check_weak_type(const ScalarField& f, const DomainMask& mask, double q,
                            double alpha) {
    require(q > 0.0 && std::isfinite(q), "weak type: q must be positive");
    require(alpha >= 0.0 && alpha < 2.0, "weak type: alpha must lie in [0, 2)");
    require(alpha * q < 2.0, "weak type: alpha*q must stay below the dimension 2");
    validate_field(f, mask, "weak type input");
    CheckReport rep;
    rep.name = "maximal_weak_type";
    rep.statement = "lambda^q * |{M_alpha f > lambda}|^(1 - alpha*q/2) <= C * ||f||_q^q";
    rep.set_grid(mask.grid);
    rep.conventions = {"strict level sets {|f| > lambda}",
                       "open pixel discs with zero extension outside the domain",
                       "radius ladder h..2*diameter, ratio 2^(1/4)"};
    rep.sweep = {{"q", q}, {"alpha", alpha}};
    const Grid2D& g = mask.grid;
    double norm_q = 0.0;
    for (int k = 0; k < g.cell_count(); ++k) {
        if (mask.cls[k] == CellClass::Exterior) continue;
        const double a = std::abs(f.v[k]);
        if (a > 0.0) norm_q += std::pow(a, q);
    }
    norm_q *= g.h * g.h;
    if (norm_q == 0.0) {
        rep.passed = true;
        rep.empirical_C = 0.0;
        rep.notes = "zero field: inequality is vacuous";
        return rep;
    }
    const MaximalConfig cfg = default_maximal_config(mask, alpha);
    const ScalarField mf = fractional_maximal(f, mask, cfg);
    const ScalarWeight ones = constant_weight(g, 1.0, WeightRole::NuFree);
    const StepDistribution sd = step_distribution(mf, ones, mask);
    const std::vector<double> lambdas = default_lambda_grid(mf, mask);
    const double expo = 1.0 - alpha * q / 2.0;
    double best = 0.0, best_lambda = 0.0, best_mass = 0.0;
    for (double l : lambdas) {
        const double mass = sd.mass_above(l);
        const double ratio = std::pow(l, q) * std::pow(mass, expo) / norm_q;
        if (ratio > best) {
            best = ratio;
            best_lambda = l;
            best_mass = mass;
        }
    }
    rep.empirical_C = best;
    rep.passed = std::isfinite(best) && best > 0.0;
    rep.witness = {{"lambda", best_lambda}, {"mass", best_mass}, {"ratio", best}};
    rep.sweep["lambda_points"] = static_cast<int>(lambdas.size());
    rep.sweep["lambda_min"] = lambdas.front();
    rep.sweep["lambda_max"] = lambdas.back();
    return rep;
}

} // namespace deglap
