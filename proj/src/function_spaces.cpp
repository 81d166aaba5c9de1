#include "deglap/function_spaces.hpp"

#include <algorithm>
#include <cmath>

#include "deglap/rng.hpp"
#include "deglap/scan.hpp"

namespace deglap {

namespace {

void validate_indices(const LorentzIndices& idx) {
    require(idx.q > 0.0 && std::isfinite(idx.q), "lorentz: q must lie in (0, inf)");
    require(idx.s > 0.0, "lorentz: s must lie in (0, inf]");
}

void validate_sigma_structure(const SigmaFunction& sigma) {
    require(sigma.tau.size() >= 2 && sigma.tau.size() == sigma.sigma.size(),
            "sigma: table needs matching tau/Sigma samples (>= 2)");
    double prev_t = 0.0;
    double prev_s = 0.0;
    for (std::size_t k = 0; k < sigma.tau.size(); ++k) {
        require(std::isfinite(sigma.tau[k]) && sigma.tau[k] > prev_t,
                "sigma: tau grid must be ascending positive");
        require(std::isfinite(sigma.sigma[k]) && sigma.sigma[k] >= prev_s,
                "sigma: Sigma must be non-negative and non-decreasing");
        prev_t = sigma.tau[k];
        prev_s = sigma.sigma[k];
    }
}

void validate_sigma(const SigmaFunction& sigma) {
    switch (sigma.kind) {
        case SigmaFunction::Kind::Identity:
            return;
        case SigmaFunction::Kind::Power:
            require(sigma.exponent > 0.0 && std::isfinite(sigma.exponent),
                    "sigma: power exponent must be positive");
            return;
        case SigmaFunction::Kind::Table:
            break;
    }
    validate_sigma_structure(sigma);
    require(sigma.c1 > 1.0 && sigma.c2 >= sigma.c1,
            "sigma: doubling constants need 1 < c1 <= c2");
}

/// Shared exact integration over the segments between jump levels: on
/// [v_{k-1}, v_k) the distribution is constant, so each segment contributes
/// (q/s)(v_k^s - v_{k-1}^s) * Sigma(D_k)^{s/q} in closed form.
double lorentz_core(const StepDistribution& sd, const SigmaFunction& sigma,
                    const LorentzIndices& idx) {
    const double q = idx.q;
    if (sd.values.empty()) return 0.0;
    if (!idx.s_finite()) {
        double best = 0.0;
        for (std::size_t k = 0; k < sd.values.size(); ++k) {
            const double D = sigma.eval(sd.tail_mass[k]);
            if (D > 0.0) best = std::max(best, sd.values[k] * std::pow(D, 1.0 / q));
        }
        return best;
    }
    const double s = idx.s;
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < sd.values.size(); ++k) {
        const double v = sd.values[k];
        const double D = sigma.eval(sd.tail_mass[k]);
        if (D > 0.0) acc += (q / s) * (std::pow(v, s) - std::pow(prev, s)) * std::pow(D, s / q);
        prev = v;
    }
    return std::pow(acc, 1.0 / s);
}

} // namespace

double weighted_Lq_norm(const ScalarField& f, const ScalarWeight& omega, double q,
                        const DomainMask& mask) {
    require(q > 0.0 && std::isfinite(q), "weighted Lq: q must lie in (0, inf)");
    validate_field(f, mask, "weighted Lq");
    require(omega.grid.cell_count() == mask.grid.cell_count(),
            "weighted Lq: weight grid mismatch");
    const Grid2D& g = mask.grid;
    double sum = 0.0;
    for (int k = 0; k < g.cell_count(); ++k) {
        if (mask.cls[k] == CellClass::Exterior) continue;
        const double w = omega.v[k];
        require(std::isfinite(w) && w >= 0.0, "weighted Lq: weight must be finite, non-negative");
        const double a = std::abs(f.v[k]);
        if (a > 0.0 && w > 0.0) sum += std::pow(a * w, q);
    }
    return std::pow(sum * g.h * g.h, 1.0 / q);
}

double lorentz_norm(const ScalarField& f, const ScalarWeight& mu, const LorentzIndices& idx,
                    const DomainMask& mask) {
    return generalized_lorentz_norm(f, mu, SigmaFunction::identity(), idx, mask);
}

double generalized_lorentz_norm(const ScalarField& f, const ScalarWeight& mu,
                                const SigmaFunction& sigma, const LorentzIndices& idx,
                                const DomainMask& mask) {
    validate_indices(idx);
    validate_sigma(sigma);
    const StepDistribution sd = step_distribution(f, mu, mask);
    return lorentz_core(sd, sigma, idx);
}

double lorentz_norm_from_curve(const DistributionCurve& curve, const LorentzIndices& idx) {
    validate_indices(idx);
    require(!curve.lambdas.empty() && curve.lambdas.size() == curve.masses.size(),
            "lorentz curve: need matching lambda/mass samples");
    double prev = 0.0;
    for (double l : curve.lambdas) {
        require(std::isfinite(l) && l > prev, "lorentz curve: lambdas must be ascending positive");
        prev = l;
    }
    for (double m : curve.masses)
        require(std::isfinite(m) && m >= 0.0, "lorentz curve: masses must be non-negative");
    const double q = idx.q;
    if (!idx.s_finite()) {
        double best = 0.0;
        for (std::size_t i = 0; i < curve.lambdas.size(); ++i)
            if (curve.masses[i] > 0.0)
                best = std::max(best, curve.lambdas[i] * std::pow(curve.masses[i], 1.0 / q));
        return best;
    }
    const double s = idx.s;
    const auto integrand = [&](std::size_t i) {
        if (curve.masses[i] <= 0.0) return 0.0;
        return q * std::pow(curve.lambdas[i], s) * std::pow(curve.masses[i], s / q);
    };
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < curve.lambdas.size(); ++i) {
        const double dx = std::log(curve.lambdas[i + 1]) - std::log(curve.lambdas[i]);
        acc += 0.5 * (integrand(i) + integrand(i + 1)) * dx;
    }
    return std::pow(acc, 1.0 / s);
}

double SigmaFunction::eval(double t) const {
    if (!(t > 0.0)) return 0.0;
    switch (kind) {
        case Kind::Identity:
            return t;
        case Kind::Power:
            return std::pow(t, exponent);
        case Kind::Table:
            break;
    }
    if (t <= tau.front()) return sigma.front() * (t / tau.front());
    const std::size_t last = tau.size() - 1;
    if (t >= tau[last]) {
        const double slope = (sigma[last] - sigma[last - 1]) / (tau[last] - tau[last - 1]);
        return sigma[last] + slope * (t - tau[last]);
    }
    const auto it = std::upper_bound(tau.begin(), tau.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - tau.begin());
    const double frac = (t - tau[k - 1]) / (tau[k] - tau[k - 1]);
    return sigma[k - 1] + frac * (sigma[k] - sigma[k - 1]);
}

SigmaFunction SigmaFunction::identity() {
    SigmaFunction s;
    s.kind = Kind::Identity;
    s.exponent = 1.0;
    s.c1 = s.c2 = 2.0;
    return s;
}

SigmaFunction SigmaFunction::power(double a) {
    require(a > 0.0 && std::isfinite(a), "sigma: power exponent must be positive");
    SigmaFunction s;
    s.kind = Kind::Power;
    s.exponent = a;
    s.c1 = s.c2 = std::pow(2.0, a);
    return s;
}

SigmaFunction SigmaFunction::from_table(std::vector<double> tau, std::vector<double> sigma) {
    SigmaFunction s;
    s.kind = Kind::Table;
    s.tau = std::move(tau);
    s.sigma = std::move(sigma);
    validate_sigma_structure(s);
    double c1 = std::numeric_limits<double>::infinity();
    double c2 = 0.0;
    int pairs = 0;
    for (std::size_t k = 0; k < s.tau.size(); ++k) {
        const double t2 = 2.0 * s.tau[k];
        if (t2 > s.tau.back() * (1.0 + 1e-12)) break;
        if (!(s.sigma[k] > 0.0)) continue;
        const double ratio = s.eval(t2) / s.sigma[k];
        c1 = std::min(c1, ratio);
        c2 = std::max(c2, ratio);
        ++pairs;
    }
    require(pairs >= 1, "sigma: table range too short to certify doubling on dyadic pairs");
    require(c1 > 1.0, "sigma: table is not doubling (Sigma(2t)/Sigma(t) reaches 1)");
    s.c1 = c1;
    s.c2 = c2;
    return s;
}

SigmaFunction SigmaFunction::from_density(std::vector<double> tau, std::vector<double> nu) {
    require(tau.size() >= 2 && tau.size() == nu.size(),
            "sigma: density needs >= 2 matching samples");
    for (double v : nu)
        require(std::isfinite(v) && v >= 0.0, "sigma: density must be non-negative");
    std::vector<double> cum(tau.size(), 0.0);
    require(tau.front() > 0.0, "sigma: tau grid must be ascending positive");
    cum[0] = nu[0] * tau[0]; // nu extended by its first sample on (0, tau_0]
    for (std::size_t k = 1; k < tau.size(); ++k) {
        require(tau[k] > tau[k - 1], "sigma: tau grid must be ascending positive");
        cum[k] = cum[k - 1] + 0.5 * (nu[k] + nu[k - 1]) * (tau[k] - tau[k - 1]);
    }
    SigmaFunction s = from_table(std::move(tau), std::move(cum));
    s.nu = std::move(nu);
    return s;
}

CheckReport sigma_doubling_checks(const SigmaFunction& sigma, int samples, std::uint64_t seed,
                               double tmax) {
    require(samples >= 1, "sigma checks: samples must be >= 1");
    require(tmax > 0.0 && std::isfinite(tmax), "sigma checks: tmax must be positive");
    validate_sigma(sigma);
    Rng rng(seed);
    const double gamma1 = std::log2(sigma.c1);
    CheckReport rep;
    rep.name = "sigma_doubling_consequences";
    rep.statement =
        "Sigma(s1+s2) <= c2*(Sigma(s1)+Sigma(s2));  Sigma(eps*t) <= c1*eps^log2(c1)*Sigma(t)";
    rep.seed = seed;
    rep.conventions = {"eps sampled in the open interval (0, 1/2)",
                       "sample pairs skipped when the bounding side vanishes"};
    double worst_sum = 0.0, worst_scale = 0.0;
    nlohmann::json wit_sum = nlohmann::json::object();
    nlohmann::json wit_scale = nlohmann::json::object();
    for (int it = 0; it < samples; ++it) {
        const double s1 = rng.uniform(0.0, 0.5 * tmax);
        const double s2 = rng.uniform(0.0, 0.5 * tmax);
        const double lhs = sigma.eval(s1 + s2);
        const double rhs = sigma.c2 * (sigma.eval(s1) + sigma.eval(s2));
        if (rhs > 0.0 && lhs / rhs > worst_sum) {
            worst_sum = lhs / rhs;
            wit_sum = {{"s1", s1}, {"s2", s2}, {"ratio", worst_sum}};
        }
        double eps = 0.0;
        while (!(eps > 0.0)) eps = 0.5 * rng.uniform();
        const double t = rng.uniform(0.0, tmax);
        const double lhs2 = sigma.eval(eps * t);
        const double rhs2 = sigma.c1 * std::pow(eps, gamma1) * sigma.eval(t);
        if (rhs2 > 0.0 && lhs2 / rhs2 > worst_scale) {
            worst_scale = lhs2 / rhs2;
            wit_scale = {{"eps", eps}, {"t", t}, {"ratio", worst_scale}};
        }
    }
    rep.empirical_C = std::max(worst_sum, worst_scale);
    rep.passed = rep.empirical_C <= 1.0 + 1e-12;
    rep.witness = {{"sum_rule", wit_sum}, {"scale_rule", wit_scale}};
    rep.sweep = {{"samples", samples}, {"tmax", tmax}, {"c1", sigma.c1}, {"c2", sigma.c2}};
    return rep;
}

MorreyShape MorreyShape::make(const DomainMask& mask, std::vector<double> ladder,
                              const std::function<double(Vec2, double)>& fn, double upsilon,
                              bool certify_doubling) {
    require(static_cast<bool>(fn), "morrey shape: missing shape function");
    require(!ladder.empty(), "morrey shape: empty radius ladder");
    double prev = 0.0;
    for (double r : ladder) {
        require(std::isfinite(r) && r > prev, "morrey shape: ladder must be ascending positive");
        prev = r;
    }
    require(upsilon > 0.0 && upsilon < 2.0, "morrey shape: upsilon must lie in (0, 2)");
    const Grid2D& g = mask.grid;
    MorreyShape shape;
    shape.ladder = std::move(ladder);
    shape.upsilon = upsilon;
    const std::size_t L = shape.ladder.size();
    shape.psi.assign(static_cast<std::size_t>(g.cell_count()) * L, 0.0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = g.idx(i, j);
            const bool live = mask.cls[k] != CellClass::Exterior;
            for (std::size_t l = 0; l < L; ++l) {
                const double val = fn(g.center(i, j), shape.ladder[l]);
                if (live)
                    require(std::isfinite(val) && val > 0.0,
                            "morrey shape: psi must be positive and finite on domain cells");
                shape.psi[static_cast<std::size_t>(k) * L + l] = val;
            }
        }
    }
    if (certify_doubling) {
        const double bound = std::pow(2.0, upsilon) * (1.0 + 1e-12);
        int pairs = 0;
        for (std::size_t a = 0; a < L; ++a) {
            std::size_t b = L;
            for (std::size_t c = a + 1; c < L; ++c)
                if (std::abs(shape.ladder[c] - 2.0 * shape.ladder[a]) <=
                    1e-9 * shape.ladder[c]) {
                    b = c;
                    break;
                }
            if (b == L) continue;
            ++pairs;
            for (int k = 0; k < g.cell_count(); ++k) {
                if (mask.cls[k] == CellClass::Exterior) continue;
                require(shape.psi[static_cast<std::size_t>(k) * L + b] <=
                            bound * shape.psi[static_cast<std::size_t>(k) * L + a],
                        "morrey shape: psi(x,2t) <= 2^upsilon psi(x,t) fails on the ladder");
            }
        }
        require(pairs >= 1, "morrey shape: ladder has no dyadic pairs to certify doubling");
    }
    return shape;
}

MorreyShape MorreyShape::power(const DomainMask& mask, double upsilon) {
    std::vector<double> ladder =
        geometric_ladder(mask.grid.h, mask.diameter, std::pow(2.0, 0.25));
    while (!ladder.empty() && ladder.back() >= mask.diameter) ladder.pop_back();
    require(!ladder.empty(), "morrey shape: domain too small for a radius ladder");
    return make(
        mask, std::move(ladder), [upsilon](Vec2, double r) { return std::pow(r, upsilon); },
        upsilon, true);
}

MorreyShape MorreyShape::ball_measure(const DomainMask& mask) {
    const Grid2D& g = mask.grid;
    std::vector<double> ladder = geometric_ladder(g.h, mask.diameter, std::pow(2.0, 0.25));
    while (!ladder.empty() && ladder.back() >= mask.diameter) ladder.pop_back();
    require(!ladder.empty(), "morrey shape: domain too small for a radius ladder");
    const std::vector<double> ones(static_cast<std::size_t>(g.cell_count()), 1.0);
    const MaskedPrefix prefix(mask, ones);
    MorreyShape shape;
    shape.ladder = std::move(ladder);
    shape.upsilon = 2.0; // area growth exponent; pixel counts defeat any dyadic certificate
    const std::size_t L = shape.ladder.size();
    shape.psi.assign(static_cast<std::size_t>(g.cell_count()) * L, 0.0);
    const double area = g.h * g.h;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = g.idx(i, j);
            if (mask.cls[k] == CellClass::Exterior) continue;
            for (std::size_t l = 0; l < L; ++l)
                shape.psi[static_cast<std::size_t>(k) * L + l] =
                    prefix.disc_sum(g.center(i, j), shape.ladder[l]) * area;
        }
    }
    return shape;
}

double morrey_norm(const ScalarField& f, const DomainMask& mask, const MorreyShape& shape,
                   double q) {
    require(q > 0.0 && std::isfinite(q), "morrey norm: q must lie in (0, inf)");
    validate_field(f, mask, "morrey norm");
    require(!shape.ladder.empty(), "morrey norm: shape has an empty ladder");
    require(shape.psi.size() ==
                static_cast<std::size_t>(mask.grid.cell_count()) * shape.ladder.size(),
            "morrey norm: shape grid mismatch");
    const Grid2D& g = mask.grid;
    std::vector<double> powq(f.v.size(), 0.0);
    for (std::size_t k = 0; k < f.v.size(); ++k) {
        const double a = std::abs(f.v[k]);
        if (a > 0.0) powq[k] = std::pow(a, q);
    }
    const MaskedPrefix prefix(mask, powq);
    const double area = g.h * g.h;
    const std::size_t L = shape.ladder.size();
    double best = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = g.idx(i, j);
            if (mask.cls[k] == CellClass::Exterior) continue;
            const Vec2 z = g.center(i, j);
            for (std::size_t l = 0; l < L; ++l) {
                const double mass = prefix.disc_sum(z, shape.ladder[l]) * area;
                best = std::max(best, mass / shape.psi[static_cast<std::size_t>(k) * L + l]);
            }
        }
    }
    return std::pow(best, 1.0 / q);
}

} // namespace deglap
