// Weighted Lebesgue / Lorentz / generalized Lorentz / psi-Morrey norms and
// the doubling machinery for cumulative Sigma functions.
#ifndef DEGLAP_FUNCTION_SPACES_HPP
#define DEGLAP_FUNCTION_SPACES_HPP

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "deglap/maximal.hpp"

namespace deglap {

struct LorentzIndices {
    double q = 1.0;
    double s = std::numeric_limits<double>::infinity();

    bool s_finite() const { return std::isfinite(s); }
};

double weighted_Lq_norm(const ScalarField& f, const ScalarWeight& omega, double q,
                        const DomainMask& mask);

/// Exact on the step distribution of a grid field: the lambda integral is
/// evaluated in closed form on every segment between jump levels.
double lorentz_norm(const ScalarField& f, const ScalarWeight& mu, const LorentzIndices& idx,
                    const DomainMask& mask);

/// Trapezoid rule in log(lambda) over a sampled curve; used for externally
/// supplied curves and the quadrature-refinement regression.
double lorentz_norm_from_curve(const DistributionCurve& curve, const LorentzIndices& idx);

struct SigmaFunction {
    enum class Kind { Table, Identity, Power } kind = Kind::Identity;
    double exponent = 1.0;          ///< for Kind::Power: Sigma(t) = t^exponent
    std::vector<double> tau;        ///< ascending positive sample grid
    std::vector<double> nu;         ///< sampled density (empty for tables)
    std::vector<double> sigma;      ///< Sigma(tau[k])
    double c1 = 2.0, c2 = 2.0;      ///< certified dyadic doubling constants

    double eval(double t) const;
    static SigmaFunction identity();
    static SigmaFunction power(double a);
    static SigmaFunction from_density(std::vector<double> tau, std::vector<double> nu);
    static SigmaFunction from_table(std::vector<double> tau, std::vector<double> sigma);
};

double generalized_lorentz_norm(const ScalarField& f, const ScalarWeight& mu,
                                const SigmaFunction& sigma, const LorentzIndices& idx,
                                const DomainMask& mask);

/// Checks Sigma(s1+s2) <= c2*(Sigma(s1)+Sigma(s2)) and, for eps in (0,1/2),
/// Sigma(eps*t) <= c1*eps^{log2 c1}*Sigma(t) on random sample pairs.
CheckReport sigma_doubling_checks(const SigmaFunction& sigma, int samples, std::uint64_t seed,
                               double tmax);

struct MorreyShape {
    std::vector<double> ladder; ///< radii, ascending, below the domain diameter
    std::vector<double> psi;    ///< psi[cell*ladder.size() + k] > 0
    double upsilon = 1.0;       ///< doubling exponent in (0, n)

    double at(int cell, int ladder_idx) const { return psi[cell * ladder.size() + ladder_idx]; }

    static MorreyShape make(const DomainMask& mask, std::vector<double> ladder,
                            const std::function<double(Vec2, double)>& fn, double upsilon,
                            bool certify_doubling = true);
    static MorreyShape power(const DomainMask& mask, double upsilon);
    /// psi(z,r) = |B(z,r) ∩ Ω|; definition-match tests only (pixel counts
    /// near r = h overshoot any 2^upsilon doubling bound, so this shape is
    /// built without the doubling certificate).
    static MorreyShape ball_measure(const DomainMask& mask);
};

double morrey_norm(const ScalarField& f, const DomainMask& mask, const MorreyShape& shape,
                   double q);

} // namespace deglap

#endif
