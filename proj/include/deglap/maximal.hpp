// Discrete fractional maximal operator over an open-disc radius ladder,
// exact step distributions and sampled distribution curves.
#ifndef DEGLAP_MAXIMAL_HPP
#define DEGLAP_MAXIMAL_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deglap/matrix_weight.hpp"
#include "deglap/report.hpp"

namespace deglap {

struct MaximalConfig {
    double alpha = 0.0;                ///< order in [0, n), n = 2
    std::vector<double> radius_ladder; ///< ascending positive radii
    std::optional<double> rho_cut;     ///< radius cutoff for the restricted operator
};

MaximalConfig default_maximal_config(const DomainMask& mask, double alpha);
void validate_maximal_config(const MaximalConfig& cfg);

/// M_alpha|f| at every non-exterior cell: max over ladder radii rho of
/// rho^alpha times the pixel average of |f| over B(z, rho), where the
/// average divides by the full (infinite-lattice) pixel count of the disc
/// and f is zero off the domain.
ScalarField fractional_maximal(const ScalarField& f, const DomainMask& mask,
                               const MaximalConfig& cfg, int threads = 1);

/// Square-window alpha = 0 approximant via 2D prefix sums; smoke tests only.
ScalarField maximal_square_smoke(const ScalarField& f, const DomainMask& mask,
                                 std::span<const int> half_widths);

struct DistributionCurve {
    std::vector<double> lambdas;
    std::vector<double> masses;
    std::string weight_id;
};

/// Exact step form of lambda -> mu({|f| > lambda}): all positive jump values
/// of |f| with the mass of {|f| >= value}.
struct StepDistribution {
    std::vector<double> values;    ///< ascending distinct positive |f| values
    std::vector<double> tail_mass; ///< tail_mass[k] = mu({|f| >= values[k]})
    double domain_mass = 0.0;      ///< mu(domain)

    double mass_above(double lambda) const; ///< mu({|f| > lambda}), lambda >= 0
};

StepDistribution step_distribution(const ScalarField& f, const ScalarWeight& mu,
                                   const DomainMask& mask);

DistributionCurve distribution(const ScalarField& f, const ScalarWeight& mu,
                               const DomainMask& mask, std::span<const double> lambdas);

DistributionCurve fractional_distribution(const ScalarField& f, const ScalarWeight& mu,
                                          const DomainMask& mask, const MaximalConfig& cfg,
                                          std::span<const double> lambdas);

/// 400 log-spaced levels on [max|f|*1e-6, max|f|*(1+1e-9)].
std::vector<double> default_lambda_grid(const ScalarField& f, const DomainMask& mask,
                                        int points = 400);

/// Empirical constant for the weak-type bound
/// lambda^q |{M_alpha f > lambda}|^{1-alpha q/n} <= C ||f||_q^q.
CheckReport check_weak_type(const ScalarField& f, const DomainMask& mask, double q,
                            double alpha);

} // namespace deglap

#endif
