// Empirical checks of the quantified inequalities: synthesized instances,
// sweeps over their parameters, and reported best constants with witnesses.
#ifndef DEGLAP_VERIFICATION_HPP
#define DEGLAP_VERIFICATION_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deglap/function_spaces.hpp"
#include "deglap/maximal.hpp"
#include "deglap/plap.hpp"
#include "deglap/report.hpp"

namespace deglap {

struct InstanceSpec {
    std::uint64_t seed = 1;
    double p = 2.0;
    double kappa_target = 0.1;  ///< log-oscillation seminorm, calibrated at 64x64
    int nx = 64, ny = 64;
    double amp = 1.0;           ///< amplitude of the F and g data
    bool f_is_grad_g = false;   ///< F := forward-difference gradient of g
};

struct Instance {
    std::string id;
    ProblemSpec prob;
    double kappa_measured = 0.0;  ///< log-oscillation at the instance resolution
    double lambda = 1.0;          ///< max condition number of P
    double kappa_target = 0.0;
    std::uint64_t seed = 0;
    double solve_tol = -1.0;      ///< forwarded to solve(); negative = default
};

/// Samples closed-form random Fourier data on the unit square.  The rotation
/// angle field and data modes depend only on the seed, and the log amplitude
/// is calibrated once on a fixed 64x64 grid, so different resolutions of the
/// same seed sample one continuum object.
Instance make_instance(const InstanceSpec& spec);

/// F + forward-difference gradient of g on gradient cells, zero elsewhere.
VectorField total_data_field(const ProblemSpec& spec);

nlohmann::json instance_meta(const Instance& inst);

/// Psi(|z1-z2|) <= C |V_p(z1)-V_p(z2)|^2 for p >= 2 (Psi(t) = t^p/p); for
/// 1 < p < 2 the eps-split variant with C(eps) and the eps^{1-2/p} fit.
CheckReport check_vphi(double p, int trials, std::uint64_t seed);

/// Energy bound: sum |P grad u|^p <= C (sum |P F|^p + sum |P grad g|^p),
/// max ratio over the given instances.
CheckReport check_energy_estimate(std::span<const Instance> instances);

/// Comparison with the homogeneous solution v on a ball region (v pinned to
/// u - g on the rim), plus the reverse Hoelder ratios between the 1/16 and
/// 1/2 ball averages of |P grad v|.
CheckReport check_comparison(const Instance& inst, Vec2 center, double radius);

/// Level-set estimate for the maximal field of |P grad u|^p against
/// |P G|^p: per eps, the smallest C with
///   d(eps^{-theta} lambda) <= C eps d(lambda) + d_G(eps^gamma lambda)
/// over the lambda grid, best gamma in {0.5, 1, 2}.  An empty lambda grid
/// selects the default grid of the maximal field.
CheckReport check_levelset(const Instance& inst, double alpha, const ScalarWeight& mu,
                           double theta, std::span<const double> eps_grid,
                           std::span<const double> lambda_grid);

struct SpaceSpec {
    enum class Kind { Lorentz, GeneralizedLorentz, Morrey } kind = Kind::Lorentz;
    ScalarWeight mu;      ///< measure weight for the Lorentz kinds
    SigmaFunction sigma;  ///< GeneralizedLorentz only
    MorreyShape shape;    ///< Morrey only
    double alpha = 0.0;   ///< order of the maximal operator on both sides
};

/// Norm transfer ||M_alpha(|P grad u|^p)|| <= C ||M_alpha(|P G|^p)||,
/// swept over q in {0.5, 1, 2} and (for the Lorentz kinds) s in {1, 2, inf}.
CheckReport check_norm_transfer(const Instance& inst, const SpaceSpec& space);

/// Indicator maximal bound on annuli: M chi_{B(y,rho)} <= 2^{-2(j-1)} up to
/// a (1 + C_disc h/rho) pixel factor, plus the far-field average ratio at
/// r = 2^{j+2} rho.
CheckReport check_maximal_indicator(const DomainMask& mask, Vec2 y, double rho, int j_max);

} // namespace deglap

#endif
