// Discrete Dirichlet problem for the weighted p-Laplace operator: energy
// minimization with forward-difference gradients, damped Newton with line
// search and delta-continuation, plus the V_p / shifted-N toolkit.
#ifndef DEGLAP_PLAP_HPP
#define DEGLAP_PLAP_HPP

#include <span>
#include <string>
#include <vector>

#include "deglap/grid.hpp"
#include "deglap/matrix_weight.hpp"

namespace deglap {

struct ProblemSpec {
    DomainMask mask;
    MatrixWeightField P;
    double p = 2.0;
    VectorField F;
    ScalarField g;  ///< boundary datum as a full-domain extension
    double delta = 0.0;
};

void validate_problem(const ProblemSpec& spec);

struct SolveReport {
    ScalarField u;
    double energy = 0.0;         ///< unregularized discrete energy of u
    double weak_residual = 0.0;  ///< max imbalance over single-cell hat tests, delta = 0
    int iterations = 0;
    bool converged = false;
    std::vector<double> delta_path;
    std::vector<double> energy_trace;  ///< regularized energy after each accepted step
    int gradient_fallbacks = 0;
    std::string notes;
};

/// Cells c with c, c+e1, c+e2 all non-exterior; the forward-difference
/// gradient and the discrete energy live on exactly this set.
std::vector<int> gradient_cells(const DomainMask& mask);

/// ((w(i+1,j)-w(i,j))/h, (w(i,j+1)-w(i,j))/h) on gradient cells, zero elsewhere.
VectorField forward_gradient(const ScalarField& w, const DomainMask& mask);

/// |P(x) v(x)|^p on non-exterior cells, zero outside.
ScalarField p_power_field(const MatrixWeightField& P, const VectorField& v, double p,
                          const DomainMask& mask);

/// sum over gradient cells of h^2 [ (|P grad w|^2 + delta^2)^{p/2}
///   - p |P F|^{p-2} (P F) . (P grad w) ]; the linear term is never
/// regularized.  Requires w = g on boundary cells.
double energy(const ProblemSpec& spec, const ScalarField& w);

/// Energy at an explicit regularization level plus its gradient with respect
/// to the interior cells (zero entries elsewhere).
double energy_and_gradient(const ProblemSpec& spec, const ScalarField& w, double delta,
                           ScalarField& grad);

/// Max over interior cells of the unregularized weak-form imbalance against
/// the single-cell hat test there.
double weak_residual_max(const ProblemSpec& spec, const ScalarField& u);

/// Unregularized weak-form imbalance against an arbitrary test field; linear
/// in phi by construction.
double weak_form_imbalance(const ProblemSpec& spec, const ScalarField& u,
                           const ScalarField& phi);

/// Region cells with an 8-neighbor outside the region (off-lattice and
/// exterior cells count as outside).  Pinning this rim keeps every free
/// cell's touching gradient stencils complete.
std::vector<int> region_rim(const DomainMask& mask, std::span<const int> region_cells);

/// Damped Newton on the delta-regularized energy with Armijo backtracking,
/// then delta -> delta/4 continuation until the unregularized weak residual
/// drops below tol (floor: delta = 1e-8 * data scale).  tol <= 0 selects
/// 1e-9 * max(1, |initial energy|).  Deterministic from the zero-extension
/// initial guess.
SolveReport solve(const ProblemSpec& spec, double tol = -1.0, int max_iter = 500);

/// Same minimization with F = 0 on a sub-region; boundary_values are read on
/// the region's rim, free cells start from zero.  spec.F is ignored.
SolveReport solve_homogeneous(const ProblemSpec& spec, std::span<const int> region_cells,
                              const ScalarField& boundary_values, double tol = -1.0,
                              int max_iter = 500);

/// |zeta|^{(p-2)/2} zeta, extended by 0 at the origin.
Vec2 v_p_map(Vec2 zeta, double p);

/// Psi_a(t) = integral_0^t s * max(a,s)^{p-2} ds, in closed form:
/// a^{p-2} t^2/2 for t <= a, else a^p/2 + (t^p - a^p)/p.
double shifted_N(double a, double t, double p);

} // namespace deglap

#endif
