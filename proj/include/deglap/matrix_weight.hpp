// SPD matrix weight fields: closed-form 2x2 symmetric eigen calculus,
// logarithm averages, the log-oscillation seminorm, scalar weights,
// ellipticity, and Muckenhoupt-type constant estimation.
#ifndef DEGLAP_MATRIX_WEIGHT_HPP
#define DEGLAP_MATRIX_WEIGHT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deglap/grid.hpp"
#include "deglap/rng.hpp"

namespace deglap {

/// 2x2 symmetric matrix [[a11,a12],[a12,a22]].
struct SymMat2 {
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;

    static SymMat2 identity() { return {1.0, 0.0, 1.0}; }
    static SymMat2 diag(double a, double b) { return {a, 0.0, b}; }

    SymMat2 operator+(const SymMat2& o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
    SymMat2 operator-(const SymMat2& o) const { return {a11 - o.a11, a12 - o.a12, a22 - o.a22}; }
    SymMat2 operator*(double t) const { return {a11 * t, a12 * t, a22 * t}; }
    Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }

    /// Eigenvalues, descending.
    void eigenvalues(double& lam1, double& lam2) const;
    /// Spectral norm = max |eigenvalue|.
    double spectral_norm() const;
    double min_eigenvalue() const;
    /// cond_2 = |M|·|M^{-1}|; requires PD.
    double cond() const;
    bool positive_definite() const;
};

/// Congruence Q^T A Q for a rotation by angle t.
SymMat2 rotate_congruence(const SymMat2& a, double t);

SymMat2 sym_log(const SymMat2& a);
SymMat2 sym_exp(const SymMat2& a);

struct MatrixWeightField {
    Grid2D grid;
    std::vector<SymMat2> m;
    double lambda_declared = 1.0; ///< uniform bound on cond_2 over the field

    MatrixWeightField() = default;
    explicit MatrixWeightField(const Grid2D& g)
        : grid(g), m(g.cell_count(), SymMat2::identity()) {}
    const SymMat2& at(int i, int j) const { return m[grid.idx(i, j)]; }
    SymMat2& at(int i, int j) { return m[grid.idx(i, j)]; }
};

/// Checks symmetry/PD on non-exterior cells and cond <= lambda_declared.
void validate_matrix_field(const MatrixWeightField& f, const DomainMask& mask);

/// Sets lambda_declared to the measured max condition number.
void measure_lambda(MatrixWeightField& f);

enum class WeightRole : std::uint8_t { Omega, Mu, NuFree };

struct ScalarWeight {
    Grid2D grid;
    std::vector<double> v;
    WeightRole role = WeightRole::NuFree;

    ScalarWeight() = default;
    ScalarWeight(const Grid2D& g, WeightRole r) : grid(g), v(g.cell_count(), 0.0), role(r) {}
    double at(int i, int j) const { return v[grid.idx(i, j)]; }
    ScalarField as_field() const {
        ScalarField f(grid);
        f.v = v;
        return f;
    }
};

SymMat2 log_average(const MatrixWeightField& f, std::span<const int> cells);

/// Sup over non-exterior centers and ladder radii {h, h*2^{1/4}, ... <= R} of
/// the B∩Ω mean spectral deviation of log P from its log-average.
double log_bmo_seminorm(const MatrixWeightField& f, const DomainMask& mask, double R,
                        int threads = 1);

ScalarWeight scalar_weight_of(const MatrixWeightField& f);
double ellipticity_lambda(const MatrixWeightField& f, const DomainMask& mask);

struct BallWitness {
    Vec2 center;
    double radius = 0.0;
    double value = 0.0;
};

/// Ladder lower bound for the A_q constant, q in (1, inf).
double muckenhoupt_Aq(const ScalarWeight& w, const DomainMask& mask, double q,
                      std::span<const double> radius_ladder, BallWitness* witness = nullptr);

struct AInftyParams {
    double c1 = 1.0, c2 = 1.0;
    double nu1 = 1.0, nu2 = 1.0;
};

struct SubsetPair {
    std::vector<int> subset; ///< O
    std::vector<int> ball;   ///< B, superset of O
};

/// Balls with concentric, random, and weight-ranked sub-cell families.
std::vector<SubsetPair> make_subset_family(const DomainMask& mask, const ScalarWeight& w,
                                           std::uint64_t seed, int n_balls);

AInftyParams a_infty_params(const ScalarWeight& w, const DomainMask& mask,
                            std::span<const SubsetPair> family);

// Synthetic generators.  All sample closed-form formulas at cell centers, so
// the same seed yields the same continuum object at every resolution.

struct FourierModes {
    struct Mode {
        double ax = 0.0, ay = 0.0, amp = 0.0, phase = 0.0;
    };
    std::vector<Mode> modes;
    double offset = 0.0;

    double eval(double x, double y) const;
    Vec2 grad(double x, double y) const;
    static FourierModes random(Rng& rng, int n_modes, int max_wavenumber, double amp_scale);
};

MatrixWeightField constant_matrix_field(const Grid2D& grid, const SymMat2& value);
/// R(theta(x)) diag(e^{+a}, e^{-a}) R(theta(x))^T.
MatrixWeightField rotated_anisotropy_field(const Grid2D& grid, double a,
                                           const FourierModes& theta);
MatrixWeightField checkerboard_matrix_field(const Grid2D& grid, double lo, double hi, int block);
MatrixWeightField power_matrix_field(const Grid2D& grid, double beta, Vec2 center);

ScalarWeight constant_weight(const Grid2D& grid, double c, WeightRole role = WeightRole::Mu);
ScalarWeight checkerboard_weight(const Grid2D& grid, double lo, double hi, int block);
ScalarWeight power_weight(const Grid2D& grid, double beta, Vec2 center);

} // namespace deglap

#endif
