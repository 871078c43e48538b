#pragma once

#include "hsplit/core.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace hsplit {

class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Upwind discretisation of the variance operator
///   L2 U = rho sigma v S U_Sv + sigma^2 v U_vv / 2 + kappa (theta - v) U_v
/// at interior nodes i = 1..I-1, j = 1..J-1. The boundary ring is set to 0.
///
/// Cross term: four-point average. U_vv: central. U_v: forward difference
/// weighted by kappa (theta - v)^+, backward difference weighted by
/// kappa (theta - v)^-, where (x)^- = min(x, 0).
Surface apply_l2_upwind(const Surface& u, const GridSpec& grid, const HestonParams& p);

/// Coefficient of the centre value U(i, j) in the upwind stencil at row j:
///   -sigma^2 v_j / dv^2 - kappa |theta - v_j| / dv.
double l2_centre_coefficient(int j, const GridSpec& grid, const HestonParams& p);

/// Upwind stencil with the centre value removed (neighbour terms only).
double l2_neighbour_terms(const Surface& u, int i, int j, const GridSpec& grid,
                          const HestonParams& p);

/// The upwind stencil split into its centre part and its neighbour part, so that
/// diag(i,j) * u(i,j) + qhat(i,j) equals apply_l2_upwind(u)(i,j) at interior nodes.
struct MixedSplit {
    Surface diag;
    Surface qhat;
};

MixedSplit split_l2_mixed(const Surface& u2, const GridSpec& grid, const HestonParams& p);

/// Variance operator at the truncation column i = I for 1 <= j <= J-1, split the
/// same way. The S-derivative inside the cross term is one-sided (backward)
/// because no node exists beyond S~max.
struct NodeSplit {
    double diag = 0.0;
    double qhat = 0.0;
    double value(double centre) const { return diag * centre + qhat; }
};

NodeSplit l2_split_at_boundary(const Surface& u, int j, const GridSpec& grid,
                               const HestonParams& p);

/// Full upwind stencil at interior (i, j) for a field given as a callable, used
/// where the field is known beyond the grid (the analytic u1).
template <class Field>
double l2_upwind_at(Field&& field, double s, double v, double ds, double dv,
                    const HestonParams& p) {
    const double up = p.kappa * std::max(p.theta - v, 0.0);
    const double down = p.kappa * std::min(p.theta - v, 0.0);
    const double centre = field(s, v);
    const double cross = (field(s + ds, v + dv) - field(s - ds, v + dv) + field(s - ds, v - dv) -
                          field(s + ds, v - dv)) /
                         (4.0 * ds * dv);
    const double vv = (field(s, v + dv) - 2.0 * centre + field(s, v - dv)) / (dv * dv);
    return p.rho * p.sigma * v * s * cross + 0.5 * p.sigma * p.sigma * v * vv +
           up * (field(s, v + dv) - centre) / dv + down * (centre - field(s, v - dv)) / dv;
}

/// Tridiagonal system A x = rhs. Row k reads lower[k] x[k-1] + diag[k] x[k] +
/// upper[k] x[k+1]; lower[0] and upper[M-1] are ignored.
struct TridiagonalSystem {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;
    std::vector<double> rhs;

    explicit TridiagonalSystem(std::size_t m = 0) : lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0) {}
    std::size_t size() const { return diag.size(); }
};

/// Implicit S-direction line system at fixed j (rows i = 0..I):
///   (U_i - U_prev_i) / dtau = v_j S_i^2 / 2 * (U_{i+1} - 2 U_i + U_{i-1}) / dS^2
///                             + diag_coeffs(i,j) U_i + source(i,j)
/// for i = 1..I-1. Rows 0 and I are left as identity rows for the boundary
/// closures to overwrite. Throws SingularSystemError if an interior row is
/// not strictly diagonally dominant.
TridiagonalSystem assemble_line_system(int j, const Surface& u2_prev_time, const Surface& source,
                                       const Surface& diag_coeffs, const GridSpec& grid);

/// Thomas elimination. Throws SingularSystemError on a zero (or non-finite) pivot.
std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys);

/// max_k |(A x - rhs)_k|
double tridiagonal_residual(const TridiagonalSystem& sys, const std::vector<double>& x);

} // namespace hsplit
