#pragma once

#include "hsplit/core.hpp"

namespace hsplit {

/// Standard normal CDF, from the complementary error function.
double normal_cdf(double x);

double normal_pdf(double x);

/// Zero-rate, unit-strike Black-Scholes call with total variance v * tau:
///   U1 = S N(d+) - N(d-),  d+- = (ln S +- v tau / 2) / sqrt(v tau).
/// Returns the payoff when v * tau = 0 and 0 when S = 0.
double u1(double s_tilde, double v, double tau);

/// u1 at every node of the grid, boundary ring included.
Surface u1_surface(const GridSpec& grid, double tau);

/// Partial derivatives of u1 needed by the variance operator.
struct U1Partials {
    double ds;  // dU1/dS
    double dv;  // dU1/dv
    double dvv; // d2U1/dv2
    double dsv; // d2U1/dSdv
};

/// Requires s_tilde > 0, v > 0, tau > 0.
U1Partials u1_partials(double s_tilde, double v, double tau);

/// The variance operator applied analytically to u1:
///   rho sigma v S U1_Sv + sigma^2 v U1_vv / 2 + kappa (theta - v) U1_v.
/// The v = 0 row holds the v -> 0 limit kappa theta U1_v, which is 0 away from
/// S~ = 1; on a node sitting exactly at S~ = 1 the limit is unbounded and the
/// forward difference kappa theta (U1(i,1) - U1(i,0)) / dv is stored instead.
Surface q1_exact(const GridSpec& grid, double tau, const HestonParams& p);

} // namespace hsplit
