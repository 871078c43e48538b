#pragma once

#include "hsplit/core.hpp"

#include <cstdint>
#include <stdexcept>

namespace hsplit {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureConfig {
    double upper = 200.0; // truncation of the Fourier integral
    int nodes = 512;      // Gauss-Legendre nodes on [0, upper]

    void validate() const;
};

/// Heston European call in the transformed frame (zero rate, unit strike):
///   U = (S - 1) / 2 + (1/pi) int_0^inf Re[(phi(u - i) - phi(u)) / (i u)] du,
/// with phi the characteristic function of ln S_tau in the rotation-free
/// ("little trap") form. Cancellation-prone pieces are evaluated in forms that
/// stay accurate as sigma -> 0; sigma = 0 falls back to Black-Scholes with the
/// time-averaged deterministic variance.
double heston_cf_price(double s_tilde, double v, double tau, const HestonParams& p,
                       const QuadratureConfig& quad = {});

/// Time average over [0, tau] of the deterministic variance path
/// v(t) = theta + (v0 - theta) e^{-kappa t}.
double averaged_variance(double v0, double tau, double kappa, double theta);

struct MonteCarloEstimate {
    double estimate;
    double std_error;
};

struct MonteCarloConfig {
    long paths = 100000; // antithetic pairs count as two paths
    int steps = 200;
    std::uint64_t seed = 20240601;
    int threads = 1;
};

/// Full-truncation Euler on (ln S, v) with antithetic variates. The batch
/// decomposition is fixed, so the estimate depends only on the seed.
MonteCarloEstimate mc_price(double s_tilde, double v, double tau, const HestonParams& p,
                            const MonteCarloConfig& config = {});

/// heston_cf_price at every node with tau = T; the S~ = 0 column is 0 and the
/// v = 0 row is the characteristic-function price at v = 0.
Surface reference_surface(const GridSpec& grid, const HestonParams& p,
                          const QuadratureConfig& quad = {});

} // namespace hsplit
