#include "hsplit/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hsplit {

double normal_cdf(double x) {
    if (std::isnan(x)) throw DomainError("normal_cdf: NaN input");
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double u1(double s_tilde, double v, double tau) {
    if (!(s_tilde >= 0.0) || !(v >= 0.0) || !(tau >= 0.0)) {
        throw DomainError("u1: arguments must be non-negative");
    }
    if (s_tilde == 0.0) return 0.0;
    const double w = v * tau;
    if (w == 0.0) return std::max(s_tilde - 1.0, 0.0);
    const double sw = std::sqrt(w);
    const double ls = std::log(s_tilde);
    const double d_plus = (ls + 0.5 * w) / sw;
    const double d_minus = d_plus - sw;
    return s_tilde * normal_cdf(d_plus) - normal_cdf(d_minus);
}

Surface u1_surface(const GridSpec& grid, double tau) {
    Surface u(grid);
    for (int j = 0; j <= grid.J(); ++j) {
        for (int i = 0; i <= grid.I(); ++i) u(i, j) = u1(grid.s(i), grid.v(j), tau);
    }
    return u;
}

U1Partials u1_partials(double s_tilde, double v, double tau) {
    if (!(s_tilde > 0.0 && v > 0.0 && tau > 0.0)) {
        throw DomainError("u1_partials: arguments must be positive");
    }
    const double w = v * tau;
    const double sw = std::sqrt(w);
    const double d_plus = (std::log(s_tilde) + 0.5 * w) / sw;
    const double d_minus = d_plus - sw;
    const double pdf = normal_pdf(d_plus);
    // dU1/dw = S pdf(d+) / (2 sqrt w), dd+/dw = -d- / (2 w).
    U1Partials out{};
    out.ds = normal_cdf(d_plus);
    out.dv = tau * s_tilde * pdf / (2.0 * sw);
    out.dvv = tau * tau * s_tilde * pdf * (d_plus * d_minus - 1.0) / (4.0 * w * sw);
    out.dsv = -tau * pdf * d_minus / (2.0 * w);
    return out;
}

Surface q1_exact(const GridSpec& grid, double tau, const HestonParams& p) {
    if (!(tau > 0.0)) throw DomainError("q1_exact: tau must be > 0");
    Surface q(grid);
    for (int j = 1; j <= grid.J(); ++j) {
        const double v = grid.v(j);
        for (int i = 1; i <= grid.I(); ++i) {
            const double s = grid.s(i);
            const U1Partials d = u1_partials(s, v, tau);
            q(i, j) = p.rho * p.sigma * v * s * d.dsv + 0.5 * p.sigma * p.sigma * v * d.dvv +
                      p.kappa * (p.theta - v) * d.dv;
        }
    }
    const double kt = p.kappa * p.theta;
    for (int i = 1; i <= grid.I(); ++i) {
        const double s = grid.s(i);
        if (std::abs(std::log(s)) < 1e-12) {
            q(i, 0) = kt * (u1(s, grid.v(1), tau) - u1(s, 0.0, tau)) / grid.dv();
        } else {
            q(i, 0) = 0.0;
        }
    }
    return q;
}

} // namespace hsplit
