#include "hsplit/core.hpp"

#include <algorithm>
#include <cmath>

namespace hsplit {

void HestonParams::validate() const {
    auto check = [](bool ok, const char* msg) {
        if (!ok) throw DomainError(msg);
    };
    check(std::isfinite(kappa) && kappa >= 0.0, "kappa must be finite and >= 0");
    check(std::isfinite(theta) && theta >= 0.0, "theta must be finite and >= 0");
    check(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and >= 0");
    check(std::isfinite(rho) && std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
    check(std::isfinite(maturity) && maturity > 0.0, "maturity T must be > 0");
    check(std::isfinite(rate), "rate r must be finite");
    check(std::isfinite(strike) && strike > 0.0, "strike K must be > 0");
}

GridSpec::GridSpec(double s_max, double v_max, int I, int J, int N, double maturity)
    : s_max_(s_max), v_max_(v_max), maturity_(maturity), I_(I), J_(J), N_(N) {
    if (!(std::isfinite(s_max) && s_max > 1.0)) throw DomainError("s_max must be > 1");
    if (!(std::isfinite(v_max) && v_max > 0.0)) throw DomainError("v_max must be > 0");
    if (!(std::isfinite(maturity) && maturity > 0.0)) throw DomainError("maturity must be > 0");
    if (I < 2 || J < 2 || N < 2) throw DomainError("I, J, N must all be >= 2");
    ds_ = s_max / I;
    dv_ = v_max / J;
    dtau_ = maturity / N;
}

namespace {
int divisions(double length, double h, const char* what) {
    const double ratio = length / h;
    const double rounded = std::round(ratio);
    if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw DomainError(std::string(what) + " is not an integer multiple of h");
    }
    return static_cast<int>(rounded);
}
} // namespace

GridSpec GridSpec::uniform(double s_max, double v_max, double maturity, double h) {
    if (!(std::isfinite(h) && h > 0.0)) throw DomainError("step h must be > 0");
    return GridSpec(s_max, v_max, divisions(s_max, h, "s_max"), divisions(v_max, h, "v_max"),
                    divisions(maturity, h, "maturity"), maturity);
}

Surface::Surface(const GridSpec& grid, double fill, int time_index)
    : I_(grid.I()), J_(grid.J()), time_index_(time_index), values_(grid.node_count(), fill) {}

bool Surface::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

Surface& Surface::operator+=(const Surface& other) {
    if (other.I_ != I_ || other.J_ != J_) throw DomainError("surface dimension mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
}

Surface& Surface::operator-=(const Surface& other) {
    if (other.I_ != I_ || other.J_ != J_) throw DomainError("surface dimension mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
}

Surface& Surface::operator*=(double factor) {
    for (double& x : values_) x *= factor;
    return *this;
}

Surface operator+(Surface a, const Surface& b) { return a += b; }
Surface operator-(Surface a, const Surface& b) { return a -= b; }
Surface operator*(double factor, Surface a) { return a *= factor; }

void require_match(const Surface& u, const GridSpec& grid, const char* what) {
    if (!u.matches(grid)) {
        throw DomainError(std::string(what) + ": surface dimensions do not match the grid");
    }
}

TransformedPoint to_transformed(double spot, double t, const HestonParams& p) {
    if (!(t >= 0.0 && t <= p.maturity)) throw DomainError("to_transformed: t outside [0, T]");
    if (!(spot >= 0.0)) throw DomainError("to_transformed: spot must be >= 0");
    const double tau = p.maturity - t;
    return {spot * std::exp(p.rate * tau) / p.strike, tau};
}

double from_transformed(double u, double tau, const HestonParams& p) {
    if (std::isnan(u)) throw DomainError("from_transformed: value is NaN");
    if (!(tau >= 0.0 && tau <= p.maturity)) throw DomainError("from_transformed: tau outside [0, T]");
    return u * p.strike * std::exp(-p.rate * tau);
}

Surface payoff_surface(const GridSpec& grid) {
    Surface u(grid);
    for (int j = 0; j <= grid.J(); ++j) {
        for (int i = 0; i <= grid.I(); ++i) u(i, j) = std::max(grid.s(i) - 1.0, 0.0);
    }
    return u;
}

} // namespace hsplit
