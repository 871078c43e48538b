#include "hsplit/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace hsplit {

namespace {

// First derivative along a line of m+1 samples f(0..m) with spacing h.
template <class Get>
double first_derivative(Get f, int k, int m, double h) {
    if (k == 0) return (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
    if (k == m) return (3.0 * f(m) - 4.0 * f(m - 1) + f(m - 2)) / (2.0 * h);
    return (f(k + 1) - f(k - 1)) / (2.0 * h);
}

template <class Get>
double second_derivative(Get f, int k, int m, double h) {
    if (k == 0) return (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / (h * h);
    if (k == m) return (2.0 * f(m) - 5.0 * f(m - 1) + 4.0 * f(m - 2) - f(m - 3)) / (h * h);
    return (f(k + 1) - 2.0 * f(k) + f(k - 1)) / (h * h);
}

} // namespace

Greeks greeks(const Surface& u, const GridSpec& grid) {
    require_match(u, grid, "greeks");
    const int I = grid.I();
    const int J = grid.J();
    if (I < 3 || J < 3) throw DomainError("greeks: grid needs I >= 3 and J >= 3");
    Greeks g{Surface(grid, 0.0, u.time_index()), Surface(grid, 0.0, u.time_index()),
             Surface(grid, 0.0, u.time_index())};
    for (int j = 0; j <= J; ++j) {
        auto along_s = [&](int i) { return u(i, j); };
        for (int i = 0; i <= I; ++i) {
            g.delta(i, j) = first_derivative(along_s, i, I, grid.ds());
            g.gamma(i, j) = second_derivative(along_s, i, I, grid.ds());
        }
    }
    for (int i = 0; i <= I; ++i) {
        auto along_v = [&](int j) { return u(i, j); };
        for (int j = 0; j <= J; ++j) g.vega(i, j) = first_derivative(along_v, j, J, grid.dv());
    }
    return g;
}

std::string to_string(ErrorNodes nodes) { return nodes == ErrorNodes::All ? "all" : "interior"; }

ErrorNodes parse_error_nodes(std::string_view name) {
    if (name == "all") return ErrorNodes::All;
    if (name == "interior") return ErrorNodes::Interior;
    throw DomainError("unknown error node set '" + std::string(name) + "'");
}

double relative_l2_error(const Surface& num, const Surface& ref, ErrorNodes nodes) {
    if (num.I() != ref.I() || num.J() != ref.J()) {
        throw DomainError("relative_l2_error: surfaces have different dimensions");
    }
    const int lo = nodes == ErrorNodes::All ? 0 : 1;
    const int hi_i = nodes == ErrorNodes::All ? num.I() : num.I() - 1;
    const int hi_j = nodes == ErrorNodes::All ? num.J() : num.J() - 1;
    double err = 0.0;
    double norm = 0.0;
    for (int j = lo; j <= hi_j; ++j) {
        for (int i = lo; i <= hi_i; ++i) {
            const double d = num(i, j) - ref(i, j);
            err += d * d;
            norm += ref(i, j) * ref(i, j);
        }
    }
    if (norm == 0.0) throw DomainError("relative_l2_error: reference norm is zero");
    return std::sqrt(err / norm);
}

double interpolate(const Surface& u, const GridSpec& grid, double s, double v) {
    require_match(u, grid, "interpolate");
    if (!(s >= 0.0 && s <= grid.s_max() && v >= 0.0 && v <= grid.v_max())) {
        throw DomainError("interpolate: point outside the grid");
    }
    const int i = std::min(static_cast<int>(s / grid.ds()), grid.I() - 1);
    const int j = std::min(static_cast<int>(v / grid.dv()), grid.J() - 1);
    const double a = s / grid.ds() - i;
    const double b = v / grid.dv() - j;
    return (1 - a) * (1 - b) * u(i, j) + a * (1 - b) * u(i + 1, j) + (1 - a) * b * u(i, j + 1) +
           a * b * u(i + 1, j + 1);
}

} // namespace hsplit
