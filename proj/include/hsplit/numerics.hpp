#pragma once

#include <functional>
#include <vector>

namespace hsplit::numerics {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
QuadratureRule gauss_legendre(int n);

/// Integrate f over [a, b] with a precomputed Gauss-Legendre rule.
double integrate(const QuadratureRule& rule, double a, double b,
                 const std::function<double(double)>& f);

/// Composite Simpson rule with `panels` (even) subintervals.
double simpson(double a, double b, int panels, const std::function<double(double)>& f);

} // namespace hsplit::numerics
