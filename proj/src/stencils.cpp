#include "hsplit/stencils.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hsplit {

double l2_centre_coefficient(int j, const GridSpec& grid, const HestonParams& p) {
    const double v = grid.v(j);
    const double dv = grid.dv();
    return -p.sigma * p.sigma * v / (dv * dv) - p.kappa * std::abs(p.theta - v) / dv;
}

double l2_neighbour_terms(const Surface& u, int i, int j, const GridSpec& grid,
                          const HestonParams& p) {
    const double s = grid.s(i);
    const double v = grid.v(j);
    const double ds = grid.ds();
    const double dv = grid.dv();
    const double up = p.kappa * std::max(p.theta - v, 0.0);
    const double down = p.kappa * std::min(p.theta - v, 0.0);
    const double cross =
        (u(i + 1, j + 1) - u(i - 1, j + 1) + u(i - 1, j - 1) - u(i + 1, j - 1)) / (4.0 * ds * dv);
    return p.rho * p.sigma * v * s * cross +
           0.5 * p.sigma * p.sigma * v * (u(i, j + 1) + u(i, j - 1)) / (dv * dv) +
           up * u(i, j + 1) / dv - down * u(i, j - 1) / dv;
}

Surface apply_l2_upwind(const Surface& u, const GridSpec& grid, const HestonParams& p) {
    require_match(u, grid, "apply_l2_upwind");
    Surface q(grid, 0.0, u.time_index());
    for (int j = 1; j < grid.J(); ++j) {
        const double centre = l2_centre_coefficient(j, grid, p);
        for (int i = 1; i < grid.I(); ++i) {
            q(i, j) = centre * u(i, j) + l2_neighbour_terms(u, i, j, grid, p);
        }
    }
    return q;
}

MixedSplit split_l2_mixed(const Surface& u2, const GridSpec& grid, const HestonParams& p) {
    require_match(u2, grid, "split_l2_mixed");
    MixedSplit out{Surface(grid, 0.0, u2.time_index()), Surface(grid, 0.0, u2.time_index())};
    for (int j = 1; j < grid.J(); ++j) {
        const double centre = l2_centre_coefficient(j, grid, p);
        for (int i = 1; i < grid.I(); ++i) {
            out.diag(i, j) = centre;
            out.qhat(i, j) = l2_neighbour_terms(u2, i, j, grid, p);
        }
    }
    return out;
}

NodeSplit l2_split_at_boundary(const Surface& u, int j, const GridSpec& grid,
                               const HestonParams& p) {
    require_match(u, grid, "l2_split_at_boundary");
    if (j < 1 || j >= grid.J()) throw DomainError("l2_split_at_boundary: j out of range");
    const int I = grid.I();
    const double s = grid.s(I);
    const double v = grid.v(j);
    const double ds = grid.ds();
    const double dv = grid.dv();
    const double up = p.kappa * std::max(p.theta - v, 0.0);
    const double down = p.kappa * std::min(p.theta - v, 0.0);
    const double cross =
        ((u(I, j + 1) - u(I - 1, j + 1)) - (u(I, j - 1) - u(I - 1, j - 1))) / (2.0 * ds * dv);
    NodeSplit out;
    out.diag = l2_centre_coefficient(j, grid, p);
    out.qhat = p.rho * p.sigma * v * s * cross +
               0.5 * p.sigma * p.sigma * v * (u(I, j + 1) + u(I, j - 1)) / (dv * dv) +
               up * u(I, j + 1) / dv - down * u(I, j - 1) / dv;
    return out;
}

TridiagonalSystem assemble_line_system(int j, const Surface& u2_prev_time, const Surface& source,
                                       const Surface& diag_coeffs, const GridSpec& grid) {
    if (j < 1 || j >= grid.J()) throw DomainError("assemble_line_system: j out of range");
    require_match(u2_prev_time, grid, "assemble_line_system");
    require_match(source, grid, "assemble_line_system");
    require_match(diag_coeffs, grid, "assemble_line_system");

    const int I = grid.I();
    const double inv_dt = 1.0 / grid.dtau();
    const double half_v_over_ds2 = 0.5 * grid.v(j) / (grid.ds() * grid.ds());
    TridiagonalSystem sys(static_cast<std::size_t>(I + 1));
    sys.diag[0] = 1.0;
    sys.diag[I] = 1.0;
    for (int i = 1; i < I; ++i) {
        const double a = half_v_over_ds2 * grid.s(i) * grid.s(i);
        sys.lower[i] = -a;
        sys.upper[i] = -a;
        sys.diag[i] = inv_dt + 2.0 * a - diag_coeffs(i, j);
        sys.rhs[i] = u2_prev_time(i, j) * inv_dt + source(i, j);
        const double margin = std::abs(sys.diag[i]) - std::abs(sys.lower[i]) - std::abs(sys.upper[i]);
        if (!(margin > 0.0)) {
            throw SingularSystemError("assemble_line_system: row " + std::to_string(i) +
                                      " is not diagonally dominant");
        }
    }
    return sys;
}

std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys) {
    const std::size_t m = sys.size();
    if (m == 0) return {};
    if (sys.lower.size() != m || sys.upper.size() != m || sys.rhs.size() != m) {
        throw DomainError("solve_tridiagonal: inconsistent array lengths");
    }
    std::vector<double> c(m, 0.0);
    std::vector<double> x(m, 0.0);
    double pivot = sys.diag[0];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw SingularSystemError("solve_tridiagonal: zero pivot");
    c[0] = m > 1 ? sys.upper[0] / pivot : 0.0;
    x[0] = sys.rhs[0] / pivot;
    for (std::size_t k = 1; k < m; ++k) {
        pivot = sys.diag[k] - sys.lower[k] * c[k - 1];
        if (pivot == 0.0 || !std::isfinite(pivot)) {
            throw SingularSystemError("solve_tridiagonal: zero pivot at row " + std::to_string(k));
        }
        c[k] = k + 1 < m ? sys.upper[k] / pivot : 0.0;
        x[k] = (sys.rhs[k] - sys.lower[k] * x[k - 1]) / pivot;
    }
    for (std::size_t k = m - 1; k > 0; --k) x[k - 1] -= c[k - 1] * x[k];
    return x;
}

double tridiagonal_residual(const TridiagonalSystem& sys, const std::vector<double>& x) {
    const std::size_t m = sys.size();
    double worst = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        double ax = sys.diag[k] * x[k];
        if (k > 0) ax += sys.lower[k] * x[k - 1];
        if (k + 1 < m) ax += sys.upper[k] * x[k + 1];
        worst = std::max(worst, std::abs(ax - sys.rhs[k]));
    }
    return worst;
}

} // namespace hsplit
