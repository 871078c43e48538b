#include "hsplit/fd2d.hpp"

#include "hsplit/analytic.hpp"
#include "hsplit/stencils.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace hsplit {

namespace {

struct Fd2dStep {
    const HestonParams& p;
    const GridSpec& g;
    BoundaryKind kind;
    int n;
    const Surface& prev;
    const Surface& u1;
    const Surface& q1;
    const AbcHistory& hist;
    const AbcCoefficients& coeffs;
    const std::vector<BoundarySource>& past;
    const std::vector<double>& current_weight;

    // Line system for interior row j given the current iterate (neighbour rows).
    TridiagonalSystem line(const Surface& u, int j) const {
        const int I = g.I();
        const double inv_dt = 1.0 / g.dtau();
        const double centre = l2_centre_coefficient(j, g, p);
        const double half_v = 0.5 * g.v(j) / (g.ds() * g.ds());
        TridiagonalSystem sys(static_cast<std::size_t>(I + 1));
        sys.diag[0] = 1.0;
        for (int i = 1; i < I; ++i) {
            const double a = half_v * g.s(i) * g.s(i);
            sys.lower[i] = -a;
            sys.upper[i] = -a;
            sys.diag[i] = inv_dt + 2.0 * a - centre;
            sys.rhs[i] = prev(i, j) * inv_dt + l2_neighbour_terms(u, i, j, g, p);
        }
        if (kind == BoundaryKind::Original) {
            sys.lower[I] = -1.0;
            sys.diag[I] = 1.0;
            sys.rhs[I] = g.ds();
            return sys;
        }
        // Convolution condition on U2 = U - U1; the boundary-local source of
        // the current step is linear in U2(I, j).
        Surface u2_local = u;
        for (int jj = j - 1; jj <= j + 1; ++jj) {
            for (int i = I - 1; i <= I; ++i) u2_local(i, jj) = u(i, jj) - u1(i, jj);
        }
        const NodeSplit local = l2_split_at_boundary(u2_local, j, g, p);
        BoundarySource src = past[j];
        src.value += current_weight[j] * (q1(I, j) + local.qhat);
        src.diag += current_weight[j] * local.diag;
        const LineClosure c = close_line(kind, j, n, hist, coeffs, g, src);
        sys.lower[I] = c.right_lower;
        sys.diag[I] = c.right_diag;
        sys.rhs[I] = c.right_rhs + c.right_diag * u1(I, j) + c.right_lower * u1(I - 1, j);
        return sys;
    }

    double v0_coupling() const { return g.dtau() * p.kappa * p.theta / g.dv(); }

    void relax_v0(Surface& u) const {
        const double c = v0_coupling();
        u(0, 0) = 0.0;
        for (int i = 1; i <= g.I(); ++i) u(i, 0) = (prev(i, 0) + c * u(i, 1)) / (1.0 + c);
    }

    void relax_vmax(Surface& u) const {
        for (int i = 0; i <= g.I(); ++i) u(i, g.J()) = u(i, g.J() - 1);
    }

    void relax_line(Surface& u, int j) const {
        const std::vector<double> x = solve_tridiagonal(line(u, j));
        std::copy(x.begin(), x.end(), u.line(j).begin());
    }

    // Max over all equations of |residual| / |diagonal|.
    double residual(const Surface& u) const {
        const int I = g.I();
        const int J = g.J();
        const double c = v0_coupling();
        double worst = 0.0;
        for (int i = 1; i <= I; ++i) {
            const double r = (1.0 + c) * u(i, 0) - prev(i, 0) - c * u(i, 1);
            worst = std::max(worst, std::abs(r) / (1.0 + c));
        }
        worst = std::max(worst, std::abs(u(0, 0)));
        for (int i = 0; i <= I; ++i) worst = std::max(worst, std::abs(u(i, J) - u(i, J - 1)));
        for (int j = 1; j < J; ++j) {
            const TridiagonalSystem sys = line(u, j);
            const auto row = u.line(j);
            for (int i = 0; i <= I; ++i) {
                double ax = sys.diag[i] * row[i];
                if (i > 0) ax += sys.lower[i] * row[i - 1];
                if (i < I) ax += sys.upper[i] * row[i + 1];
                worst = std::max(worst, std::abs(ax - sys.rhs[i]) / std::abs(sys.diag[i]));
            }
        }
        return worst;
    }
};

} // namespace

SolveResult solve_fd2d(const HestonParams& params, const GridSpec& grid, BoundaryKind boundary,
                       const Fd2dOptions& options) {
    params.validate();
    const auto start = std::chrono::steady_clock::now();
    const int I = grid.I();
    const int J = grid.J();
    const AbcCoefficients coeffs = precompute_abc_coefficients(grid);
    const ConvolutionWeights weights(grid);
    AbcHistory hist(grid);
    Surface u = payoff_surface(grid);
    SolveReport report;
    std::vector<BoundarySource> past(J + 1);
    std::vector<double> current_weight(J + 1, 0.0);
    const double f = grid.ds() / grid.s_max();

    for (int n = 1; n <= grid.N(); ++n) {
        const double tau = grid.tau(n);
        const Surface u1 = u1_surface(grid, tau);
        Surface q1 = apply_l2_upwind(u1, grid, params);
        auto field = [tau](double s, double v) { return hsplit::u1(s, v, tau); };
        for (int j = 1; j < J; ++j) {
            q1(I, j) = l2_upwind_at(field, grid.s(I), grid.v(j), grid.ds(), grid.dv(), params);
        }
        if (boundary != BoundaryKind::Original) {
            for (int j = 1; j < J; ++j) {
                if (boundary == BoundaryKind::MApABC1) {
                    past[j] = h_mapabc1(j, n, hist, weights, grid, NodeSplit{});
                    current_weight[j] = f * weights.mapabc1(j, 0, n);
                } else {
                    past[j] = h_mapabc2(j, n, hist, weights, grid, NodeSplit{});
                    current_weight[j] = f * weights.mapabc2(j, 0, n);
                }
            }
        }

        const Surface prev = u;
        const Fd2dStep step{params, grid, boundary, n, prev, u1, q1, hist, coeffs, past, current_weight};
        int sweeps = 0;
        double res = step.residual(u);
        while (res > options.residual_tol) {
            if (sweeps >= options.max_sweeps) {
                throw SolverError("solve_fd2d: line relaxation did not converge at step " +
                                      std::to_string(n) + " (residual " + std::to_string(res) + ")",
                                  res);
            }
            step.relax_v0(u);
            for (int j = 1; j < J; ++j) step.relax_line(u, j);
            step.relax_vmax(u);
            for (int j = J - 1; j >= 1; --j) step.relax_line(u, j);
            step.relax_v0(u);
            ++sweeps;
            res = step.residual(u);
            if (!std::isfinite(res)) throw SolverError("solve_fd2d: non-finite residual", res);
        }
        u.set_time_index(n);
        report.iterations.push_back(sweeps);
        report.residuals.push_back(res);

        if (boundary != BoundaryKind::Original) {
            const Surface u2 = u - u1;
            const Surface q = apply_l2_upwind(u, grid, params);
            std::vector<double> u2_boundary(J + 1, 0.0), q_boundary(J + 1, 0.0);
            std::vector<CurveFitParams> fits(J + 1, hist.fit(0, 0));
            std::vector<double> q_row(static_cast<std::size_t>(I - 1));
            for (int j = 1; j < J; ++j) {
                u2_boundary[j] = u2(I, j);
                q_boundary[j] = q1(I, j) + l2_split_at_boundary(u2, j, grid, params).value(u2(I, j));
                if (boundary == BoundaryKind::MApABC2) {
                    for (int i = 1; i < I; ++i) q_row[i - 1] = q(i, j);
                    fits[j] = fit_q_curve(q_row, grid, warm_start(hist, j));
                }
            }
            hist.append(u2_boundary, q_boundary, fits);
        }
    }
    report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    Surface u2 = u - u1_surface(grid, grid.maturity());
    return {u, std::move(u2), std::move(report)};
}

} // namespace hsplit
