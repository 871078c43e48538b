#include "hsplit/itsp.hpp"

#include "hsplit/analytic.hpp"
#include "hsplit/stencils.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace hsplit {

std::string to_string(Algorithm a) { return a == Algorithm::Mixed ? "mixed" : "lagged"; }

Algorithm parse_algorithm(std::string_view name) {
    if (name == "mixed" || name == "alg2") return Algorithm::Mixed;
    if (name == "lagged" || name == "alg1") return Algorithm::Lagged;
    throw DomainError("unknown algorithm '" + std::string(name) + "'");
}

std::string to_string(Q1Mode m) { return m == Q1Mode::Exact ? "exact" : "discrete"; }

Q1Mode parse_q1_mode(std::string_view name) {
    if (name == "discrete") return Q1Mode::Discrete;
    if (name == "exact") return Q1Mode::Exact;
    throw DomainError("unknown q1_mode '" + std::string(name) + "'");
}

void ItspConfig::validate() const {
    if (!(tol > 0.0)) throw DomainError("tol must be > 0");
    if (max_iter < 1) throw DomainError("max_iter must be >= 1");
}

long SolveReport::total_iterations() const {
    return std::accumulate(iterations.begin(), iterations.end(), 0L);
}

struct SplittingStepper::LevelData {
    int n;
    Surface u1;
    Surface q1;                         // interior nodes and the column i = I
    std::vector<BoundarySource> past;   // history part of dS * H per j
    std::vector<double> current_weight; // dS/S~max * w0 per j
};

SplittingStepper::SplittingStepper(const HestonParams& params, const GridSpec& grid,
                                   const ItspConfig& config, BoundaryKind boundary)
    : params_(params),
      grid_(grid),
      config_(config),
      boundary_(boundary),
      coeffs_(precompute_abc_coefficients(grid)),
      weights_(grid),
      history_(grid),
      u2_(grid) {
    params_.validate();
    config_.validate();
}

Surface SplittingStepper::solution() const {
    Surface u = u1_surface(grid_, grid_.tau(n_)) + u2_;
    u.set_time_index(n_);
    return u;
}

SplittingStepper::LevelData SplittingStepper::prepare_level(int n) const {
    const double tau = grid_.tau(n);
    const int I = grid_.I();
    const int J = grid_.J();
    LevelData level{n, u1_surface(grid_, tau), Surface(grid_), {}, {}};

    if (config_.q1_mode == Q1Mode::Exact) {
        level.q1 = q1_exact(grid_, tau, params_);
    } else {
        level.q1 = apply_l2_upwind(level.u1, grid_, params_);
        // The closed form extends past S~max, so the full stencil applies on i = I.
        auto field = [tau](double s, double v) { return u1(s, v, tau); };
        for (int j = 1; j < J; ++j) {
            level.q1(I, j) =
                l2_upwind_at(field, grid_.s(I), grid_.v(j), grid_.ds(), grid_.dv(), params_);
        }
    }

    level.past.assign(J + 1, BoundarySource{});
    level.current_weight.assign(J + 1, 0.0);
    if (boundary_ != BoundaryKind::Original) {
        const double f = grid_.ds() / grid_.s_max();
        for (int j = 1; j < J; ++j) {
            if (boundary_ == BoundaryKind::MApABC1) {
                level.past[j] = h_mapabc1(j, n, history_, weights_, grid_, NodeSplit{});
                level.current_weight[j] = f * weights_.mapabc1(j, 0, n);
            } else {
                level.past[j] = h_mapabc2(j, n, history_, weights_, grid_, NodeSplit{});
                level.current_weight[j] = f * weights_.mapabc2(j, 0, n);
            }
        }
    }
    return level;
}

SplittingStepper::StepOutcome SplittingStepper::iterate(const LevelData& level, bool mixed) {
    const int I = grid_.I();
    const int J = grid_.J();
    const double dv = grid_.dv();
    const double kt = params_.kappa * params_.theta;
    const double c0 = grid_.dtau() * kt / dv;
    const double norm_scale =
        config_.norm == IterationNorm::Scaled ? std::sqrt(grid_.ds() * grid_.dv()) : 1.0;

    const Surface& u2_prev = u2_;
    Surface iter = u2_prev;
    Surface source(grid_);
    Surface diag(grid_);
    std::vector<double> q_row0(I + 1, 0.0);
    StepOutcome out;

    for (int m = 1; m <= config_.max_iter; ++m) {
        if (mixed) {
            MixedSplit split = split_l2_mixed(iter, grid_, params_);
            source = level.q1 + split.qhat;
            diag = std::move(split.diag);
        } else {
            source = level.q1 + apply_l2_upwind(iter, grid_, params_);
        }

        Surface next(grid_, 0.0, level.n);
        for (int j = 1; j < J; ++j) {
            TridiagonalSystem sys = assemble_line_system(j, u2_prev, source, diag, grid_);
            BoundarySource src;
            if (boundary_ != BoundaryKind::Original) {
                const NodeSplit local = l2_split_at_boundary(iter, j, grid_, params_);
                const double w = level.current_weight[j];
                src = level.past[j];
                if (mixed) {
                    src.value += w * (level.q1(I, j) + local.qhat);
                    src.diag += w * local.diag;
                } else {
                    src.value += w * (level.q1(I, j) + local.value(iter(I, j)));
                }
            }
            close_line(boundary_, j, level.n, history_, coeffs_, grid_, src).apply(sys);
            const std::vector<double> x = solve_tridiagonal(sys);
            std::copy(x.begin(), x.end(), next.line(j).begin());
        }

        // v = 0: U2_tau = kappa theta U_v with a forward difference; the centre
        // value is implicit in the mixed scheme and lagged otherwise.
        for (int i = 1; i <= I; ++i) {
            const double du1 = level.u1(i, 1) - level.u1(i, 0);
            if (mixed) {
                q_row0[i] = kt * (du1 + next(i, 1) - u2_prev(i, 0)) / (dv * (1.0 + c0));
            } else {
                q_row0[i] = kt * (du1 + next(i, 1) - iter(i, 0)) / dv;
            }
        }
        close_v_boundaries(next, u2_prev.line(0), q_row0, grid_);

        double sum = 0.0;
        const auto a = next.values();
        const auto b = iter.values();
        for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
        const double diff = norm_scale * std::sqrt(sum);

        out.iterations = m;
        out.residual = diff;
        if (!std::isfinite(diff) || !next.all_finite()) {
            out.finite = false;
            return out;
        }
        iter = std::move(next);
        if (diff < config_.tol) {
            out.converged = true;
            break;
        }
    }
    u2_ = std::move(iter);
    u2_.set_time_index(level.n);
    return out;
}

void SplittingStepper::accept(const LevelData& level) {
    n_ = level.n;
    if (boundary_ == BoundaryKind::Original) return;

    const int I = grid_.I();
    const int J = grid_.J();
    std::vector<double> u2_boundary(J + 1, 0.0);
    std::vector<double> q_boundary(J + 1, 0.0);
    std::vector<CurveFitParams> fits(J + 1, history_.fit(0, 0));
    const Surface q2 = boundary_ == BoundaryKind::MApABC2 ? apply_l2_upwind(u2_, grid_, params_)
                                                          : Surface(grid_);
    std::vector<double> q_row(static_cast<std::size_t>(I - 1));
    for (int j = 1; j < J; ++j) {
        u2_boundary[j] = u2_(I, j);
        q_boundary[j] =
            level.q1(I, j) + l2_split_at_boundary(u2_, j, grid_, params_).value(u2_(I, j));
        if (boundary_ == BoundaryKind::MApABC2) {
            for (int i = 1; i < I; ++i) q_row[i - 1] = level.q1(i, j) + q2(i, j);
            fits[j] = fit_q_curve(q_row, grid_, warm_start(history_, j));
        }
    }
    history_.append(u2_boundary, q_boundary, fits);
}

SplittingStepper::StepOutcome SplittingStepper::step() {
    return config_.algorithm == Algorithm::Mixed ? step_mixed() : step_lagged();
}

SplittingStepper::StepOutcome SplittingStepper::step_mixed() {
    if (n_ >= grid_.N()) throw DomainError("step: already at maturity");
    const LevelData level = prepare_level(n_ + 1);
    const StepOutcome out = iterate(level, true);
    if (out.finite) accept(level);
    return out;
}

SplittingStepper::StepOutcome SplittingStepper::step_lagged() {
    if (n_ >= grid_.N()) throw DomainError("step: already at maturity");
    const LevelData level = prepare_level(n_ + 1);
    const StepOutcome out = iterate(level, false);
    if (out.finite) accept(level);
    return out;
}

SolveResult solve(const HestonParams& params, const GridSpec& grid, const ItspConfig& config,
                  BoundaryKind boundary, const LevelObserver& observer) {
    const auto start = std::chrono::steady_clock::now();
    SplittingStepper stepper(params, grid, config, boundary);
    SolveReport report;
    for (int n = 1; n <= grid.N(); ++n) {
        const auto out = stepper.step();
        report.iterations.push_back(out.iterations);
        report.residuals.push_back(out.residual);
        if (!out.converged) report.diverged = true;
        if (!out.finite) break;
        if (observer) observer(n, stepper.solution());
    }
    report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {stepper.solution(), stepper.u2(), std::move(report)};
}

} // namespace hsplit
