#include "hsplit/boundary.hpp"

#include "hsplit/analytic.hpp"
#include "hsplit/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace hsplit {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);
} // namespace

std::string to_string(BoundaryKind kind) {
    switch (kind) {
    case BoundaryKind::Original: return "original";
    case BoundaryKind::MApABC1: return "mapabc1";
    case BoundaryKind::MApABC2: return "mapabc2";
    }
    return "unknown";
}

BoundaryKind parse_boundary_kind(std::string_view name) {
    if (name == "original") return BoundaryKind::Original;
    if (name == "mapabc1") return BoundaryKind::MApABC1;
    if (name == "mapabc2") return BoundaryKind::MApABC2;
    throw DomainError("unknown boundary kind '" + std::string(name) + "'");
}

AbcCoefficients precompute_abc_coefficients(const GridSpec& grid) {
    const int J = grid.J();
    const int N = grid.N();
    const double ratio = grid.ds() / grid.s_max();
    const double dt = grid.dtau();

    AbcCoefficients c;
    c.xi.assign(J + 1, kNaN);
    c.eta.assign(J + 1, kNaN);
    c.alpha.assign(J + 1, kNaN);
    c.phi.assign(J + 1, std::vector<double>(N + 1, kNaN));
    c.beta.assign(J + 1, std::vector<double>(N + 1, kNaN));
    for (int j = 1; j <= J; ++j) {
        const double v = grid.v(j);
        const double root = std::sqrt(v * dt);
        c.xi[j] = ratio * root / (4.0 * kSqrt2Pi);
        c.eta[j] = 2.0 * ratio / (kSqrt2Pi * root);
        c.alpha[j] = c.xi[j] + c.eta[j];

        auto& phi = c.phi[j];
        phi[0] = 1.0;
        if (N >= 1) phi[1] = 1.5 * std::exp(-v * grid.tau(1) / 8.0);
        for (int k = 2; k <= N; ++k) phi[k] = std::exp(-v * grid.tau(k) / 8.0) / std::sqrt(double(k));

        auto& beta = c.beta[j];
        beta[0] = 0.0;
        for (int k = 1; k <= N; ++k) beta[k] = c.eta[j] * phi[k - 1] - c.alpha[j] * phi[k];
    }
    return c;
}

// ---------------------------------------------------------------------------
// Curve fit

double CurveFitParams::operator()(double log_s) const {
    const double z = (log_s - mu) / s;
    return (gamma0 + gamma1 * log_s) * std::exp(-0.5 * z * z);
}

namespace {

struct Projection {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double ssr = 0.0;
};

// Inner linear least squares for fixed (mu, s), in the centred basis
// E(x) and (x - mu) / s * E(x).
Projection project(std::span<const double> xs, std::span<const double> q, double mu, double s,
                   std::vector<double>* residuals = nullptr) {
    double a00 = 0.0, a01 = 0.0, a11 = 0.0, r0 = 0.0, r1 = 0.0;
    std::vector<double> b0(xs.size()), b1(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double z = (xs[k] - mu) / s;
        b0[k] = std::exp(-0.5 * z * z);
        b1[k] = z * b0[k];
        a00 += b0[k] * b0[k];
        a01 += b0[k] * b1[k];
        a11 += b1[k] * b1[k];
        r0 += b0[k] * q[k];
        r1 += b1[k] * q[k];
    }
    double c0 = 0.0, c1 = 0.0;
    const double det = a00 * a11 - a01 * a01;
    if (a00 > 1e-300) {
        if (det > 1e-12 * a00 * a11 && a11 > 1e-300) {
            c0 = (a11 * r0 - a01 * r1) / det;
            c1 = (a00 * r1 - a01 * r0) / det;
        } else {
            c0 = r0 / a00;
        }
    }
    Projection out;
    if (residuals) residuals->resize(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double res = q[k] - c0 * b0[k] - c1 * b1[k];
        out.ssr += res * res;
        if (residuals) (*residuals)[k] = res;
    }
    out.gamma1 = c1 / s;
    out.gamma0 = c0 - out.gamma1 * mu;
    return out;
}

std::vector<double> interior_log_nodes(const GridSpec& grid) {
    std::vector<double> xs(static_cast<std::size_t>(grid.I() - 1));
    for (int i = 1; i < grid.I(); ++i) xs[i - 1] = std::log(grid.s(i));
    return xs;
}

} // namespace

CurveFitParams fit_q_curve(std::span<const double> q_row, const GridSpec& grid,
                           const CurveFitOptions& options) {
    if (q_row.size() != static_cast<std::size_t>(grid.I() - 1)) {
        throw DomainError("fit_q_curve: expected I-1 interior samples");
    }
    if (std::all_of(q_row.begin(), q_row.end(), [](double x) { return x == 0.0; })) {
        return {0.0, 0.0, 0.5 * std::log(grid.s_max()), 1.0};
    }
    const std::vector<double> xs = interior_log_nodes(grid);
    const std::size_t m = xs.size();
    const double log_min_width = std::log(options.min_width);
    double scale = 0.0;
    for (double q : q_row) scale += q * q;

    int evaluations = 0;
    auto residual = [&](double mu, double lw, std::vector<double>* out) {
        ++evaluations;
        return project(xs, q_row, mu, std::exp(std::max(lw, log_min_width)), out).ssr;
    };

    struct Candidate {
        double f, mu, lw;
    };
    // Coarse start: centres spanning the sampled range (plus a margin), widths
    // on a doubling ladder.
    constexpr int kCentres = 9;
    constexpr std::array<double, 6> kWidths{0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
    const double margin = 1.0;
    const double mu_step = (xs.back() - xs.front() + 2.0 * margin) / (kCentres - 1);
    std::vector<Candidate> starts;
    if (options.start && options.start->s > 0.0 && std::isfinite(options.start->mu)) {
        const double lw = std::log(options.start->s);
        starts.push_back({residual(options.start->mu, lw, nullptr), options.start->mu, lw});
    }
    for (int a = 0; a < kCentres; ++a) {
        const double mu = xs.front() - margin + a * mu_step;
        for (double w : kWidths) starts.push_back({residual(mu, std::log(w), nullptr), mu, std::log(w)});
    }
    std::sort(starts.begin(), starts.end(), [](const Candidate& x, const Candidate& y) { return x.f < y.f; });
    Candidate best = starts.front();

    // Gauss-Newton on the projected residual in (mu, ln s) with a
    // forward-difference Jacobian. A full step that raises the objective gets
    // one more full step before falling back to Levenberg-Marquardt damping,
    // which lets the iteration cut across the curved valleys this family has.
    struct Normal {
        double a00 = 0.0, a01 = 0.0, a11 = 0.0, g0 = 0.0, g1 = 0.0;
    };
    std::vector<double> jac_mu(m), jac_lw(m);
    auto normal_equations = [&](const Candidate& c, const std::vector<double>& r) {
        constexpr double kStep = 1e-7;
        const double d_mu = kStep * std::max(1.0, std::abs(c.mu));
        const double d_lw = kStep * std::max(1.0, std::abs(c.lw));
        residual(c.mu + d_mu, c.lw, &jac_mu);
        residual(c.mu, c.lw + d_lw, &jac_lw);
        Normal ne;
        for (std::size_t k = 0; k < m; ++k) {
            const double j0 = (jac_mu[k] - r[k]) / d_mu;
            const double j1 = (jac_lw[k] - r[k]) / d_lw;
            ne.a00 += j0 * j0;
            ne.a01 += j0 * j1;
            ne.a11 += j1 * j1;
            ne.g0 += j0 * r[k];
            ne.g1 += j1 * r[k];
        }
        return ne;
    };
    // Damped step from c; returns false when the damped matrix is singular.
    auto step_from = [&](const Candidate& c, const Normal& ne, double lambda, std::vector<double>& r,
                         Candidate& out) {
        const double b00 = ne.a00 * (1.0 + lambda);
        const double b11 = ne.a11 * (1.0 + lambda);
        const double det = b00 * b11 - ne.a01 * ne.a01;
        if (!(det > 0.0) || !std::isfinite(det)) return false;
        out.mu = c.mu - (b11 * ne.g0 - ne.a01 * ne.g1) / det;
        out.lw = std::max(c.lw - (b00 * ne.g1 - ne.a01 * ne.g0) / det, log_min_width);
        out.f = residual(out.mu, out.lw, &r);
        return std::isfinite(out.f);
    };

    std::vector<double> r0(m), r1(m), r2(m);
    auto polish = [&](Candidate c, int budget_end) {
        c.f = residual(c.mu, c.lw, &r0);
        while (evaluations + 6 <= budget_end && c.f > 0.0) {
            const Normal ne = normal_equations(c, r0);
            Candidate t1, t2;
            bool moved = false;
            if (step_from(c, ne, 0.0, r1, t1)) {
                if (t1.f < c.f) {
                    moved = c.f - t1.f > 1e-15 * c.f;
                    c = t1;
                    std::swap(r0, r1);
                    if (moved) continue;
                    break;
                }
                const Normal ne1 = normal_equations(t1, r1);
                if (step_from(t1, ne1, 0.0, r2, t2) && t2.f < c.f) {
                    c = t2;
                    std::swap(r0, r2);
                    continue;
                }
            }
            for (double lambda = 1e-2; lambda < 1e10 && evaluations < budget_end; lambda *= 8.0) {
                if (step_from(c, ne, lambda, r1, t1) && t1.f < c.f) {
                    moved = c.f - t1.f > 1e-15 * c.f;
                    c = t1;
                    std::swap(r0, r1);
                    break;
                }
            }
            if (!moved) break;
        }
        return c;
    };

    // Short polish from a few distinct good starts, then spend what is left of
    // the budget on the best of them.
    constexpr int kStarts = 4;
    constexpr int kShortBudget = 45;
    std::vector<Candidate> tried;
    for (const Candidate& start : starts) {
        if (static_cast<int>(tried.size()) == kStarts || evaluations + kShortBudget > options.max_evaluations) break;
        const bool near_tried = std::any_of(tried.begin(), tried.end(), [&](const Candidate& t) {
            return std::abs(t.mu - start.mu) < 0.5 * mu_step && std::abs(t.lw - start.lw) < 0.5 * std::log(2.0);
        });
        if (near_tried) continue;
        tried.push_back(start);
        const Candidate c = polish(start, evaluations + kShortBudget);
        if (c.f < best.f) best = c;
        if (best.f <= 1e-24 * scale) break;
    }
    if (best.f > 1e-24 * scale) best = polish(best, options.max_evaluations);

    const double width = std::exp(std::max(best.lw, log_min_width));
    const Projection p = project(xs, q_row, best.mu, width);
    return {p.gamma0, p.gamma1, best.mu, width};
}

double curve_fit_residual(std::span<const double> q_row, const GridSpec& grid,
                          const CurveFitParams& fit) {
    if (q_row.size() != static_cast<std::size_t>(grid.I() - 1)) {
        throw DomainError("curve_fit_residual: expected I-1 interior samples");
    }
    double ssr = 0.0;
    for (int i = 1; i < grid.I(); ++i) {
        const double r = q_row[i - 1] - fit(std::log(grid.s(i)));
        ssr += r * r;
    }
    return ssr;
}

// ---------------------------------------------------------------------------
// History

AbcHistory::AbcHistory(const GridSpec& grid)
    : levels_(1),
      u2_(grid.J() + 1, std::vector<double>{0.0}),
      q_(grid.J() + 1, std::vector<double>{0.0}),
      fits_(grid.J() + 1,
            std::vector<CurveFitParams>{{0.0, 0.0, 0.5 * std::log(grid.s_max()), 1.0}}) {}

void AbcHistory::append(std::span<const double> u2_boundary, std::span<const double> q_boundary,
                        std::span<const CurveFitParams> fits) {
    const std::size_t rows = u2_.size();
    if (u2_boundary.size() != rows || q_boundary.size() != rows || fits.size() != rows) {
        throw DomainError("AbcHistory::append: expected J+1 entries per array");
    }
    for (std::size_t j = 0; j < rows; ++j) {
        u2_[j].push_back(u2_boundary[j]);
        q_[j].push_back(q_boundary[j]);
        fits_[j].push_back(fits[j]);
    }
    ++levels_;
}

CurveFitOptions warm_start(const AbcHistory& hist, int j) {
    CurveFitOptions opts;
    const CurveFitParams& last = hist.fit(j, hist.levels() - 1);
    if (last.gamma0 != 0.0 || last.gamma1 != 0.0) opts.start = last;
    return opts;
}

// ---------------------------------------------------------------------------
// Source integrals

double mapabc1_kernel(double v, double t) {
    if (!(v > 0.0 && t > 0.0)) throw DomainError("mapabc1_kernel: v and t must be > 0");
    const double vt = v * t;
    return normal_cdf(0.5 * std::sqrt(vt)) - 1.0 +
           std::sqrt(2.0 / (std::numbers::pi * vt)) * std::exp(-vt / 8.0);
}

double mapabc2_inner_integral(const CurveFitParams& fit, double v, double t, double s_max) {
    if (!(v > 0.0 && t > 0.0)) throw DomainError("mapabc2_inner_integral: v and t must be > 0");
    if (fit.gamma0 == 0.0 && fit.gamma1 == 0.0) return 0.0;
    const double vt = v * t;
    const double x0 = std::log(s_max);
    const double centre = fit.mu - x0;
    const double lo = std::max(0.0, centre - 9.0 * fit.s);
    const double hi = std::min(10.0 * std::sqrt(vt), centre + 9.0 * fit.s);
    if (!(hi > lo)) return 0.0;
    const double norm = std::sqrt(2.0 / (std::numbers::pi * vt)) / vt;
    return numerics::simpson(lo, hi, 256, [&](double y) {
        const double z = y + 0.5 * vt;
        return norm * y * std::exp(-z * z / (2.0 * vt)) * fit(x0 + y);
    });
}

ConvolutionWeights::ConvolutionWeights(const GridSpec& grid) {
    const int J = grid.J();
    const int N = grid.N();
    const double dt = grid.dtau();
    const auto rule = numerics::gauss_legendre(24);

    w1_left_.assign(J + 1, std::vector<double>(N + 1, 0.0));
    w1_right_.assign(J + 1, std::vector<double>(N + 1, 0.0));
    w2_left_.assign(J + 1, std::vector<double>(N + 1, 0.0));
    w2_right_.assign(J + 1, std::vector<double>(N + 1, 0.0));

    for (int j = 1; j <= J; ++j) {
        const double v = grid.v(j);
        const double c = std::sqrt(2.0 / (std::numbers::pi * v));
        // K(u^2) * 2u is smooth in u = sqrt(t).
        auto k1_du = [v, c](double u) {
            return 2.0 * u * (normal_cdf(0.5 * std::sqrt(v) * u) - 1.0) +
                   2.0 * c * std::exp(-v * u * u / 8.0);
        };
        for (int m = 0; m <= N; ++m) {
            const double a = m * dt;
            const double b = (m + 1) * dt;
            // Panel [a, b]: weight of the node at t = a is (b - t) / dt.
            w1_right_[j][m] = numerics::integrate(rule, std::sqrt(a), std::sqrt(b), [&](double u) {
                return k1_du(u) * (b - u * u) / dt;
            });
            const double sa = std::sqrt(a), sb = std::sqrt(b);
            const double i_half = 2.0 * (sb - sa);
            const double i_three_half = (2.0 / 3.0) * (b * sb - a * sa);
            w2_right_[j][m] = c * (b * i_half - i_three_half) / dt;
            if (m >= 1) {
                const double a0 = (m - 1) * dt;
                const double b0 = m * dt;
                w1_left_[j][m] = numerics::integrate(rule, std::sqrt(a0), std::sqrt(b0), [&](double u) {
                    return k1_du(u) * (u * u - a0) / dt;
                });
                const double sa0 = std::sqrt(a0), sb0 = std::sqrt(b0);
                w2_left_[j][m] = c * ((2.0 / 3.0) * (b0 * sb0 - a0 * sa0) - a0 * 2.0 * (sb0 - sa0)) / dt;
            }
        }
    }
}

namespace {
void require_history(int j, int n, const AbcHistory& hist, const GridSpec& grid) {
    if (j < 1 || j >= grid.J()) throw DomainError("boundary source: j out of range");
    if (n < 1 || hist.levels() < n) throw DomainError("boundary source: history does not cover levels 0..n-1");
}
} // namespace

BoundarySource h_mapabc1(int j, int n, const AbcHistory& hist, const ConvolutionWeights& weights,
                         const GridSpec& grid, const NodeSplit& current_q) {
    require_history(j, n, hist, grid);
    const double f = grid.ds() / grid.s_max();
    double sum = 0.0;
    for (int m = 1; m <= n; ++m) sum += weights.mapabc1(j, m, n) * hist.q(j, n - m);
    const double w0 = weights.mapabc1(j, 0, n);
    return {f * (sum + w0 * current_q.qhat), f * w0 * current_q.diag};
}

BoundarySource h_mapabc2(int j, int n, const AbcHistory& hist, const ConvolutionWeights& weights,
                         const GridSpec& grid, const NodeSplit& current_q) {
    require_history(j, n, hist, grid);
    const double f = grid.ds() / grid.s_max();
    const double v = grid.v(j);
    double sum = 0.0;
    for (int m = 1; m <= n; ++m) {
        const double t = m * grid.dtau();
        const double smooth = std::sqrt(0.5 * std::numbers::pi * v * t) *
                              mapabc2_inner_integral(hist.fit(j, n - m), v, t, grid.s_max());
        sum += weights.mapabc2(j, m, n) * smooth;
    }
    const double w0 = weights.mapabc2(j, 0, n);
    return {f * (sum + w0 * current_q.qhat), f * w0 * current_q.diag};
}

// ---------------------------------------------------------------------------
// Closures

void LineClosure::apply(TridiagonalSystem& sys) const {
    const std::size_t last = sys.size() - 1;
    sys.diag[0] = left_diag;
    sys.upper[0] = left_upper;
    sys.rhs[0] = left_rhs;
    sys.lower[last] = right_lower;
    sys.diag[last] = right_diag;
    sys.rhs[last] = right_rhs;
}

LineClosure close_line(BoundaryKind kind, int j, int n, const AbcHistory& hist,
                       const AbcCoefficients& coeffs, const GridSpec& grid,
                       const BoundarySource& source) {
    if (j < 1 || j >= grid.J()) throw DomainError("close_line: j must lie in 1..J-1");
    LineClosure c;
    if (kind == BoundaryKind::Original) return c;

    if (n < 1 || hist.levels() < n) throw DomainError("close_line: history does not cover levels 0..n-1");
    double sum = 0.0;
    for (int k = 1; k <= n - 1; ++k) sum += coeffs.beta[j][n - k] * hist.u2(j, k);
    c.right_lower = -1.0;
    c.right_diag = coeffs.alpha[j] + 1.0 - grid.ds() / (2.0 * grid.s_max()) - source.diag;
    c.right_rhs = sum + source.value;
    return c;
}

void close_v_boundaries(Surface& u2, std::span<const double> prev_row0,
                        std::span<const double> q_row0, const GridSpec& grid) {
    require_match(u2, grid, "close_v_boundaries");
    const int I = grid.I();
    const int J = grid.J();
    if (prev_row0.size() != static_cast<std::size_t>(I + 1) || q_row0.size() != prev_row0.size()) {
        throw DomainError("close_v_boundaries: rows must have I+1 entries");
    }
    u2(0, 0) = 0.0;
    for (int i = 1; i <= I; ++i) u2(i, 0) = prev_row0[i] + grid.dtau() * q_row0[i];
    for (int i = 0; i <= I; ++i) u2(i, J) = u2(i, J - 1);
}

} // namespace hsplit
