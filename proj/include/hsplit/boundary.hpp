#pragma once

#include "hsplit/core.hpp"
#include "hsplit/stencils.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hsplit {

/// Treatment of the truncation boundary S~ = S~max.
enum class BoundaryKind {
    Original, // U2_S = 0 (slope 1 for the full solution)
    MApABC1,  // convolution ABC, source term from Q on the boundary
    MApABC2,  // convolution ABC, source term from a fitted exterior Q profile
};

std::string to_string(BoundaryKind kind);
BoundaryKind parse_boundary_kind(std::string_view name);

/// Coefficients of the discrete convolution boundary relation
///   (alpha_j + 1 - dS/(2 S~max)) U_I^n - U_{I-1}^n = sum_{k=1}^{n-1} beta_j^{n-k} U_I^k + H_j^n.
///
/// Indexed [j][k]; row j = 0 is never used (eta has sqrt(v_j) in its denominator)
/// and holds NaN.
struct AbcCoefficients {
    std::vector<double> xi;
    std::vector<double> eta;
    std::vector<double> alpha;
    std::vector<std::vector<double>> phi;  // k = 0..N
    std::vector<std::vector<double>> beta; // k = 1..N (k = 0 unused, 0)
};

AbcCoefficients precompute_abc_coefficients(const GridSpec& grid);

/// (gamma0 + gamma1 x) exp(-(x - mu)^2 / (2 s^2)) with x = ln S~.
struct CurveFitParams {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double mu = 0.0;
    double s = 1.0;

    double operator()(double log_s) const;
};

struct CurveFitOptions {
    int max_evaluations = 200;
    double min_width = 1e-3;
    std::optional<CurveFitParams> start; // extra starting candidate, e.g. the previous step's fit
};

/// Least-squares fit of the curve family to Q(S~_i) for i = 1..I-1 (q_row has
/// I-1 entries). Variable projection: a derivative-free search over (mu, s)
/// with the linear coefficients solved exactly for each trial.
CurveFitParams fit_q_curve(std::span<const double> q_row, const GridSpec& grid,
                           const CurveFitOptions& options = {});

/// Sum of squared residuals of a fit against q_row (same layout as fit_q_curve).
double curve_fit_residual(std::span<const double> q_row, const GridSpec& grid,
                          const CurveFitParams& fit);

/// Boundary values remembered by the convolution conditions, one entry per
/// accepted time level (level 0 is the zero initial state).
class AbcHistory {
public:
    explicit AbcHistory(const GridSpec& grid);

    /// Number of stored time levels; level k covers tau_k.
    int levels() const { return levels_; }

    /// Append converged level data for j = 0..J (entries at j = 0 and j = J are ignored).
    void append(std::span<const double> u2_boundary, std::span<const double> q_boundary,
                std::span<const CurveFitParams> fits);

    double u2(int j, int k) const { return u2_[j][k]; }
    double q(int j, int k) const { return q_[j][k]; }
    const CurveFitParams& fit(int j, int k) const { return fits_[j][k]; }

private:
    int levels_ = 0;
    std::vector<std::vector<double>> u2_;
    std::vector<std::vector<double>> q_;
    std::vector<std::vector<CurveFitParams>> fits_;
};

/// Fit options seeded with the latest stored fit for row j (if it is non-zero).
CurveFitOptions warm_start(const AbcHistory& hist, int j);

/// Kernel of the boundary-local source integral:
///   N(sqrt(v t) / 2) - 1 + sqrt(2 / (pi v t)) exp(-v t / 8).
double mapabc1_kernel(double v, double t);

/// Exterior integral of the fitted source against the half-line heat kernel,
///   int_{S~max}^inf sqrt(2/(pi v t)) (ln S' - ln S~max)/(v t)
///       exp(-(ln S' - ln S~max + v t / 2)^2 / (2 v t)) Q(S') dS'/S',
/// in log coordinates by composite Simpson with 256 panels over the range where
/// both the kernel and the fitted curve carry mass.
double mapabc2_inner_integral(const CurveFitParams& fit, double v, double t, double s_max);

/// Product-integration weights in tau for the two source integrals. For a
/// history sampled at tau_n - m dtau, entry [j][m] multiplies the sample at lag m
/// (piecewise-linear interpolation of the smooth factor, kernel integrated
/// exactly). `left` holds the half-panel towards smaller lag, `right` the other.
class ConvolutionWeights {
public:
    explicit ConvolutionWeights(const GridSpec& grid);

    /// Weight of lag m in a history of n panels (0 <= m <= n).
    double mapabc1(int j, int m, int n) const { return combine(w1_left_[j], w1_right_[j], m, n); }
    double mapabc2(int j, int m, int n) const { return combine(w2_left_[j], w2_right_[j], m, n); }

private:
    static double combine(const std::vector<double>& left, const std::vector<double>& right, int m, int n) {
        return m == n ? left[m] : left[m] + right[m];
    }

    std::vector<std::vector<double>> w1_left_;
    std::vector<std::vector<double>> w1_right_;
    std::vector<std::vector<double>> w2_left_;
    std::vector<std::vector<double>> w2_right_;
};

/// Affine contribution dS * H_j^n = value + diag * U2_I^n to the last row. The
/// diag part carries the current-step boundary source's dependence on the
/// unknown boundary value (the mixed treatment of the centre term).
struct BoundarySource {
    double value = 0.0;
    double diag = 0.0;
};

/// dS * H for the boundary-local condition. current_q is the variance operator
/// at (I, j) for the current step: diag * U2_I + qhat, with qhat including Q1.
BoundarySource h_mapabc1(int j, int n, const AbcHistory& hist, const ConvolutionWeights& weights,
                         const GridSpec& grid, const NodeSplit& current_q);

/// dS * H for the fitted-exterior condition. Past levels use their fitted curves;
/// at the current level the kernel collapses onto S~max, where the boundary
/// value current_q is used.
BoundarySource h_mapabc2(int j, int n, const AbcHistory& hist, const ConvolutionWeights& weights,
                         const GridSpec& grid, const NodeSplit& current_q);

/// Rows 0 and I of a line system.
struct LineClosure {
    double left_diag = 1.0;
    double left_upper = 0.0;
    double left_rhs = 0.0;
    double right_lower = -1.0;
    double right_diag = 1.0;
    double right_rhs = 0.0;

    void apply(TridiagonalSystem& sys) const;
};

/// Closure for line j at step n: U2(0, j) = 0 on the left; on the right either
/// U_I - U_{I-1} = 0 (Original) or the convolution relation with history sum
/// plus source. The history must hold levels 0..n-1.
LineClosure close_line(BoundaryKind kind, int j, int n, const AbcHistory& hist,
                       const AbcCoefficients& coeffs, const GridSpec& grid,
                       const BoundarySource& source = {});

/// v-direction closures, applied after the interior lines are updated.
/// Row j = 0: U2(i,0) = prev_row0[i] + dtau * q_row0[i] for i >= 1, U2(0,0) = 0.
/// Row j = J: U2(i,J) = U2(i,J-1).
void close_v_boundaries(Surface& u2, std::span<const double> prev_row0,
                        std::span<const double> q_row0, const GridSpec& grid);

} // namespace hsplit
