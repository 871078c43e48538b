#pragma once

#include "hsplit/boundary.hpp"
#include "hsplit/core.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hsplit {

enum class Algorithm {
    Lagged, // whole variance operator taken from the previous iterate
    Mixed,  // centre terms implicit, neighbour terms from the previous iterate (default)
};

enum class Q1Mode { Discrete, Exact };

/// Norm of successive U2 differences used by the stopping rule.
enum class IterationNorm {
    Scaled, // sqrt(dS dv * sum d^2), independent of the grid size
    Raw,    // sqrt(sum d^2)
};

std::string to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);
std::string to_string(Q1Mode m);
Q1Mode parse_q1_mode(std::string_view name);

struct ItspConfig {
    double tol = 1e-4;
    int max_iter = 200;
    Algorithm algorithm = Algorithm::Mixed;
    Q1Mode q1_mode = Q1Mode::Discrete;
    IterationNorm norm = IterationNorm::Scaled;

    void validate() const;
};

struct SolveReport {
    std::vector<int> iterations;  // per time step
    std::vector<double> residuals; // final inner difference norm per step
    double wall_ms = 0.0;
    bool diverged = false;

    long total_iterations() const;
};

struct SolveResult {
    Surface u;  // full solution at the last completed level
    Surface u2; // correction part
    SolveReport report;
};

/// Called with (n, U^n) after every accepted level.
using LevelObserver = std::function<void(int, const Surface&)>;

/// Time stepper for U = U1 + U2, with U1 the closed-form Black-Scholes part and
/// U2 driven by the variance operator through an inner fixed-point iteration.
class SplittingStepper {
public:
    SplittingStepper(const HestonParams& params, const GridSpec& grid, const ItspConfig& config,
                     BoundaryKind boundary);

    struct StepOutcome {
        int iterations = 0;
        double residual = 0.0;
        bool converged = false;
        bool finite = true;
    };

    /// Advance one level with the configured algorithm.
    StepOutcome step();

    /// Advance one level, centre terms implicit (default algorithm).
    StepOutcome step_mixed();

    /// Advance one level with the whole variance operator lagged.
    StepOutcome step_lagged();

    int time_index() const { return n_; }
    const Surface& u2() const { return u2_; }
    Surface solution() const;
    const AbcHistory& history() const { return history_; }

private:
    struct LevelData;
    LevelData prepare_level(int n) const;
    StepOutcome iterate(const LevelData& level, bool mixed);
    void accept(const LevelData& level);

    HestonParams params_;
    GridSpec grid_;
    ItspConfig config_;
    BoundaryKind boundary_;
    AbcCoefficients coeffs_;
    ConvolutionWeights weights_;
    AbcHistory history_;
    Surface u2_;
    int n_ = 0;
};

/// March n = 1..N and return U at tau = T with the per-step report. If a step
/// produces non-finite values the march stops and the last finite level is
/// returned with the divergence flag set.
SolveResult solve(const HestonParams& params, const GridSpec& grid, const ItspConfig& config,
                  BoundaryKind boundary, const LevelObserver& observer = {});

} // namespace hsplit
