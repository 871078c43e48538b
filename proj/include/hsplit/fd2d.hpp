#pragma once

#include "hsplit/boundary.hpp"
#include "hsplit/itsp.hpp"

#include <stdexcept>

namespace hsplit {

/// The line relaxation stalled before reaching the residual target.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct Fd2dOptions {
    double residual_tol = 1e-10; // diagonal-scaled max-norm residual
    int max_sweeps = 10000;
};

/// Implicit Euler on the full operator L1 + L2 with the same spatial stencils
/// as the splitting scheme. Each step's linear system is solved by symmetric
/// line Gauss-Seidel (tridiagonal in S~ per v-line). Boundary closures:
/// U(0, j) = 0; Original: U_I - U_{I-1} = dS; convolution ABCs applied to
/// U2 = U - U1 at S~max; v = 0: U_tau = kappa theta U_v (forward difference);
/// v = v_max: U(i, J) = U(i, J-1).
/// report.iterations holds the sweep count per step.
SolveResult solve_fd2d(const HestonParams& params, const GridSpec& grid, BoundaryKind boundary,
                       const Fd2dOptions& options = {});

} // namespace hsplit
