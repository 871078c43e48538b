#pragma once

#include "hsplit/analysis.hpp"
#include "hsplit/boundary.hpp"
#include "hsplit/config.hpp"
#include "hsplit/itsp.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace hsplit {

struct ExperimentSpec {
    std::string name;     // preset name, used in log lines
    HestonParams params;
    double s_max = 4.0;
    double v_max = 4.0;
    std::vector<double> steps{0.4, 0.2, 0.1, 0.05};
    std::vector<Method> methods{Method::Itsp, Method::Fd2d};
    std::vector<BoundaryKind> boundaries{BoundaryKind::Original, BoundaryKind::MApABC1, BoundaryKind::MApABC2};
    ItspConfig itsp;
    ErrorNodes error_nodes = ErrorNodes::All;
    double slice_step = 0.1; // step used for the slice and Greeks series
    int threads = 1;
};

ExperimentSpec experiment_spec(const RunConfig& cfg);

struct ErrorRow {
    Method method;
    BoundaryKind bc;
    double h;
    double rel_l2_error;
    long iterations_total;
    double wall_ms;
    bool diverged;
};

/// One solve on a prepared grid; itsp or fd2d.
SolveResult run_method(Method method, const HestonParams& params, const GridSpec& grid,
                       BoundaryKind bc, const ItspConfig& itsp);

/// Run fn(k) for k = 0..count-1 on up to `threads` workers. The first
/// exception thrown by a task is rethrown after all workers have stopped.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// All (method, bc, h) combinations, in methods x boundaries x steps order.
std::vector<ErrorRow> run_error_table(const ExperimentSpec& spec);

void write_error_table(std::ostream& out, const std::vector<ErrorRow>& rows);

/// Writes error_table.csv, slice_S3.csv, slice_S4.csv, slice_v3.csv,
/// slice_v4.csv and greeks_S4.csv into out_dir (created if missing).
/// Returns the error table rows.
std::vector<ErrorRow> run_experiment(const ExperimentSpec& spec, const std::string& out_dir);

/// Thread count from SOLVER_THREADS, or 1 when unset or invalid.
int threads_from_env();

/// Six significant digits, '.' separator.
std::string csv_number(double x);

} // namespace hsplit
