#include "hsplit/experiment.hpp"

#include "hsplit/fd2d.hpp"
#include "hsplit/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

namespace hsplit {

ExperimentSpec experiment_spec(const RunConfig& cfg) {
    ExperimentSpec spec;
    spec.name = cfg.preset.value_or("custom");
    spec.params = cfg.params;
    spec.s_max = cfg.s_max;
    spec.v_max = cfg.v_max;
    spec.itsp = cfg.itsp;
    spec.error_nodes = cfg.error_nodes;
    return spec;
}

SolveResult run_method(Method method, const HestonParams& params, const GridSpec& grid,
                       BoundaryKind bc, const ItspConfig& itsp) {
    if (method == Method::Fd2d) return solve_fd2d(params, grid, bc);
    return solve(params, grid, itsp, bc);
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min(threads, count));
    if (workers == 1) {
        for (int k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int k = next++; k < count; k = next++) {
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

int threads_from_env() {
    const char* s = std::getenv("SOLVER_THREADS");
    if (!s) return 1;
    char* end = nullptr;
    const long n = std::strtol(s, &end, 10);
    return (end != s && *end == '\0' && n >= 1 && n <= 1024) ? static_cast<int>(n) : 1;
}

std::string csv_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

namespace {

struct Job {
    Method method;
    BoundaryKind bc;
    double h;
};

std::vector<Job> table_jobs(const ExperimentSpec& spec) {
    std::vector<Job> jobs;
    for (Method m : spec.methods)
        for (BoundaryKind bc : spec.boundaries)
            for (double h : spec.steps) jobs.push_back({m, bc, h});
    return jobs;
}

// References keyed by step, computed in parallel up front.
std::map<double, Surface> references(const ExperimentSpec& spec, const std::vector<double>& steps) {
    std::vector<std::optional<Surface>> out(steps.size());
    parallel_for(static_cast<int>(steps.size()), spec.threads, [&](int k) {
        out[k] = reference_surface(GridSpec::uniform(spec.s_max, spec.v_max, spec.params.maturity, steps[k]),
                                   spec.params);
    });
    std::map<double, Surface> refs;
    for (std::size_t k = 0; k < steps.size(); ++k) refs.emplace(steps[k], std::move(*out[k]));
    return refs;
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string run_label(Method m, BoundaryKind bc) { return to_string(m) + "_" + to_string(bc); }

} // namespace

std::vector<ErrorRow> run_error_table(const ExperimentSpec& spec) {
    const std::vector<Job> jobs = table_jobs(spec);
    const auto refs = references(spec, spec.steps);
    std::vector<ErrorRow> rows(jobs.size());
    std::mutex log_mutex;
    parallel_for(static_cast<int>(jobs.size()), spec.threads, [&](int k) {
        const Job& job = jobs[k];
        const GridSpec grid = GridSpec::uniform(spec.s_max, spec.v_max, spec.params.maturity, job.h);
        ErrorRow row{job.method, job.bc, job.h, std::nan(""), 0, 0.0, false};
        try {
            const SolveResult r = run_method(job.method, spec.params, grid, job.bc, spec.itsp);
            row.rel_l2_error = relative_l2_error(r.u, refs.at(job.h), spec.error_nodes);
            row.iterations_total = r.report.total_iterations();
            row.wall_ms = r.report.wall_ms;
            row.diverged = r.report.diverged;
        } catch (const SolverError& e) {
            row.diverged = true;
            std::lock_guard lock(log_mutex);
            std::cerr << "warning: " << e.what() << '\n';
        }
        rows[k] = row;
        std::lock_guard lock(log_mutex);
        std::cerr << spec.name << ' ' << run_label(job.method, job.bc) << " h=" << job.h
                  << " error=" << csv_number(row.rel_l2_error) << (row.diverged ? " (diverged)" : "") << '\n';
    });
    return rows;
}

void write_error_table(std::ostream& out, const std::vector<ErrorRow>& rows) {
    out << "method,bc,h,rel_l2_error,iterations_total,wall_ms\n";
    for (const ErrorRow& r : rows) {
        out << to_string(r.method) << ',' << to_string(r.bc) << ',' << csv_number(r.h) << ','
            << csv_number(r.rel_l2_error) << ',' << r.iterations_total << ',' << csv_number(r.wall_ms) << '\n';
    }
}

std::vector<ErrorRow> run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    const std::vector<ErrorRow> rows = run_error_table(spec);
    {
        std::ofstream out = open_csv(dir / "error_table.csv");
        write_error_table(out, rows);
    }

    // Slices and Greeks at one step: itsp and fd2d with OriginalBC and MApABC2.
    const GridSpec grid = GridSpec::uniform(spec.s_max, spec.v_max, spec.params.maturity, spec.slice_step);
    const Surface ref = reference_surface(grid, spec.params);
    const std::vector<std::pair<Method, BoundaryKind>> runs{{Method::Itsp, BoundaryKind::Original},
                                                            {Method::Itsp, BoundaryKind::MApABC2},
                                                            {Method::Fd2d, BoundaryKind::Original},
                                                            {Method::Fd2d, BoundaryKind::MApABC2}};
    std::vector<std::optional<Surface>> sols(runs.size());
    parallel_for(static_cast<int>(runs.size()), spec.threads, [&](int k) {
        sols[k] = run_method(runs[k].first, spec.params, grid, runs[k].second, spec.itsp).u;
    });

    auto index_of = [](double x, double step, int last) {
        const int i = static_cast<int>(std::lround(x / step));
        return std::clamp(i, 0, last);
    };
    auto write_slice = [&](const std::string& file, bool fixed_s, double at) {
        std::ofstream out = open_csv(dir / file);
        out << (fixed_s ? "v" : "s_tilde") << ",reference";
        for (const auto& [m, bc] : runs) out << ',' << run_label(m, bc);
        for (const auto& [m, bc] : runs) out << ",err_" << run_label(m, bc);
        out << '\n';
        const int fixed = fixed_s ? index_of(at, grid.ds(), grid.I()) : index_of(at, grid.dv(), grid.J());
        const int count = fixed_s ? grid.J() : grid.I();
        for (int k = 0; k <= count; ++k) {
            const int i = fixed_s ? fixed : k;
            const int j = fixed_s ? k : fixed;
            out << csv_number(fixed_s ? grid.v(j) : grid.s(i)) << ',' << csv_number(ref(i, j));
            for (const auto& s : sols) out << ',' << csv_number((*s)(i, j));
            for (const auto& s : sols) out << ',' << csv_number((*s)(i, j) - ref(i, j));
            out << '\n';
        }
    };
    write_slice("slice_S3.csv", true, 3.0);
    write_slice("slice_S4.csv", true, 4.0);
    write_slice("slice_v3.csv", false, 3.0);
    write_slice("slice_v4.csv", false, 4.0);

    const Greeks gref = greeks(ref, grid);
    std::ofstream out = open_csv(dir / "greeks_S4.csv");
    out << "method,bc,v,err_price,err_delta,err_gamma,err_vega\n";
    const int i = index_of(4.0, grid.ds(), grid.I());
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const Surface& u = *sols[k];
        const Greeks g = greeks(u, grid);
        for (int j = 0; j <= grid.J(); ++j) {
            out << to_string(runs[k].first) << ',' << to_string(runs[k].second) << ',' << csv_number(grid.v(j))
                << ',' << csv_number(u(i, j) - ref(i, j)) << ',' << csv_number(g.delta(i, j) - gref.delta(i, j))
                << ',' << csv_number(g.gamma(i, j) - gref.gamma(i, j)) << ','
                << csv_number(g.vega(i, j) - gref.vega(i, j)) << '\n';
        }
    }
    return rows;
}

} // namespace hsplit
