// hsplit: command-line front end for the Heston splitting solver.
//
//   hsplit price      --config FILE            price at one point
//   hsplit solve      --config FILE --out DIR  full surface with oracle error
//   hsplit greeks     --config FILE --out DIR  delta / gamma / vega surfaces
//   hsplit experiment --preset table1 --out DIR
//
// Exit codes: 0 ok, 2 bad configuration, 3 solver divergence or failure.

#include "hsplit/analysis.hpp"
#include "hsplit/config.hpp"
#include "hsplit/experiment.hpp"
#include "hsplit/fd2d.hpp"
#include "hsplit/oracle.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace hsplit;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Options {
    std::string config;
    std::string preset;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

RunConfig resolve_config(const Options& opt) {
    if (!opt.config.empty() && !opt.preset.empty()) {
        throw ConfigError("preset", "give --config or --preset, not both (a config file may set preset=)");
    }
    if (!opt.config.empty()) return load_config(opt.config);
    if (!opt.preset.empty()) {
        try {
            return preset_config(opt.preset);
        } catch (const DomainError& e) {
            throw ConfigError("preset", e.what());
        }
    }
    throw ConfigError("config", "no --config or --preset given");
}

int threads_of(const Options& opt) { return opt.threads ? std::max(1, *opt.threads) : threads_from_env(); }

std::filesystem::path out_dir(const Options& opt, const char* fallback) {
    std::filesystem::path dir(opt.out.empty() ? fallback : opt.out);
    std::filesystem::create_directories(dir);
    return dir;
}

void log_run(const RunConfig& cfg, const GridSpec& grid, const SolveReport& report) {
    std::cerr << "method=" << to_string(cfg.method) << " bc=" << to_string(cfg.bc) << " I=" << grid.I()
              << " J=" << grid.J() << " N=" << grid.N() << " iterations=" << report.total_iterations()
              << " wall_ms=" << csv_number(report.wall_ms) << '\n';
}

// Solve per config; returns nullopt (after a diagnostic) on divergence.
std::optional<SolveResult> run(const RunConfig& cfg, const GridSpec& grid) {
    SolveResult r = run_method(cfg.method, cfg.params, grid, cfg.bc, cfg.itsp);
    log_run(cfg, grid, r.report);
    if (r.report.diverged) {
        const auto& res = r.report.residuals;
        std::size_t n = 0;
        while (n + 1 < res.size() && res[n] < cfg.itsp.tol) ++n;
        std::cerr << "error: inner iteration did not converge (step " << n + 1 << " of " << grid.N()
                  << ", last difference norm " << csv_number(res.empty() ? 0.0 : res[n]) << ")\n";
        return std::nullopt;
    }
    return r;
}

int cmd_price(const Options& opt) {
    const RunConfig cfg = resolve_config(opt);
    const GridSpec grid = cfg.grid();
    const auto r = run(cfg, grid);
    if (!r) return kExitSolver;
    const double s = cfg.point_s_tilde();
    const double v = cfg.point_v();
    const double tau = cfg.params.maturity;
    const double u = interpolate(r->u, grid, s, v);
    std::printf("U(s_tilde=%.6g, v=%.6g, tau=%.6g) = %.8g\n", s, v, tau, u);
    std::printf("reference_cf = %.8g\n", heston_cf_price(s, v, tau, cfg.params));
    if (cfg.spot) std::printf("C(spot=%.6g, t=0) = %.8g\n", *cfg.spot, from_transformed(u, tau, cfg.params));
    if (opt.seed) {
        MonteCarloConfig mc;
        mc.seed = *opt.seed;
        mc.threads = threads_of(opt);
        const MonteCarloEstimate e = mc_price(s, v, tau, cfg.params, mc);
        std::printf("mc = %.8g (std_error %.3g, %ld paths)\n", e.estimate, e.std_error, mc.paths);
    }
    return 0;
}

int cmd_solve(const Options& opt) {
    const RunConfig cfg = resolve_config(opt);
    const GridSpec grid = cfg.grid();
    const auto r = run(cfg, grid);
    if (!r) return kExitSolver;
    const Surface ref = reference_surface(grid, cfg.params);
    const auto path = out_dir(opt, ".") / "solution.csv";
    std::ofstream out(path, std::ios::binary);
    out << "s_tilde,v,u,reference,error\n";
    for (int j = 0; j <= grid.J(); ++j) {
        for (int i = 0; i <= grid.I(); ++i) {
            out << csv_number(grid.s(i)) << ',' << csv_number(grid.v(j)) << ',' << csv_number(r->u(i, j)) << ','
                << csv_number(ref(i, j)) << ',' << csv_number(r->u(i, j) - ref(i, j)) << '\n';
        }
    }
    std::printf("rel_l2_error = %.6g (%s nodes)\n", relative_l2_error(r->u, ref, cfg.error_nodes),
                to_string(cfg.error_nodes).c_str());
    std::cerr << "wrote " << path.string() << '\n';
    return 0;
}

int cmd_greeks(const Options& opt) {
    const RunConfig cfg = resolve_config(opt);
    const GridSpec grid = cfg.grid();
    const auto r = run(cfg, grid);
    if (!r) return kExitSolver;
    const Greeks g = greeks(r->u, grid);
    const auto path = out_dir(opt, ".") / "greeks.csv";
    std::ofstream out(path, std::ios::binary);
    out << "s_tilde,v,u,delta,gamma,vega\n";
    for (int j = 0; j <= grid.J(); ++j) {
        for (int i = 0; i <= grid.I(); ++i) {
            out << csv_number(grid.s(i)) << ',' << csv_number(grid.v(j)) << ',' << csv_number(r->u(i, j)) << ','
                << csv_number(g.delta(i, j)) << ',' << csv_number(g.gamma(i, j)) << ','
                << csv_number(g.vega(i, j)) << '\n';
        }
    }
    std::cerr << "wrote " << path.string() << '\n';
    return 0;
}

int cmd_experiment(const Options& opt) {
    const RunConfig cfg = resolve_config(opt);
    if (!cfg.preset) throw ConfigError("preset", "experiment needs a parameter set (table1, table3 or table5)");
    ExperimentSpec spec = experiment_spec(cfg);
    spec.threads = threads_of(opt);
    const auto dir = out_dir(opt, "results");
    const auto rows = run_experiment(spec, dir.string());
    write_error_table(std::cout, rows);
    std::cerr << "wrote " << dir.string() << "/{error_table,slice_S3,slice_S4,slice_v3,slice_v4,greeks_S4}.csv\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heston option pricer: iterative operator splitting with artificial boundary conditions"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "key=value configuration file");
        sub->add_option("--preset", opt.preset, "parameter set: table1, table3 or table5");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", opt.seed, "Monte Carlo seed (price: adds an MC cross-check)");
        sub->add_option("--threads", opt.threads, "worker threads (overrides SOLVER_THREADS)");
    };
    CLI::App* price = app.add_subcommand("price", "price at one (s_tilde, v) point");
    CLI::App* solve_cmd = app.add_subcommand("solve", "solve the full surface and compare with the oracle");
    CLI::App* greeks_cmd = app.add_subcommand("greeks", "delta, gamma and vega surfaces");
    CLI::App* experiment = app.add_subcommand("experiment", "error tables, slices and Greeks series");
    for (CLI::App* sub : {price, solve_cmd, greeks_cmd, experiment}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*price) return cmd_price(opt);
        if (*solve_cmd) return cmd_solve(opt);
        if (*greeks_cmd) return cmd_greeks(opt);
        return cmd_experiment(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
