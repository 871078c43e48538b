#include "hsplit/oracle.hpp"

#include "hsplit/analytic.hpp"
#include "hsplit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

namespace hsplit {

namespace {

using cd = std::complex<double>;

cd log1p_complex(cd z) {
    if (std::abs(z) < 1e-4) {
        // z - z^2/2 + z^3/3 - z^4/4 + z^5/5
        return z * (1.0 + z * (-0.5 + z * (1.0 / 3.0 + z * (-0.25 + z * 0.2))));
    }
    return std::log(1.0 + z);
}

cd expm1_complex(cd z) {
    if (std::abs(z) < 1e-4) return z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0))));
    return std::exp(z) - 1.0;
}

// log of the characteristic function of ln S_tau, minus i u ln S.
cd log_cf(cd u, double v, double tau, const HestonParams& p) {
    const cd i(0.0, 1.0);
    const double s2 = p.sigma * p.sigma;
    const cd beta = p.kappa - p.rho * p.sigma * i * u;
    const cd a = u * u + i * u;
    cd d = std::sqrt(beta * beta + s2 * a);
    if (d.real() < 0.0) d = -d;
    const cd denom = beta + d;
    // (beta - d) / sigma^2 without cancellation.
    const cd bmd_over_s2 = -a / denom;
    const cd g = -s2 * a / (denom * denom); // (beta - d) / (beta + d)
    const cd e = std::exp(-d * tau);
    const cd one_minus_e = -expm1_complex(-d * tau);
    const cd D = bmd_over_s2 * one_minus_e / (1.0 - g * e);
    // log((1 - g e) / (1 - g)) / sigma^2 with g = O(sigma^2).
    const cd log_ratio = log1p_complex(-g * e) - log1p_complex(-g);
    cd log_term;
    if (s2 > 0.0) {
        log_term = log_ratio / s2;
    } else {
        log_term = cd(0.0, 0.0);
    }
    const cd C = p.kappa * p.theta * (bmd_over_s2 * tau - 2.0 * log_term);
    return C + D * v;
}

const numerics::QuadratureRule& cached_rule(int nodes) {
    static std::mutex mutex;
    static std::map<int, numerics::QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(nodes);
    if (it == cache.end()) it = cache.emplace(nodes, numerics::gauss_legendre(nodes)).first;
    return it->second;
}

} // namespace

void QuadratureConfig::validate() const {
    if (!(upper > 0.0)) throw DomainError("quadrature bound must be > 0");
    if (nodes < 64) throw DomainError("quadrature needs at least 64 nodes");
}

double averaged_variance(double v0, double tau, double kappa, double theta) {
    if (!(tau > 0.0)) throw DomainError("averaged_variance: tau must be > 0");
    const double x = kappa * tau;
    // (1 - e^{-x}) / x, stable for small x
    const double factor = x < 1e-8 ? 1.0 - 0.5 * x : -std::expm1(-x) / x;
    return theta + (v0 - theta) * factor;
}

double heston_cf_price(double s_tilde, double v, double tau, const HestonParams& p,
                       const QuadratureConfig& quad) {
    if (!(tau > 0.0)) throw DomainError("heston_cf_price: tau must be > 0");
    if (!(v >= 0.0)) throw DomainError("heston_cf_price: v must be >= 0");
    if (!(s_tilde >= 0.0)) throw DomainError("heston_cf_price: s_tilde must be >= 0");
    quad.validate();
    if (s_tilde == 0.0) return 0.0;
    if (p.sigma < 1e-10) {
        return u1(s_tilde, averaged_variance(v, tau, p.kappa, p.theta), tau);
    }

    const double x = std::log(s_tilde);
    const cd i(0.0, 1.0);
    const auto& rule = cached_rule(quad.nodes);
    const double half = 0.5 * quad.upper;
    double integral = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double u = half * (1.0 + rule.nodes[k]);
        const cd f1 = std::exp(log_cf(cd(u, -1.0), v, tau, p) + i * cd(u, -1.0) * x);
        const cd f2 = std::exp(log_cf(cd(u, 0.0), v, tau, p) + i * u * x);
        const double val = ((f1 - f2) / (i * u)).real();
        if (!std::isfinite(val)) throw OracleError("heston_cf_price: non-finite integrand");
        integral += rule.weights[k] * val;
    }
    integral *= half;
    return 0.5 * (s_tilde - 1.0) + integral / std::numbers::pi;
}

MonteCarloEstimate mc_price(double s_tilde, double v, double tau, const HestonParams& p,
                            const MonteCarloConfig& config) {
    if (config.paths < 2 || config.steps < 1) throw DomainError("mc_price: need paths >= 2, steps >= 1");
    if (!(s_tilde >= 0.0 && v >= 0.0 && tau >= 0.0)) throw DomainError("mc_price: negative input");
    if (tau == 0.0 || s_tilde == 0.0) return {std::max(s_tilde - 1.0, 0.0), 0.0};

    constexpr int kBatches = 64;
    const long pairs = config.paths / 2;
    const double dt = tau / config.steps;
    const double sq_dt = std::sqrt(dt);
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    const double x0 = std::log(s_tilde);

    std::seed_seq master{static_cast<std::uint32_t>(config.seed),
                         static_cast<std::uint32_t>(config.seed >> 32)};
    std::vector<std::uint32_t> seeds(kBatches);
    master.generate(seeds.begin(), seeds.end());

    // Per batch: sum and sum of squares of the pair-averaged payoff.
    std::vector<double> sums(kBatches, 0.0), sums_sq(kBatches, 0.0);
    auto run_batch = [&](int b) {
        std::mt19937_64 rng(seeds[b]);
        std::normal_distribution<double> normal;
        const long begin = pairs * b / kBatches;
        const long end = pairs * (b + 1) / kBatches;
        double s = 0.0, ss = 0.0;
        for (long path = begin; path < end; ++path) {
            double xa = x0, va = v, xb = x0, vb = v;
            for (int k = 0; k < config.steps; ++k) {
                const double z1 = normal(rng);
                const double z2 = p.rho * z1 + rho_c * normal(rng);
                const double pa = std::max(va, 0.0), pb = std::max(vb, 0.0);
                const double ra = std::sqrt(pa), rb = std::sqrt(pb);
                xa += -0.5 * pa * dt + ra * sq_dt * z1;
                xb += -0.5 * pb * dt - rb * sq_dt * z1;
                va += p.kappa * (p.theta - pa) * dt + p.sigma * ra * sq_dt * z2;
                vb += p.kappa * (p.theta - pb) * dt - p.sigma * rb * sq_dt * z2;
            }
            const double pay = 0.5 * (std::max(std::exp(xa) - 1.0, 0.0) + std::max(std::exp(xb) - 1.0, 0.0));
            s += pay;
            ss += pay * pay;
        }
        sums[b] = s;
        sums_sq[b] = ss;
    };

    const int threads = std::clamp(config.threads, 1, kBatches);
    if (threads == 1) {
        for (int b = 0; b < kBatches; ++b) run_batch(b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (int b = t; b < kBatches; b += threads) run_batch(b);
            });
        }
        for (auto& th : pool) th.join();
    }

    double s = 0.0, ss = 0.0;
    for (int b = 0; b < kBatches; ++b) s += sums[b], ss += sums_sq[b];
    const double n = static_cast<double>(pairs);
    const double mean = s / n;
    const double var = std::max(0.0, (ss - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

Surface reference_surface(const GridSpec& grid, const HestonParams& p, const QuadratureConfig& quad) {
    Surface u(grid, 0.0, grid.N());
    const double tau = grid.maturity();
    for (int j = 0; j <= grid.J(); ++j) {
        for (int i = 1; i <= grid.I(); ++i) u(i, j) = heston_cf_price(grid.s(i), grid.v(j), tau, p, quad);
    }
    return u;
}

} // namespace hsplit
