#include "hsplit/analytic.hpp"
#include "hsplit/boundary.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hsplit;

namespace {

std::vector<double> sample_row(const CurveFitParams& c, const GridSpec& g) {
    std::vector<double> q(g.I() - 1);
    for (int i = 1; i < g.I(); ++i) q[i - 1] = c(std::log(g.s(i)));
    return q;
}

// Closed forms of the two pieces of the boundary-local kernel integrated over [0, t].
double kernel1_integral(double v, double t) {
    const double c = 0.5 * std::sqrt(v);
    const double x1 = c * std::sqrt(t);
    const double pdf = std::exp(-0.5 * x1 * x1) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf_part = t * oracle::phi_cdf(x1) - (oracle::phi_cdf(x1) - x1 * pdf - 0.5) / (c * c);
    const double root_part = 4.0 / v * std::erf(std::sqrt(v * t / 8.0));
    return cdf_part - t + root_part;
}

} // namespace

TEST_CASE("convolution coefficients against the closed formulas") {
    for (double h : {0.4, 0.1}) {
        const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, h);
        const AbcCoefficients c = precompute_abc_coefficients(g);
        const double r = g.ds() / g.s_max();
        const double dt = g.dtau();
        for (int j = 1; j <= g.J(); ++j) {
            const double v = g.v(j);
            const double xi = r * std::sqrt(v * dt) / (4.0 * std::sqrt(2.0 * std::numbers::pi));
            const double eta = 2.0 * r / (std::sqrt(2.0 * std::numbers::pi) * std::sqrt(v * dt));
            CHECK(c.xi[j] == doctest::Approx(xi).epsilon(1e-15));
            CHECK(c.eta[j] == doctest::Approx(eta).epsilon(1e-15));
            CHECK(c.alpha[j] == doctest::Approx(xi + eta).epsilon(1e-15));
            CHECK(c.xi[j] * c.eta[j] == doctest::Approx(r * r / (4.0 * std::numbers::pi)).epsilon(1e-14));

            std::vector<double> phi(g.N() + 1);
            for (int k = 0; k <= g.N(); ++k) {
                const double decay = std::exp(-v * k * dt / 8.0);
                phi[k] = k == 0 ? 1.0 : k == 1 ? 1.5 * decay : decay / std::sqrt(static_cast<double>(k));
                CHECK(c.phi[j][k] == doctest::Approx(phi[k]).epsilon(1e-15));
            }
            double direct = 0.0, rearranged_eta = 0.0, rearranged_alpha = 0.0;
            for (int k = 1; k <= g.N(); ++k) {
                const double beta = eta * phi[k - 1] - (xi + eta) * phi[k];
                // beta is a difference of two terms; measure against their size.
                const double size = eta * phi[k - 1] + (xi + eta) * phi[k];
                CHECK(std::abs(c.beta[j][k] - beta) <= 1e-15 * size);
                direct += c.beta[j][k];
                rearranged_eta += phi[k - 1];
                rearranged_alpha += phi[k];
            }
            CHECK(direct == doctest::Approx(eta * rearranged_eta - (xi + eta) * rearranged_alpha).epsilon(1e-13));
        }
    }
    const GridSpec tiny(4.0, 1e-9, 4, 2, 4, 1.0);
    CHECK(precompute_abc_coefficients(tiny).phi[1][1] == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("line closures") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.2);
    const AbcCoefficients c = precompute_abc_coefficients(g);
    AbcHistory hist(g);
    const int j = 5;

    const LineClosure orig = close_line(BoundaryKind::Original, j, 1, hist, c, g);
    CHECK(orig.right_diag == 1.0);
    CHECK(orig.right_lower == -1.0);
    CHECK(orig.right_rhs == 0.0);
    CHECK(orig.left_diag == 1.0);
    CHECK(orig.left_rhs == 0.0);

    const LineClosure first = close_line(BoundaryKind::MApABC1, j, 1, hist, c, g);
    CHECK(first.right_diag == doctest::Approx(c.alpha[j] + 1.0 - g.ds() / (2.0 * g.s_max())));
    CHECK(first.right_lower == -1.0);
    CHECK(first.right_rhs == 0.0);

    std::vector<double> u2(g.J() + 1, 0.0), q(g.J() + 1, 0.0);
    std::vector<CurveFitParams> fits(g.J() + 1);
    u2[j] = 0.37;
    hist.append(u2, q, fits);
    const double H = 0.011;
    const LineClosure second = close_line(BoundaryKind::MApABC2, j, 2, hist, c, g, {H, 0.0});
    const double v = g.v(j);
    const double r = g.ds() / g.s_max();
    const double eta = 2.0 * r / (std::sqrt(2.0 * std::numbers::pi) * std::sqrt(v * g.dtau()));
    const double xi = r * std::sqrt(v * g.dtau()) / (4.0 * std::sqrt(2.0 * std::numbers::pi));
    const double beta1 = eta * 1.0 - (xi + eta) * 1.5 * std::exp(-v * g.dtau() / 8.0);
    CHECK(second.right_rhs == doctest::Approx(beta1 * 0.37 + H).epsilon(1e-14));

    const LineClosure implicit = close_line(BoundaryKind::MApABC1, j, 2, hist, c, g, {0.0, 0.25});
    CHECK(implicit.right_diag == doctest::Approx(first.right_diag - 0.25));

    CHECK_THROWS_AS(close_line(BoundaryKind::MApABC1, j, 3, hist, c, g), DomainError);
    CHECK_THROWS_AS(close_line(BoundaryKind::MApABC1, 0, 1, hist, c, g), DomainError);
}

TEST_CASE("convolution weights integrate the kernels") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.1);
    const ConvolutionWeights w(g);
    for (int j : {1, 7, 39}) {
        const double v = g.v(j);
        for (int n : {1, 2, 9, 20}) {
            double s1 = 0.0, s2 = 0.0;
            for (int m = 0; m <= n; ++m) {
                s1 += w.mapabc1(j, m, n);
                s2 += w.mapabc2(j, m, n);
            }
            const double t = n * g.dtau();
            CHECK(s1 == doctest::Approx(kernel1_integral(v, t)).epsilon(1e-12));
            CHECK(s2 == doctest::Approx(std::sqrt(2.0 / (std::numbers::pi * v)) * 2.0 * std::sqrt(t)).epsilon(1e-13));
        }
    }
}

TEST_CASE("boundary-local source") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.1);
    const ConvolutionWeights w(g);
    AbcHistory hist(g);
    const double f = g.ds() / g.s_max();

    const BoundarySource none = h_mapabc1(4, 1, hist, w, g, NodeSplit{});
    CHECK(none.value == 0.0);
    CHECK(none.diag == 0.0);

    const double q = 0.42;
    std::vector<double> u2(g.J() + 1, 0.0), qb(g.J() + 1, q);
    std::vector<CurveFitParams> fits(g.J() + 1);
    AbcHistory seeded(g);
    seeded.append(u2, qb, fits);
    for (int j : {1, 10, 30}) {
        const double v = g.v(j);
        // Single panel: current Q = q, level 0 is the zero initial state.
        const BoundarySource one = h_mapabc1(j, 1, hist, w, g, NodeSplit{0.0, q});
        CHECK(one.value == doctest::Approx(f * w.mapabc1(j, 0, 1) * q).epsilon(1e-14));
        // Constant q on a panel integrates the kernel exactly.
        CHECK(w.mapabc1(j, 0, 1) + w.mapabc1(j, 1, 1) == doctest::Approx(kernel1_integral(v, g.dtau())).epsilon(1e-12));

        // Two levels: lags 0 and 1 carry q, lag 2 (level 0) carries 0.
        const BoundarySource two = h_mapabc1(j, 2, seeded, w, g, NodeSplit{0.0, q});
        CHECK(two.value == doctest::Approx(f * q * (w.mapabc1(j, 0, 2) + w.mapabc1(j, 1, 2))).epsilon(1e-14));

        const BoundarySource implicit = h_mapabc1(j, 1, hist, w, g, NodeSplit{-2.0, 0.0});
        CHECK(implicit.diag == doctest::Approx(-2.0 * f * w.mapabc1(j, 0, 1)));
    }

    CHECK(std::isfinite(mapabc1_kernel(1e-12, 0.1)));
    CHECK(normal_cdf(0.5 * std::sqrt(1e-12 * 0.1)) - 1.0 == doctest::Approx(-0.5));
    const GridSpec low(4.0, 1e-6, 40, 2, 20, 2.0);
    const ConvolutionWeights wl(low);
    AbcHistory hl(low);
    CHECK(std::isfinite(h_mapabc1(1, 1, hl, wl, low, NodeSplit{0.0, 1.0}).value));
}

TEST_CASE("exterior source inner integral against adaptive quadrature") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double s_max = 4.0;
    const double x0 = std::log(s_max);
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        const double v = 0.1 + 3.9 * u(rng);
        const double t = 0.05 + 1.95 * u(rng);
        const CurveFitParams fit{0.2 + 0.8 * u(rng), 0.5 * u(rng), x0 - 1.0 + 2.0 * u(rng), 0.2 + 0.8 * u(rng)};
        const double vt = v * t;
        // Integrate in S' directly.
        auto integrand = [&](double sp) {
            const double y = std::log(sp) - x0;
            const double z = y + 0.5 * vt;
            return std::sqrt(2.0 / (std::numbers::pi * vt)) * y / vt * std::exp(-z * z / (2.0 * vt)) *
                   fit(std::log(sp)) / sp;
        };
        std::vector<double> cuts{s_max};
        for (double y : {0.25 * std::sqrt(vt), std::sqrt(vt), 3.0 * std::sqrt(vt), 8.0 * std::sqrt(vt),
                         fit.mu - x0 - 3.0 * fit.s, fit.mu - x0, fit.mu - x0 + 3.0 * fit.s}) {
            if (y > 0.0) cuts.push_back(s_max * std::exp(y));
        }
        cuts.push_back(s_max * std::exp(std::max(60.0 * std::sqrt(vt), fit.mu - x0 + 60.0 * fit.s)));
        std::sort(cuts.begin(), cuts.end());
        const double want = oracle::adaptive_pieces(integrand, cuts, 1e-12);
        const double got = mapabc2_inner_integral(fit, v, t, s_max);
        CHECK(want > 0.0);
        worst = std::max(worst, std::abs(got - want) / std::abs(want));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("exterior source edge cases") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.1);
    const ConvolutionWeights w(g);
    AbcHistory hist(g);
    CHECK(h_mapabc2(3, 1, hist, w, g, NodeSplit{}).value == 0.0);

    const CurveFitParams far_below{1.0, 0.0, std::log(4.0) - 5.0, 0.01};
    CHECK(std::abs(mapabc2_inner_integral(far_below, 0.5, 0.1, 4.0)) < 1e-300);
    std::vector<double> u2(g.J() + 1, 0.0), q(g.J() + 1, 0.0);
    std::vector<CurveFitParams> fits(g.J() + 1, far_below);
    hist.append(u2, q, fits);
    CHECK(std::abs(h_mapabc2(3, 2, hist, w, g, NodeSplit{}).value) < 1e-300);

    const CurveFitParams positive{0.5, 0.2, 1.7, 0.6};
    for (double v : {0.1, 1.0, 4.0})
        for (double t : {0.01, 0.5, 2.0}) CHECK(mapabc2_inner_integral(positive, v, t, 4.0) >= 0.0);
}

TEST_CASE("curve fit") {
    SUBCASE("zero row") {
        const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.1);
        const std::vector<double> q(g.I() - 1, 0.0);
        const CurveFitParams f = fit_q_curve(q, g);
        CHECK(f.gamma0 == 0.0);
        CHECK(f.gamma1 == 0.0);
        CHECK(curve_fit_residual(q, g, f) == 0.0);
    }
    SUBCASE("in-family round trip") {
        const CurveFitParams truth{0.3, -0.1, 0.5, 0.4};
        for (double h : {0.4, 0.2, 0.1, 0.05}) {
            const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, h);
            const auto q = sample_row(truth, g);
            const CurveFitParams f = fit_q_curve(q, g);
            CHECK(curve_fit_residual(q, g, f) <= 1e-8);
            CHECK(f.gamma0 == doctest::Approx(truth.gamma0).epsilon(1e-4).scale(1.0));
            CHECK(f.gamma1 == doctest::Approx(truth.gamma1).epsilon(1e-4).scale(1.0));
            CHECK(f.mu == doctest::Approx(truth.mu).epsilon(1e-4).scale(1.0));
            CHECK(f.s == doctest::Approx(truth.s).epsilon(1e-4).scale(1.0));
        }
    }
    SUBCASE("no worse than the best constant") {
        std::mt19937_64 rng(13);
        std::normal_distribution<double> noise(0.0, 0.05);
        const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.1);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> q(g.I() - 1);
            for (int i = 1; i < g.I(); ++i) q[i - 1] = std::sin(0.7 * g.s(i) + trial) + noise(rng);
            double mean = 0.0;
            for (double x : q) mean += x;
            mean /= static_cast<double>(q.size());
            double constant_ssr = 0.0;
            for (double x : q) constant_ssr += (x - mean) * (x - mean);
            const CurveFitParams f = fit_q_curve(q, g);
            CHECK(curve_fit_residual(q, g, f) <= constant_ssr * (1.0 + 1e-12));
        }
    }
    SUBCASE("warm start reuses the last stored fit") {
        const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.4);
        AbcHistory hist(g);
        CHECK_FALSE(warm_start(hist, 2).start.has_value());
        std::vector<double> u2(g.J() + 1, 0.0), q(g.J() + 1, 0.0);
        std::vector<CurveFitParams> fits(g.J() + 1, CurveFitParams{0.1, 0.2, 0.3, 0.4});
        hist.append(u2, q, fits);
        const auto opts = warm_start(hist, 2);
        REQUIRE(opts.start.has_value());
        CHECK(opts.start->mu == 0.3);
    }
    SUBCASE("row length") {
        const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.4);
        CHECK_THROWS_AS(fit_q_curve(std::vector<double>(3, 1.0), g), DomainError);
    }
}

TEST_CASE("variance-direction closures") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.25);
    const int I = g.I(), J = g.J();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-1.0, 1.0);

    Surface u(g);
    for (double& x : u.values()) x = d(rng);
    std::vector<double> prev(I + 1), zero(I + 1, 0.0);
    for (int i = 0; i <= I; ++i) prev[i] = i == 0 ? 0.0 : d(rng);
    close_v_boundaries(u, prev, zero, g);
    for (int i = 0; i <= I; ++i) {
        CHECK(u(i, 0) == prev[i]);
        CHECK(u(i, J) == u(i, J - 1));
    }

    // U2 = v: forward difference is exact, so the row advances by dtau * kappa theta.
    const double kt = 0.3 * 0.2;
    Surface lin(g);
    for (int j = 0; j <= J; ++j)
        for (int i = 0; i <= I; ++i) lin(i, j) = g.v(j);
    std::vector<double> q(I + 1), row0(I + 1, 0.0);
    for (int i = 0; i <= I; ++i) q[i] = kt * (lin(i, 1) - lin(i, 0)) / g.dv();
    close_v_boundaries(lin, row0, q, g);
    for (int i = 1; i <= I; ++i) CHECK(lin(i, 0) == doctest::Approx(g.dtau() * kt).epsilon(1e-15));
    CHECK(lin(0, 0) == 0.0);
}
