#include "hsplit/stencils.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hsplit;

namespace {

const HestonParams kParams{1.5, 0.6, 0.7, -0.4, 2.0, 0.0, 1.0};

Surface random_surface(const GridSpec& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Surface u(g);
    for (double& x : u.values()) x = d(rng);
    return u;
}

template <class F>
Surface sample(const GridSpec& g, F&& f) {
    Surface u(g);
    for (int j = 0; j <= g.J(); ++j)
        for (int i = 0; i <= g.I(); ++i) u(i, j) = f(g.s(i), g.v(j));
    return u;
}

} // namespace

TEST_CASE("upwind stencil on elementary fields") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.2);
    const auto& p = kParams;

    const Surface c = apply_l2_upwind(Surface(g, 3.0), g, p);
    for (double x : c.values()) CHECK(std::abs(x) <= 1e-13);

    const Surface lin = apply_l2_upwind(sample(g, [](double, double v) { return v; }), g, p);
    const Surface bil = apply_l2_upwind(sample(g, [](double s, double v) { return s * v; }), g, p);
    const Surface quad = apply_l2_upwind(sample(g, [](double, double v) { return v * v; }), g, p);
    const double dv = g.dv();
    for (int j = 0; j <= g.J(); ++j) {
        for (int i = 0; i <= g.I(); ++i) {
            const bool interior = i > 0 && i < g.I() && j > 0 && j < g.J();
            if (!interior) {
                CHECK(lin(i, j) == 0.0);
                continue;
            }
            const double s = g.s(i), v = g.v(j);
            const double drift = p.kappa * (p.theta - v);
            CHECK(lin(i, j) == doctest::Approx(drift).epsilon(1e-12).scale(1.0));
            CHECK(bil(i, j) == doctest::Approx(p.rho * p.sigma * v * s + drift * s).epsilon(1e-12).scale(1.0));
            // v^2: one-sided differences are 2v + dv forward and 2v - dv backward.
            const double want = p.sigma * p.sigma * v + p.kappa * std::max(p.theta - v, 0.0) * (2 * v + dv) +
                                p.kappa * std::min(p.theta - v, 0.0) * (2 * v - dv);
            CHECK(quad(i, j) == doctest::Approx(want).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("upwind stencil is linear") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.25);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Surface a = random_surface(g, rng);
        const Surface b = random_surface(g, rng);
        const Surface lhs = apply_l2_upwind(0.7 * a + (-1.3) * b, g, kParams);
        const Surface rhs = 0.7 * apply_l2_upwind(a, g, kParams) + (-1.3) * apply_l2_upwind(b, g, kParams);
        for (std::size_t k = 0; k < lhs.values().size(); ++k) {
            CHECK(std::abs(lhs.values()[k] - rhs.values()[k]) <= 1e-13 * (1.0 + std::abs(rhs.values()[k])));
        }
    }
}

TEST_CASE("mixed split reproduces the full stencil") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.2);
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Surface u = random_surface(g, rng);
        const MixedSplit m = split_l2_mixed(u, g, kParams);
        const Surface full = apply_l2_upwind(u, g, kParams);
        for (int j = 1; j < g.J(); ++j) {
            for (int i = 1; i < g.I(); ++i) {
                const double r = m.diag(i, j) * u(i, j) + m.qhat(i, j) - full(i, j);
                worst = std::max(worst, std::abs(r) / (1.0 + std::abs(full(i, j))));
            }
        }
    }
    CHECK(worst <= 1e-13);
}

TEST_CASE("mixed split details") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.5);
    const auto& p = kParams;
    for (int j = 1; j < g.J(); ++j) {
        const double v = g.v(j);
        const double want = -p.sigma * p.sigma * v / (g.dv() * g.dv()) - p.kappa * std::abs(p.theta - v) / g.dv();
        CHECK(l2_centre_coefficient(j, g, p) == doctest::Approx(want).epsilon(1e-15));
    }

    const MixedSplit zero = split_l2_mixed(Surface(g), g, p);
    for (double x : zero.qhat.values()) CHECK(x == 0.0);
    std::mt19937_64 rng(3);
    const MixedSplit other = split_l2_mixed(random_surface(g, rng), g, p);
    for (std::size_t k = 0; k < zero.diag.values().size(); ++k) CHECK(zero.diag.values()[k] == other.diag.values()[k]);

    HestonParams off = p;
    off.sigma = 0.0;
    off.kappa = 0.0;
    const MixedSplit none = split_l2_mixed(random_surface(g, rng), g, off);
    for (double x : none.diag.values()) CHECK(x == 0.0);
    for (double x : none.qhat.values()) CHECK(x == 0.0);
}

TEST_CASE("boundary-column split is consistent") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.25);
    std::mt19937_64 rng(9);
    const Surface u = random_surface(g, rng);
    const int I = g.I();
    for (int j = 1; j < g.J(); ++j) {
        const NodeSplit n = l2_split_at_boundary(u, j, g, kParams);
        CHECK(n.diag == doctest::Approx(l2_centre_coefficient(j, g, kParams)));
        // Backward S-difference in the cross term; the rest as in the interior.
        const auto& p = kParams;
        const double v = g.v(j), s = g.s(I), ds = g.ds(), dv = g.dv();
        const double cross = (u(I, j + 1) - u(I - 1, j + 1) - u(I, j - 1) + u(I - 1, j - 1)) / (2 * ds * dv);
        const double vv = (u(I, j + 1) - 2 * u(I, j) + u(I, j - 1)) / (dv * dv);
        const double vdrift = p.kappa * std::max(p.theta - v, 0.0) * (u(I, j + 1) - u(I, j)) / dv +
                              p.kappa * std::min(p.theta - v, 0.0) * (u(I, j) - u(I, j - 1)) / dv;
        const double want = p.rho * p.sigma * v * s * cross + 0.5 * p.sigma * p.sigma * v * vv + vdrift;
        CHECK(n.value(u(I, j)) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("tridiagonal solver") {
    SUBCASE("hand example") {
        TridiagonalSystem s(3);
        s.lower = {0, -1, -1};
        s.diag = {2, 2, 2};
        s.upper = {-1, -1, 0};
        s.rhs = {1, 0, 1};
        const auto x = solve_tridiagonal(s);
        for (double xi : x) CHECK(xi == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("identity") {
        TridiagonalSystem s(4);
        s.diag = {1, 1, 1, 1};
        s.rhs = {3, -2, 0.5, 7};
        CHECK(solve_tridiagonal(s) == s.rhs);
    }
    SUBCASE("zero pivot") {
        TridiagonalSystem s(2);
        s.diag = {0, 1};
        CHECK_THROWS_AS(solve_tridiagonal(s), SingularSystemError);
    }
    SUBCASE("random dominant systems") {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        std::uniform_int_distribution<int> size(1, 120);
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int m = size(rng);
            TridiagonalSystem s(m);
            double bnorm = 0.0;
            for (int k = 0; k < m; ++k) {
                s.lower[k] = k > 0 ? d(rng) : 0.0;
                s.upper[k] = k + 1 < m ? d(rng) : 0.0;
                const double sign = d(rng) < 0 ? -1.0 : 1.0;
                s.diag[k] = sign * (std::abs(s.lower[k]) + std::abs(s.upper[k]) + 0.01 + std::abs(d(rng)));
                s.rhs[k] = 100.0 * d(rng);
                bnorm = std::max(bnorm, std::abs(s.rhs[k]));
            }
            const auto x = solve_tridiagonal(s);
            const double r = oracle::tri_residual(s.lower, s.diag, s.upper, s.rhs, x);
            CHECK(tridiagonal_residual(s, x) <= 1e-12 * (bnorm + 1.0));
            worst = std::max(worst, r / (bnorm + 1.0));
        }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("line system assembly") {
    const GridSpec g = GridSpec::uniform(4.0, 4.0, 2.0, 0.2);
    const auto& p = kParams;
    const int I = g.I();

    SUBCASE("constants pass through the diffusion rows") {
        std::mt19937_64 rng(1);
        const Surface prev = random_surface(g, rng);
        const TridiagonalSystem s = assemble_line_system(3, prev, Surface(g), Surface(g), g);
        for (int i = 1; i < I; ++i) {
            CHECK(s.lower[i] + s.diag[i] + s.upper[i] == doctest::Approx(1.0 / g.dtau()));
            CHECK(s.rhs[i] == doctest::Approx(prev(i, 3) / g.dtau()));
        }
    }
    SUBCASE("dominance margin") {
        const MixedSplit m = split_l2_mixed(Surface(g), g, p);
        for (int j = 1; j < g.J(); ++j) {
            const TridiagonalSystem s = assemble_line_system(j, Surface(g), Surface(g), m.diag, g);
            const double v = g.v(j);
            const double want = 1.0 / g.dtau() + p.kappa * std::abs(p.theta - v) / g.dv() +
                                p.sigma * p.sigma * v / (g.dv() * g.dv());
            for (int i = 1; i < I; ++i) {
                const double margin = std::abs(s.diag[i]) - std::abs(s.lower[i]) - std::abs(s.upper[i]);
                CHECK(margin == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }
    SUBCASE("manufactured quadratic solution") {
        const MixedSplit m = split_l2_mixed(Surface(g), g, p);
        auto exact = [](double s) { return 0.3 * s * s - 0.2 * s + 0.1; };
        for (int j = 1; j < g.J(); j += 4) {
            const double v = g.v(j);
            Surface prev(g), src(g);
            for (int i = 0; i <= I; ++i) prev(i, j) = std::cos(g.s(i));
            for (int i = 1; i < I; ++i) {
                const double s = g.s(i);
                const double uss = 0.6; // exact second difference of the quadratic
                src(i, j) = (exact(s) - prev(i, j)) / g.dtau() - 0.5 * v * s * s * uss - m.diag(i, j) * exact(s);
            }
            TridiagonalSystem sys = assemble_line_system(j, prev, src, m.diag, g);
            sys.rhs[0] = exact(0.0);
            sys.rhs[I] = exact(g.s(I));
            const auto x = solve_tridiagonal(sys);
            for (int i = 0; i <= I; ++i) CHECK(x[i] == doctest::Approx(exact(g.s(i))).epsilon(1e-12));
        }
    }
    SUBCASE("j range") {
        CHECK_THROWS_AS(assemble_line_system(0, Surface(g), Surface(g), Surface(g), g), DomainError);
        CHECK_THROWS_AS(assemble_line_system(g.J(), Surface(g), Surface(g), Surface(g), g), DomainError);
    }
}
