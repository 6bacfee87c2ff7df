#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qgbsde/model.hpp"

#include <cmath>
#include <random>

using namespace qgbsde;

TEST_CASE("universal bound: closed-form values") {
    // beta = 0: bound is just the terminal sup plus the integrated constant.
    UniversalBound ub = universal_bound(0.0, 2.0, 0.0, 6.0, 1.0);
    CHECK(ub.y_bound == doctest::Approx(6.0).epsilon(1e-14));

    // l_bound enters linearly in T before the exponential tilt.
    ub = universal_bound(0.5, 1.0, 2.0, 1.0, 2.0);
    CHECK(ub.y_bound == doctest::Approx(std::exp(1.0) * 5.0).epsilon(1e-14));

    // Full formula for the z-component at a hand-checkable point.
    ub = universal_bound(0.0, 1.0, 0.0, 1.0, 1.0);
    CHECK(ub.y_bound == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ub.z_bmo_bound == doctest::Approx(std::exp(4.0) * 3.0).epsilon(1e-14));
}

TEST_CASE("universal bound: monotone in each input") {
    const UniversalBound base = universal_bound(0.5, 2.0, 1.0, 3.0, 1.0);
    CHECK(universal_bound(0.6, 2.0, 1.0, 3.0, 1.0).y_bound > base.y_bound);
    CHECK(universal_bound(0.5, 2.0, 1.5, 3.0, 1.0).y_bound > base.y_bound);
    CHECK(universal_bound(0.5, 2.0, 1.0, 4.0, 1.0).y_bound > base.y_bound);
    CHECK(universal_bound(0.5, 2.0, 1.0, 3.0, 1.5).y_bound > base.y_bound);
    CHECK(universal_bound(0.5, 3.0, 1.0, 3.0, 1.0).z_bmo_bound > base.z_bmo_bound);
}

TEST_CASE("universal bound: rejects bad inputs") {
    CHECK_THROWS_AS(universal_bound(0.0, 0.0, 0.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(universal_bound(0.0, -1.0, 0.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(universal_bound(-0.1, 1.0, 0.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(universal_bound(0.0, 1.0, -0.1, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(universal_bound(0.0, 1.0, 0.0, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(universal_bound(0.0, 1.0, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("truncation rule: cap and radius") {
    TruncationRule rule;
    rule.alpha = 1.0 / 3.0;
    rule.c_N = 2.0;
    rule.enabled = true;
    CHECK(rule.cap(8) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(rule.radius(8, 2.0) == doctest::Approx(2.0).epsilon(1e-14));
    // The radius grows with n, so the clamp relaxes along a refinement run.
    CHECK(rule.radius(27, 2.0) > rule.radius(8, 2.0));
}

TEST_CASE("truncated driver: radial clamp on the quadratic preset") {
    auto [model, driver] = preset_qg_2d(0.05, 0.05, 0.5, 0.5, 0.3, 2.0);
    TruncationRule rule;
    rule.alpha = 1.0 / 3.0;
    rule.c_N = 2.0;
    rule.enabled = true;
    const Driver trunc = truncate_driver(driver, rule, 8);  // radius = 4/2 = 2

    const Vec x = Vec::Constant(2, 1.0);
    RowVec z(2);
    z << 1.0, 0.0;  // inside the ball: untouched, f = (2/2)*1 = 1
    CHECK(trunc.f(0.0, x, 0.0, z) == doctest::Approx(1.0).epsilon(1e-14));
    z << 4.0, 0.0;  // clamped to |z| = 2, f = (2/2)*4 = 4
    CHECK(trunc.f(0.0, x, 0.0, z) == doctest::Approx(4.0).epsilon(1e-14));
    z << 3.0, 4.0;  // |z| = 5 -> clamped radially, same value as |z| = 2
    CHECK(trunc.f(0.0, x, 0.0, z) == doctest::Approx(4.0).epsilon(1e-14));

    // For the pure quadratic the Lipschitz constant equals the cap N(n).
    REQUIRE(trunc.lipschitz_in_z.has_value());
    CHECK(*trunc.lipschitz_in_z == doctest::Approx(4.0).epsilon(1e-14));
    CHECK_FALSE(trunc.truncation_skipped);
}

TEST_CASE("truncated driver: Lipschitz scan and clamp geometry") {
    auto [model, driver] = preset_qg_2d(0.05, 0.05, 0.5, 0.5, 0.0, 10.0);
    TruncationRule rule;
    rule.alpha = 1.0 / 3.0;
    rule.c_N = 1.0;
    rule.enabled = true;
    const int n = 125;  // cap N = 5, radius = 0.5
    const Driver trunc = truncate_driver(driver, rule, n);
    const double radius = rule.radius(n, driver.gamma);
    CHECK(radius == doctest::Approx(0.5).epsilon(1e-14));

    // Empirical Lipschitz constant over random pairs stays below the cap.
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const Vec x = Vec::Constant(2, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
        RowVec z1(2), z2(2);
        z1 << u(rng), u(rng);
        z2 << u(rng), u(rng);
        const double df = std::abs(trunc.f(0.0, x, 0.0, z1) - trunc.f(0.0, x, 0.0, z2));
        const double dz = (z1 - z2).norm();
        if (dz > 1e-9) worst = std::max(worst, df / dz);
    }
    CHECK(worst <= rule.cap(n) + 1e-9);

    // The clamped value is radially monotone: f(z) <= f at the boundary.
    RowVec boundary(2);
    boundary << radius, 0.0;
    const double f_edge = trunc.f(0.0, x, 0.0, boundary);
    RowVec far(2);
    far << 7.0, -2.0;
    CHECK(trunc.f(0.0, x, 0.0, far) == doctest::Approx(f_edge).epsilon(1e-12));
}

TEST_CASE("truncated driver: disabled rule passes through") {
    auto [model, driver] = preset_qg_2d(0.05, 0.05, 0.5, 0.5, 0.3, 3.0);
    TruncationRule rule;  // enabled = false
    const Driver out = truncate_driver(driver, rule, 100);
    CHECK(out.truncation_skipped);
    RowVec z(2);
    z << 10.0, 0.0;
    const Vec x = Vec::Constant(2, 1.0);
    CHECK(out.f(0.0, x, 0.0, z) == doctest::Approx(driver.f(0.0, x, 0.0, z)));
}

TEST_CASE("quadratic preset: coefficients") {
    auto [model, driver] = preset_qg_2d(0.05, 0.07, 0.5, 0.6, 0.3, 2.0);
    Vec x(2);
    x << 2.0, 3.0;

    const Vec b = model.b(0.0, x);
    CHECK(b(0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(b(1) == doctest::Approx(0.21).epsilon(1e-14));

    const Mat s = model.sigma(0.0, x);
    CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(s(1, 0) == doctest::Approx(0.6 * 3.0 * 0.3).epsilon(1e-14));
    CHECK(s(1, 1) == doctest::Approx(0.6 * 3.0 * std::sqrt(1.0 - 0.09)).epsilon(1e-14));
    // Row norms recover the per-asset volatilities.
    CHECK(s.row(1).norm() == doctest::Approx(0.6 * 3.0).epsilon(1e-14));

    const Mat j = model.db_dx(0.0, x);
    CHECK(j(0, 0) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(j(1, 1) == doctest::Approx(0.07).epsilon(1e-14));
    CHECK(j(0, 1) == 0.0);
    CHECK(j(1, 0) == 0.0);

    RowVec z(2);
    z << 0.3, 0.4;
    CHECK(driver.f(0.0, x, 5.0, z) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(driver.beta == 0.0);
    CHECK(driver.gamma == doctest::Approx(2.0));
    CHECK(driver.l_bound == 0.0);
}

TEST_CASE("two-rate preset: driver cases") {
    auto [model, driver] = preset_two_rate(0.06, 0.3, 0.01, 0.06);
    const Vec x = Vec::Constant(1, 100.0);

    // No shortfall (y >= z/sigma): plain linear pricing at the lending rate.
    RowVec z = RowVec::Constant(1, 0.3);  // z/sigma = 1
    CHECK(driver.f(0.0, x, 2.0, z) ==
          doctest::Approx(-(0.01 * 2.0 + (0.05 / 0.3) * 0.3)).epsilon(1e-12));

    // Borrowing region (y < z/sigma): the shortfall earns the spread back.
    CHECK(driver.f(0.0, x, 0.0, z) ==
          doctest::Approx(-((0.05 / 0.3) * 0.3 - 1.0 * 0.05)).epsilon(1e-12));

    // R = r collapses to the one-rate linear driver regardless of sign.
    auto [m1, one_rate] = preset_two_rate(0.06, 0.3, 0.02, 0.02);
    CHECK(one_rate.f(0.0, x, -1.0, z) ==
          doctest::Approx(-(0.02 * -1.0 + (0.04 / 0.3) * 0.3)).epsilon(1e-12));

    CHECK(driver.beta == doctest::Approx(0.06).epsilon(1e-14));
    CHECK(driver.gamma == doctest::Approx(1.0));
    REQUIRE(driver.lipschitz_in_z.has_value());
    const double z_lip = 0.05 / 0.3 + 0.05 / 0.3;
    CHECK(*driver.lipschitz_in_z == doctest::Approx(z_lip).epsilon(1e-12));
    CHECK(driver.l_bound == doctest::Approx(0.5 * z_lip * z_lip).epsilon(1e-12));
}

TEST_CASE("structure condition holds on random samples") {
    struct Setup {
        Driver driver;
        int d;
    };
    std::vector<Setup> setups;
    setups.push_back({preset_qg_2d(0.05, 0.05, 0.5, 0.5, 0.3, 3.0).second, 2});
    setups.push_back({preset_qg_2d_log(0.05, 0.05, 1.0, 1.0, 0.3, 4.0).second, 2});
    setups.push_back({preset_two_rate(0.06, 0.3, 0.01, 0.06).second, 1});
    setups.push_back({preset_two_rate_log(0.05, 0.2, 0.01, 3.01).second, 1});

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(0.1, 3.0);
    std::uniform_real_distribution<double> uy(-10.0, 10.0);
    std::uniform_real_distribution<double> uz(-5.0, 5.0);
    for (const Setup& s : setups) {
        for (int k = 0; k < 2500; ++k) {
            Vec x(s.d);
            for (int j = 0; j < s.d; ++j) x(j) = ux(rng);
            const double y = uy(rng);
            RowVec z(s.d);
            for (int j = 0; j < s.d; ++j) z(j) = uz(rng);
            const double fv = s.driver.f(0.25, x, y, z);
            const double bound = s.driver.l_bound + s.driver.beta * std::abs(y) +
                                 0.5 * s.driver.gamma * z.squaredNorm();
            CHECK(std::abs(fv) <= bound + 1e-10);
        }
    }
}

TEST_CASE("drift Jacobian matches central differences") {
    auto [model, driver] = preset_qg_2d(0.05, 0.08, 0.5, 0.5, 0.3, 1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(0.5, 2.0);
    const double eps = 1e-6;
    for (int k = 0; k < 100; ++k) {
        Vec x(2);
        x << ux(rng), ux(rng);
        const Mat j = model.db_dx(0.3, x);
        for (int p = 0; p < 2; ++p) {
            Vec xp = x, xm = x;
            xp(p) += eps;
            xm(p) -= eps;
            const Vec fd = (model.b(0.3, xp) - model.b(0.3, xm)) / (2.0 * eps);
            for (int q = 0; q < 2; ++q) {
                // Convention: [db_dx]_{p,q} = d b^q / d x^p.
                CHECK(j(p, q) == doctest::Approx(fd(q)).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("terminal presets") {
    const TerminalFunction sin2 = preset_terminal(TerminalKind::sin2);
    Vec x(2);
    x << 0.0, 0.0;
    CHECK(sin2.xi(x) == doctest::Approx(0.0));
    x << M_PI_2, M_PI_2;
    CHECK(sin2.xi(x) == doctest::Approx(6.0).epsilon(1e-14));
    REQUIRE(sin2.sup_bound.has_value());
    CHECK(*sin2.sup_bound == doctest::Approx(6.0));
    CHECK(sin2.smooth);

    const TerminalFunction capped = preset_terminal(TerminalKind::capped_spread);
    x << 2.0, 2.0;
    CHECK(capped.xi(x) == doctest::Approx(2.0));
    x << 0.5, 1.0;
    CHECK(capped.xi(x) == doctest::Approx(2.0));  // floor 1 + put payoff 1
    x << 4.0, 3.0;
    CHECK(capped.xi(x) == doctest::Approx(3.0));
    CHECK_FALSE(capped.smooth);

    TerminalParams p;
    p.strike = 95.0;
    const TerminalFunction call = preset_terminal(TerminalKind::call, p);
    CHECK(call.xi(Vec::Constant(1, 100.0)) == doctest::Approx(5.0));
    CHECK(call.xi(Vec::Constant(1, 90.0)) == doctest::Approx(0.0));

    p.strike1 = 95.0;
    p.strike2 = 105.0;
    p.weight = 2.0;
    const TerminalFunction spread = preset_terminal(TerminalKind::call_spread, p);
    CHECK(spread.xi(Vec::Constant(1, 100.0)) == doctest::Approx(5.0));
    CHECK(spread.xi(Vec::Constant(1, 110.0)) == doctest::Approx(15.0 - 2.0 * 5.0));

    CHECK_THROWS_AS(preset_terminal(TerminalKind::call), std::invalid_argument);
    CHECK_THROWS_AS(preset_terminal(TerminalKind::custom), std::invalid_argument);
    CHECK(terminal_kind_from_string("sin2") == TerminalKind::sin2);
    CHECK_THROWS_AS(terminal_kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("log-coordinate presets agree with the originals") {
    auto [model_x, driver_x] = preset_qg_2d(0.05, 0.05, 0.5, 0.5, 0.3, 2.0);
    auto [model_v, driver_v] = preset_qg_2d_log(0.05, 0.05, 0.5, 0.5, 0.3, 2.0);

    Vec x(2);
    x << 1.4, 0.8;
    const Vec v = x.array().log().matrix();

    // Log drift is the Ito-corrected constant; log diffusion is sigma / x.
    const Vec bv = model_v.b(0.0, v);
    CHECK(bv(0) == doctest::Approx(0.05 - 0.125).epsilon(1e-14));
    CHECK(bv(1) == doctest::Approx(0.05 - 0.125).epsilon(1e-14));
    const Mat sv = model_v.sigma(0.0, v);
    const Mat sx = model_x.sigma(0.0, x);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(sv(i, j) == doctest::Approx(sx(i, j) / x(i)).epsilon(1e-12));

    // The wrapped driver sees the same state through exp.
    RowVec z(2);
    z << 0.2, -0.1;
    CHECK(driver_v.f(0.0, v, 1.0, z) ==
          doctest::Approx(driver_x.f(0.0, x, 1.0, z)).epsilon(1e-12));

    const TerminalFunction plain = preset_terminal(TerminalKind::sin2);
    const TerminalFunction wrapped = log_wrap_terminal(plain);
    CHECK(wrapped.xi(v) == doctest::Approx(plain.xi(x)).epsilon(1e-13));
    REQUIRE(wrapped.sup_bound.has_value());
    CHECK(*wrapped.sup_bound == doctest::Approx(6.0));
}

TEST_CASE("preset validation") {
    CHECK_THROWS_AS(preset_qg_2d(0.0, 0.0, 0.5, 0.5, 1.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(preset_qg_2d(0.0, 0.0, -0.5, 0.5, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(preset_two_rate(0.05, 0.0, 0.01, 0.06), std::invalid_argument);
}
