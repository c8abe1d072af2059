#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qdsf/coupling.hpp"

using namespace qdsf;
constexpr double pi = std::numbers::pi;

TEST_CASE("eval_f closed-form examples") {
    CouplingSpec<double> ohmic(pi / 2, 1.0, 1.0);
    CHECK(eval_f(ohmic, 0.0) == 0.0);
    CHECK(eval_f(ohmic, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    CouplingSpec<double> super(2 * pi, 3.0, 2.0);
    CHECK(eval_f(super, 3.0) == doctest::Approx(6 * std::exp(-1.0)).epsilon(1e-14));
    CHECK(eval_f(super, 0.0) == 0.0);

    CHECK_THROWS_AS(eval_f(ohmic, -0.5), std::domain_error);
}

TEST_CASE("eval_v examples and the w -> 0 limit") {
    CouplingSpec<double> spec(pi / 2, 1.0, 1.0);
    Mode<double> unit = make_mode(spec, 0.0, 1.0);
    CHECK(eval_v(spec, unit, 1.0) == doctest::Approx(std::exp(-1.0) / 2).epsilon(1e-14));
    CHECK(eval_v(spec, unit, 0.0) == 0.0);
    CHECK(eval_v(spec, unit, 1e-300) >= 0.0);  // never divides by zero

    Mode<double> m34 = make_mode(spec, 3.0, 4.0);
    CHECK(m34.omega_k == doctest::Approx(5.0));
    CHECK(eval_v(spec, m34, 1.0) ==
          doctest::Approx(std::exp(-1.0) / (2 * std::sqrt(5.0))).epsilon(1e-14));
    CHECK_THROWS_AS(eval_v(spec, unit, -1.0), std::domain_error);
}

TEST_CASE("renormalized frequency: closed forms and quadrature cross-check") {
    SUBCASE("ohmic: I_f = gamma*lambda/pi") {
        CouplingSpec<double> spec(pi, 1.0, 1.0);
        CHECK(renormalized_frequency_sq(spec, 0.0, 2.0) == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("zero coupling is exact") {
        CouplingSpec<double> spec(0.0, 1.0, 1.0);
        CHECK(renormalized_frequency_sq(spec, 0.0, 2.0) == 4.0);
        CHECK(renormalized_frequency_sq(spec, 2.0, 1.0) == 5.0);
    }
    SUBCASE("s = 2 gamma-integral") {
        CouplingSpec<double> spec(pi, 1.0, 2.0);
        CHECK(renormalized_frequency_sq(spec, 0.0, 2.0) == doctest::Approx(3.5).epsilon(1e-12));
    }
    SUBCASE("closed form matches quadrature across the family") {
        for (double s : {1.0, 1.5, 2.0, 3.0})
            for (double lam : {0.5, 2.0, 10.0}) {
                CouplingSpec<double> spec(0.3, lam, s);
                CAPTURE(s);
                CAPTURE(lam);
                CHECK(coupling_self_energy_integral(spec) ==
                      doctest::Approx(coupling_self_energy_by_quadrature(spec)).epsilon(1e-9));
            }
    }
}

TEST_CASE("check_positivity examples") {
    CHECK(check_positivity(CouplingSpec<double>(pi, 1.0, 1.0), 0.0, 2.0).pass);
    CHECK(check_positivity(CouplingSpec<double>(pi, 1.0, 1.0), 0.0, 2.0).margin ==
          doctest::Approx(3.0));
    auto fail = check_positivity(CouplingSpec<double>(5 * pi, 1.0, 1.0), 0.0, 2.0);
    CHECK_FALSE(fail.pass);
    CHECK(fail.margin == doctest::Approx(-1.0));
    CHECK(check_positivity(CouplingSpec<double>(0.0, 1.0, 1.0), 3.0, 0.0).pass);
}

TEST_CASE("positivity is monotone in gamma") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int i = 0; i < 50; ++i) {
        const double lam = u(rng), s = 1.0 + u(rng) / 3, m = u(rng), k = u(rng);
        const double g1 = u(rng), g2 = g1 * (1 + u(rng));
        CouplingSpec<double> weak(g1, lam, s), strong(g2, lam, s);
        if (check_positivity(strong, k, m).pass) CHECK(check_positivity(weak, k, m).pass);
        if (!check_positivity(weak, k, m).pass) CHECK_FALSE(check_positivity(strong, k, m).pass);
    }
}

TEST_CASE("algebraic identity: v^2 * 4 w omega_k = f^2 pointwise") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.2, 4.0);
    for (int i = 0; i < 30; ++i) {
        const double lam = u(rng), s = 1.0 + u(rng) / 2, m = u(rng), k = u(rng);
        const double gmax = critical_gamma(CouplingSpec<double>(1.0, lam, s), m * m + k * k);
        CouplingSpec<double> spec(0.2 * gmax, lam, s);
        Mode<double> mode = make_mode(spec, m, k);
        for (double w : {1e-6, 0.1, 1.0, 3.0, 17.0}) {
            const double v = eval_v(spec, mode, w);
            const double f = eval_f(spec, w);
            CHECK(v * v * 4 * w * mode.omega_k == doctest::Approx(f * f).epsilon(5e-14));
            CHECK(eval_v_sq(spec, mode, w) == doctest::Approx(v * v).epsilon(5e-14));
        }
    }
}

TEST_CASE("construction contracts") {
    CHECK_THROWS_AS(CouplingSpec<double>(-1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(CouplingSpec<double>(1.0, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(CouplingSpec<double>(1.0, 1.0, 0.5), std::domain_error);  // sub-ohmic rejected

    CouplingSpec<double> strong(5 * pi, 1.0, 1.0);
    CHECK_THROWS_AS(make_mode(strong, 2.0, 0.0), CouplingValidityError);  // FAIL verdict rejected
    try {
        make_mode(strong, 2.0, 0.0);
    } catch (const CouplingValidityError& e) {
        CHECK(e.margin == doctest::Approx(-1.0));
    }
    CHECK_THROWS_AS(make_mode(CouplingSpec<double>(0.1, 1.0, 1.0), 0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(make_mode(CouplingSpec<double>(0.1, 1.0, 1.0), -1.0, 1.0), std::domain_error);

    Mode<double> mode = make_mode(CouplingSpec<double>(0.1, 1.0, 1.0), 1.0, 2.0);
    CHECK(mode.omega_k >= mode.mass);
    CHECK(mode.omega_k >= mode.k);
    CHECK(mode.omega_renorm_sq > 0);
}

TEST_CASE("critical gamma saturates the bound") {
    for (double lam : {0.5, 2.0, 10.0})
        for (double s : {1.0, 2.0}) {
            CouplingSpec<double> probe(1.0, lam, s);
            const double wk_sq = 4.0;
            const double gc = critical_gamma(probe, wk_sq);
            CouplingSpec<double> at(gc, lam, s);
            CHECK(std::abs(renormalized_frequency_sq(at, 0.0, 2.0)) < 1e-10);
            CHECK(check_positivity(CouplingSpec<double>(0.999 * gc, lam, s), 0.0, 2.0).pass);
            CHECK_FALSE(check_positivity(CouplingSpec<double>(1.001 * gc, lam, s), 0.0, 2.0).pass);
        }
}
