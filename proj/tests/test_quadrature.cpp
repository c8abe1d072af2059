#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qdsf/quadrature.hpp"

using namespace qdsf;
constexpr double pi = std::numbers::pi;

namespace {

struct BatteryCase {
    const char* name;
    std::function<double(double)> g;
    double truth;
    double scale;
};

// Exponential integral Ei(x) for the PV closed forms, by series; independent
// of any library special function.
double expint_ei(double x) {
    REQUIRE(x > 0);
    double sum = std::numbers::egamma + std::log(x);
    double term = 1.0;
    for (int n = 1; n < 200; ++n) {
        term *= x / n;
        sum += term / n;
        if (std::abs(term / n) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

}  // namespace

TEST_CASE("known-antiderivative battery: honesty and accuracy") {
    std::vector<BatteryCase> battery = {
        {"exp(-w)", [](double w) { return std::exp(-w); }, 1.0, 1.0},
        {"w exp(-2w)", [](double w) { return w * std::exp(-2 * w); }, 0.25, 0.5},
        {"w^2 exp(-w)", [](double w) { return w * w * std::exp(-w); }, 2.0, 1.0},
        {"w^3 exp(-w)", [](double w) { return w * w * w * std::exp(-w); }, 6.0, 1.0},
        {"gauss", [](double w) { return std::exp(-w * w / 2); }, std::sqrt(pi / 2), 1.0},
        {"lorentz", [](double w) { return 1.0 / (1 + w * w); }, pi / 2, 1.0},
        {"(1+w)^-3", [](double w) { return std::pow(1 + w, -3.0); }, 0.5, 1.0},
        {"exp(-w) cos w", [](double w) { return std::exp(-w) * std::cos(w); }, 0.5, 1.0},
    };
    quad::Options<double> opt;
    opt.tol_rel = 1e-12;
    for (const auto& c : battery) {
        CAPTURE(c.name);
        opt.scale = c.scale;
        auto r = quad::integrate_semi_infinite<double>(c.g, opt);
        const double err = std::abs(r.value - c.truth);
        CHECK(err <= 10 * r.error_estimate);
        CHECK(err <= 1e-8 * std::abs(c.truth));
        CHECK(r.evaluations > 0);
    }
}

TEST_CASE("PV cases with exponential-integral closed forms") {
    quad::Options<double> opt;
    opt.tol_rel = 1e-12;

    SUBCASE("g = exp(-w'), pole 1") {
        auto r = quad::integrate_pv<double>(1.0, [](double w) { return std::exp(-w); }, opt);
        const double truth = std::exp(-1.0) * expint_ei(1.0);  // 0.697175...
        CHECK(std::abs(r.value - truth) <= 10 * r.error_estimate);
        CHECK(std::abs(r.value - truth) <= 1e-8 * std::abs(truth));
        CHECK(r.value == doctest::Approx(0.697175).epsilon(1e-5));
    }
    SUBCASE("g = w' exp(-w'), pole 1") {
        auto r = quad::integrate_pv<double>(1.0, [](double w) { return w * std::exp(-w); }, opt);
        const double truth = std::exp(-1.0) * expint_ei(1.0) - 1.0;  // -0.302825...
        CHECK(std::abs(r.value - truth) <= 10 * r.error_estimate);
        CHECK(std::abs(r.value - truth) <= 1e-8 * std::abs(truth));
    }
    SUBCASE("g = exp(-2w'), pole 0.75") {
        auto r = quad::integrate_pv<double>(0.75, [](double w) { return std::exp(-2 * w); }, opt);
        const double truth = std::exp(-1.5) * expint_ei(1.5);
        CHECK(std::abs(r.value - truth) <= 10 * r.error_estimate);
        CHECK(std::abs(r.value - truth) <= 1e-8 * std::abs(truth));
    }
}

TEST_CASE("derived value from independent high-resolution trapezoid oracle") {
    auto g = [](double w) { return w * w * std::exp(-w) / (1 + w * w); };
    // brute-force oracle: 1e7-point trapezoid on [0, 60]
    const long n = 10'000'000;
    const double hi = 60.0;
    long double acc = 0;
    for (long i = 1; i < n; ++i) {
        const double w = hi * double(i) / double(n);
        acc += g(w);
    }
    const double oracle = double((acc + g(hi) / 2) * (long double)(hi / n));
    auto r = quad::integrate_semi_infinite<double>(g, {});
    CHECK(std::abs(r.value - oracle) <= 1e-8 * oracle);
}

TEST_CASE("linearity within combined error estimates") {
    auto g1 = [](double w) { return std::exp(-w); };
    auto g2 = [](double w) { return w * std::exp(-w * w); };
    const double a = 1.75, b = -0.4;
    quad::Options<double> opt;
    auto r1 = quad::integrate_semi_infinite<double>(g1, opt);
    auto r2 = quad::integrate_semi_infinite<double>(g2, opt);
    auto rs = quad::integrate_semi_infinite<double>(
        [&](double w) { return a * g1(w) + b * g2(w); }, opt);
    CHECK(std::abs(rs.value - (a * r1.value + b * r2.value)) <=
          10 * (rs.error_estimate + std::abs(a) * r1.error_estimate +
                std::abs(b) * r2.error_estimate) +
              1e-14);
}

TEST_CASE("PV antisymmetry: even g about the pole cancels on a symmetric domain") {
    // g supported on [0, 2*pole] and even about the pole: PV integral = 0.
    const double pole = 1.0;
    auto g = [&](double w) {
        const double d = w - pole;
        return w <= 2 * pole ? std::exp(-d * d) : 0.0;
    };
    auto r = quad::integrate_pv<double>(pole, g, {});
    CHECK(std::abs(r.value) <= 1e-8);
}

TEST_CASE("oscillatory Laplace transforms and t=0 consistency") {
    auto g = [](double w) { return std::exp(-w); };
    quad::Options<double> opt;
    opt.tol_rel = 1e-8;
    for (double t : {0.0, 0.5, 3.0, 20.0}) {
        auto rc = quad::integrate_oscillatory<double>(g, t, quad::Trig::cos, opt);
        auto rs = quad::integrate_oscillatory<double>(g, t, quad::Trig::sin, opt);
        CHECK(rc.value == doctest::Approx(1.0 / (1 + t * t)).epsilon(1e-7));
        CHECK(rs.value == doctest::Approx(t / (1 + t * t)).epsilon(2e-7));
    }
    auto rc0 = quad::integrate_oscillatory<double>(g, 0.0, quad::Trig::cos, opt);
    auto rsemi = quad::integrate_semi_infinite<double>(g, opt);
    CHECK(rc0.value == doctest::Approx(rsemi.value).epsilon(1e-12));

    // w exp(-w) cos(wt) -> (1-t^2)/(1+t^2)^2
    auto g2 = [](double w) { return w * std::exp(-w); };
    const double t = 3.0;
    auto r2 = quad::integrate_oscillatory<double>(g2, t, quad::Trig::cos, opt);
    CHECK(r2.value == doctest::Approx((1 - t * t) / ((1 + t * t) * (1 + t * t))).epsilon(1e-6));

    // gaussian cos transform
    auto g3 = [](double w) { return std::exp(-w * w); };
    auto r3 = quad::integrate_oscillatory<double>(g3, 2.0, quad::Trig::cos, opt);
    CHECK(r3.value == doctest::Approx(std::sqrt(pi) / 2 * std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("domain and budget errors") {
    CHECK_THROWS_AS(quad::integrate_pv<double>(0.0, [](double) { return 1.0; }, {}),
                    std::domain_error);
    CHECK_THROWS_AS(quad::integrate_pv<double>(-1.0, [](double) { return 1.0; }, {}),
                    std::domain_error);
    CHECK_THROWS_AS(quad::integrate_pv<double>(
                        1.0, [](double w) { return 1.0 / (w - 1.0); }, {}),
                    std::domain_error);
    CHECK_THROWS_AS(
        quad::integrate_oscillatory<double>([](double w) { return std::exp(-w); }, -1.0,
                                            quad::Trig::cos, {}),
        std::domain_error);

    quad::Options<double> tiny;
    tiny.tol_rel = 1e-14;
    tiny.max_evaluations = 200;
    bool carried = false;
    try {
        quad::integrate_semi_infinite<double>(
            [](double w) { return std::cos(50 * w) * std::cos(51 * w) / (1 + w * w); }, tiny);
    } catch (const quad::BudgetExceeded& e) {
        carried = std::isfinite(e.best_value) && e.evaluations >= 200;
    }
    CHECK(carried);

    quad::Options<double> osc;
    osc.max_initial_panels = 100;
    CHECK_THROWS_AS(quad::integrate_oscillatory<double>([](double w) { return std::exp(-w); },
                                                        1e6, quad::Trig::cos, osc),
                    quad::OscillatoryRangeError);
}

TEST_CASE("breakpoints make narrow features visible") {
    // spike of width 1e-5 at w = 2; without a seed the initial panels miss it
    auto g = [](double w) {
        const double d = (w - 2.0) / 1e-5;
        return std::exp(-w) + 5.0 * std::exp(-d * d);
    };
    quad::Options<double> opt;
    opt.breakpoints = {2.0 - 3e-5, 2.0, 2.0 + 3e-5};
    auto r = quad::integrate_semi_infinite<double>(g, opt);
    const double spike_mass = 5.0 * std::sqrt(pi) * 1e-5;
    CHECK(r.value == doctest::Approx(1.0 + spike_mass).epsilon(1e-9));
}

TEST_CASE("templated on scalar: long double battery spot check") {
    quad::Options<long double> opt;
    opt.tol_rel = 1e-14L;
    auto r = quad::integrate_semi_infinite<long double>(
        [](long double w) { return std::exp(-w); }, opt);
    CHECK(std::abs(double(r.value - 1.0L)) < 1e-12);
}

TEST_CASE("property: random positive exponential-polynomial integrands") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> coef(0.1, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = coef(rng), b = coef(rng), c = coef(rng);
        // g = (a + b w + c w^2) exp(-w): integral = a + b + 2c
        auto g = [&](double w) { return (a + b * w + c * w * w) * std::exp(-w); };
        auto r = quad::integrate_semi_infinite<double>(g, {});
        const double truth = a + b + 2 * c;
        CAPTURE(trial);
        CHECK(std::abs(r.value - truth) <= 1e-9 * truth);
        CHECK(std::abs(r.value - truth) <= 10 * r.error_estimate);
    }
}
