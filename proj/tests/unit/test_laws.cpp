#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "pfdkit/laws.hpp"
#include "pfdkit/petri.hpp"  // SplitMix64

using namespace pfdkit;
using Catch::Approx;

TEST_CASE("q_glm starts at gamma and relaxes to the steady state") {
    const Glm law{0.0, 1.35e-6, 0.0417};
    CHECK(q_glm(law, 0.0) == 0.0);
    CHECK(q_glm(Glm{0.3, 1e-4, 1e-2}, 0.0) == Approx(0.3));
    CHECK(q_glm(law, 1e7) == Approx(3.2373e-5).epsilon(1e-4));
    CHECK(q_glm(law, 1e7) == Approx(law.lambda / (law.lambda + law.mu)).epsilon(1e-12));
}

TEST_CASE("q_glm matches a fine-step ODE oracle") {
    const Glm law{0.0, 1.35e-6, 0.0417};
    for (double t : {10.0, 50.0, 200.0, 1000.0})
        CHECK(q_glm(law, t) == Approx(oracles::glm_ode(law, t)).margin(1e-10));
    const Glm started{0.2, 2e-3, 5e-2};
    for (double t : {5.0, 40.0, 300.0})
        CHECK(q_glm(started, t) == Approx(oracles::glm_ode(started, t, 0.005)).margin(1e-10));
}

TEST_CASE("q_glm without repair reduces to the exponential law") {
    const Glm law{0.0, 3e-4, 0.0};
    for (double t : {0.0, 100.0, 5000.0})
        CHECK(q_glm(law, t) == Approx(1.0 - std::exp(-law.lambda * t)).margin(1e-15));
    CHECK(q_glm(Glm{0.4, 0.0, 0.0}, 123.0) == Approx(0.4));  // frozen component
}

TEST_CASE("q_exponential basics") {
    CHECK(q_exponential(Exponential{1.35e-7}, 0.0) == 0.0);
    CHECK(q_exponential(Exponential{0.0}, 1e6) == 0.0);
    const long double precise = -std::expm1l(-1.35e-7L * 70128.0L);
    CHECK(q_exponential(Exponential{1.35e-7}, 70128.0) ==
          Approx(static_cast<double>(precise)).epsilon(1e-14));
}

TEST_CASE("q_periodic_test early behaviour") {
    const PeriodicTest law{1.215e-6, 0.0417, 4383.0, 4383.0};
    CHECK(q_periodic_test(law, 0.0) == 0.0);
    CHECK(q_periodic_test(PeriodicTest{0.0, 0.0417, 4383.0, 4383.0}, 9999.0) == 0.0);
    // before the first test there is no repair path
    for (double t : {100.0, 2000.0, 4382.9})
        CHECK(q_periodic_test(law, t) ==
              Approx(1.0 - std::exp(-law.lambda * t)).margin(1e-14));
}

TEST_CASE("q_periodic_test matches a fixed-step ODE oracle") {
    const PeriodicTest law{1.215e-6, 0.0417, 4383.0, 4383.0};
    for (double t : {500.0, 4000.0, 4383.0, 4400.0, 4500.0, 8000.0, 8766.0, 8900.0,
                     12000.0, 13149.0})
        CHECK(q_periodic_test(law, t) ==
              Approx(oracles::periodic_test_ode(law, t)).margin(1e-10));
    // staggered first test
    const PeriodicTest staggered{5e-5, 0.01, 1000.0, 250.0};
    for (double t : {100.0, 250.0, 300.0, 1249.0, 1251.0, 2600.0})
        CHECK(q_periodic_test(staggered, t) ==
              Approx(oracles::periodic_test_ode(staggered, t, 0.005)).margin(1e-10));
}

TEST_CASE("q_periodic_test is continuous at test instants") {
    const PeriodicTest law{1.215e-6, 0.0417, 4383.0, 4383.0};
    for (int k = 1; k <= 4; ++k) {
        const double t = 4383.0 * k;
        const double before = q_periodic_test(law, t - 1e-7);
        const double at = q_periodic_test(law, t);
        const double after = q_periodic_test(law, t + 1e-7);
        CHECK(std::abs(at - before) < 1e-8);
        CHECK(std::abs(after - at) < 1e-8);
    }
}

TEST_CASE("law evaluations stay inside [0,1]") {
    SplitMix64 rng{4242};
    for (int trial = 0; trial < 300; ++trial) {
        const double lambda = std::pow(10.0, -7.0 + 5.0 * rng.uniform01());
        const double mu = std::pow(10.0, -3.0 + 3.0 * rng.uniform01());
        const double tau = 10.0 + 10000.0 * rng.uniform01();
        const double theta = tau * rng.uniform01();
        const double t = 1e5 * rng.uniform01();
        for (double q : {q_glm(Glm{rng.uniform01(), lambda, mu}, t),
                         q_exponential(Exponential{lambda}, t),
                         q_periodic_test(PeriodicTest{lambda, mu, tau, theta}, t)}) {
            CHECK(q >= 0.0);
            CHECK(q <= 1.0);
        }
    }
}

TEST_CASE("PeriodicTestCurve agrees with the stateless evaluation") {
    const PeriodicTest law{1.215e-6, 0.0417, 4383.0, 4383.0};
    const PeriodicTestCurve curve(law);
    SplitMix64 rng{99};
    for (int trial = 0; trial < 100; ++trial) {
        const double t = 70128.0 * rng.uniform01();
        CHECK(curve(t) == Approx(q_periodic_test(law, t)).margin(1e-15));
    }
    CHECK(curve(0.0) == 0.0);
}

TEST_CASE("unavailability dispatches over the law variant") {
    CHECK(unavailability(Law{Exponential{1e-4}}, 100.0) ==
          Approx(q_exponential(Exponential{1e-4}, 100.0)));
    CHECK(unavailability(Law{Glm{0.0, 1e-4, 1e-2}}, 100.0) ==
          Approx(q_glm(Glm{0.0, 1e-4, 1e-2}, 100.0)));
    CHECK(unavailability(Law{PeriodicTest{1e-4, 1e-2, 500.0, 500.0}}, 800.0) ==
          Approx(q_periodic_test(PeriodicTest{1e-4, 1e-2, 500.0, 500.0}, 800.0)));
}
