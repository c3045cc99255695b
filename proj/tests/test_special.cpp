#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "omfp/special.hpp"
#include "oracles.hpp"

using namespace omfp;

TEST_CASE("complete elliptic integral, trivial values") {
    CHECK(complete_elliptic_k(0.0) == Catch::Approx(pi / 2.0).epsilon(1e-14));
    CHECK(complete_elliptic_k(-1.0) == Catch::Approx(1.3110287771460599).epsilon(1e-12));
    CHECK_THROWS_AS(complete_elliptic_k(1.0), std::domain_error);
    CHECK_THROWS_AS(complete_elliptic_k(2.0), std::domain_error);
}

TEST_CASE("complete elliptic integral vs direct quadrature") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> par(-5.0, 0.9);
    for (int trial = 0; trial < 50; ++trial) {
        const double m = par(rng);
        const double direct = oracles::tanh_sinh(
            [m](double th) {
                const double s = std::sin(th);
                return 1.0 / std::sqrt(1.0 - m * s * s);
            },
            0.0, pi / 2.0);
        CHECK(complete_elliptic_k(m) == Catch::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("gamma function sanity") {
    CHECK(gamma_fn(0.5) == Catch::Approx(std::sqrt(pi)).epsilon(1e-12));
    CHECK(gamma_fn(1.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(gamma_fn(5.0) == Catch::Approx(24.0).epsilon(1e-13));
    // reflection pair used by the quartic-well variance
    CHECK(gamma_fn(0.25) * gamma_fn(0.75) == Catch::Approx(pi / std::sin(pi / 4.0)).epsilon(1e-12));
}

TEST_CASE("coth is overflow-safe and accurate") {
    CHECK(coth(0.05) == Catch::Approx(1.0 / std::tanh(0.05)).epsilon(1e-14));
    CHECK(coth(500.0) == 1.0);
    CHECK(coth(1e-8) == Catch::Approx(1e8).epsilon(1e-7));
    CHECK_THROWS_AS(coth(0.0), std::domain_error);
}
