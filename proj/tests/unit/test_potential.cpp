#include "attnflow/potential.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace attnflow;

TEST_CASE("interaction special values")
{
    for (const double beta : {1.0, 4.0, 64.0})
    {
        CHECK(interaction(0.0, beta) == 0.0);
        CHECK(std::abs(interaction(std::numbers::pi, beta)) < 1e-15);
        CHECK(interaction(std::numbers::pi / 2, beta) == doctest::Approx(std::exp(-beta)).epsilon(1e-14));
        CHECK(interaction_derivative(0.0, beta) == doctest::Approx(1.0));
        CHECK(interaction_derivative(std::numbers::pi, beta) == doctest::Approx(-std::exp(-2 * beta)).epsilon(1e-12));
    }
}

TEST_CASE("interaction is odd, derivative is even, both 2pi-periodic")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> x(-10.0, 10.0);
    for (int i = 0; i < 500; ++i)
    {
        const double v = x(rng);
        CHECK(std::abs(interaction(-v, 16.0) + interaction(v, 16.0)) <= 1e-15);
        CHECK(std::abs(interaction_derivative(-v, 16.0) - interaction_derivative(v, 16.0)) <= 1e-15);
        CHECK(interaction(v + 2 * std::numbers::pi, 4.0) == doctest::Approx(interaction(v, 4.0)).epsilon(1e-9));
    }
}

TEST_CASE("interaction does not overflow for large beta")
{
    for (const double x : {0.01, 1.0, 3.0})
    {
        CHECK(std::isfinite(interaction(x, 1000.0)));
        CHECK(std::isfinite(interaction_derivative(x, 1000.0)));
    }
}

TEST_CASE("critical angle: closed form, bracket and bisection")
{
    for (const double beta : {1.0, 10.0, 64.0})
    {
        CHECK(std::abs(std::cos(critical_angle(beta)) - (-1 + std::sqrt(4 * beta * beta + 1)) / (2 * beta)) <= 1e-12);
    }
    double a = 0.2;
    double b = 0.4;
    while (b - a > 1e-14)
    {
        const double m = 0.5 * (a + b);
        (interaction_derivative(m, 10.0) > 0 ? a : b) = m;
    }
    CHECK(std::abs(critical_angle(10.0) - 0.5 * (a + b)) < 1e-10);
    CHECK(std::abs(interaction_derivative(critical_angle(10.0), 10.0)) < 1e-14);
}

TEST_CASE("check_regime examples")
{
    const RegimeCheck remark = check_regime({700.0, 6.5, 0.1, 14.0});
    CHECK(remark.ok);
    CHECK(remark.far_interaction < remark.near_interaction);
    CHECK(remark.far_derivative < remark.near_derivative);

    const RegimeCheck narrow = check_regime({10.0, 2.0, 0.1, 14.0});
    CHECK_FALSE(narrow.ok);
    CHECK_FALSE(narrow.separation_ok);
    CHECK(narrow.diagnostic.find("2.2") != std::string::npos);

    // N only enters through N h and N g; splitting it between tokens and
    // frozen weights changes nothing
    const RegimeCheck tokens = check_regime({20.0 + 3.0, 6.5, 0.1, 14.0});
    const RegimeCheck weights = check_regime({20.0 + 1.0 + 1.0 + 1.0, 6.5, 0.1, 14.0});
    CHECK(tokens.far_interaction == weights.far_interaction);
    CHECK(tokens.ok == weights.ok);
}

TEST_CASE("metastability horizon")
{
    const double b = 1.0 / 8.0;
    const double T = metastability_horizon(1, 4.0, 0.5, 64.0);
    CHECK(T == doctest::Approx(0.5 * 4.0 * b / interaction(0.5, 64.0)).epsilon(1e-14));
    CHECK(metastability_horizon(2, 4.0, 0.5, 64.0) == T / 2.0);
    CHECK(metastability_horizon(6, 4.0, 0.5, 64.0) == doctest::Approx(T / 6.0).epsilon(1e-15));
    for (const double eps : {0.05, 0.1, 0.25, 0.5, 1.0})
    {
        for (const long s : {1L, 3L, 17L})
        {
            const double sufficient = metastability_horizon_sufficient(s, 4.0, eps, 64.0);
            CHECK(sufficient * s * interaction(4.0 * b, 64.0) < eps * 4.0 * b);
            CHECK(sufficient <= metastability_horizon(s, 4.0, eps, 64.0));
        }
    }
    // separation below the critical angle
    CHECK_THROWS_AS(metastability_horizon(1, 0.5, 0.5, 64.0), std::domain_error);
}

TEST_CASE("c > 1 suffices for the separation to exceed the critical angle when beta > 1")
{
    for (const double beta : {1.5, 4.0, 64.0, 1024.0})
    {
        CHECK(1.0 / std::sqrt(beta) > critical_angle(beta));
    }
}
