#include "attnflow/potential.hpp"
#include "attnflow/renyi.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace attnflow;

namespace
{
    std::vector<Eigen::Index> brute_renyi(const MatrixXd& p, double delta, Metric m)
    {
        std::vector<Eigen::Index> kept;
        for (Eigen::Index k = 0; k < p.cols(); ++k)
        {
            bool ok = true;
            for (const auto j : kept)
            {
                ok = ok && sphere_distance(p.col(k), p.col(j), m) > delta;
            }
            if (ok)
            {
                kept.push_back(k);
            }
        }
        return kept;
    }

    std::vector<Eigen::Index> brute_strong(const MatrixXd& p, double delta, Metric m)
    {
        std::vector<Eigen::Index> kept;
        for (Eigen::Index k = 0; k < p.cols(); ++k)
        {
            bool ok = true;
            for (Eigen::Index j = 0; j < k; ++j)
            {
                ok = ok && sphere_distance(p.col(k), p.col(j), m) > delta;
            }
            if (ok)
            {
                kept.push_back(k);
            }
        }
        return kept;
    }

    MatrixXd on_circle(std::initializer_list<double> angles)
    {
        MatrixXd p(2, static_cast<Eigen::Index>(angles.size()));
        Eigen::Index k = 0;
        for (const double a : angles)
        {
            p.col(k++) = circle_point(a);
        }
        return p;
    }
}

TEST_CASE("hand-enumerated sequence on the circle")
{
    const double delta = 0.2;
    const MatrixXd p = on_circle({0.0, delta / 2, 2 * delta});
    CHECK(renyi_centers(p, delta) == std::vector<Eigen::Index>{0, 2});
    CHECK(strong_renyi_centers(p, delta) == std::vector<Eigen::Index>{0, 2});

    const MatrixXd q = on_circle({0.0, 1.2 * delta, 0.6 * delta});
    CHECK(renyi_centers(q, delta) == std::vector<Eigen::Index>{0, 1});
    CHECK(strong_renyi_centers(q, delta) == std::vector<Eigen::Index>{0, 1});

    const MatrixXd r = on_circle({0.0, 0.5 * delta, 1.3 * delta});
    CHECK(renyi_centers(r, delta) == std::vector<Eigen::Index>{0, 2});
    CHECK(strong_renyi_centers(r, delta) == std::vector<Eigen::Index>{0});
}

TEST_CASE("well separated points are all centers")
{
    const MatrixXd p = on_circle({0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK(renyi_centers(p, 0.9).size() == 6);
    CHECK(strong_renyi_centers(p, 0.9).size() == 6);
}

TEST_CASE("boundary: distance exactly delta is rejected")
{
    const MatrixXd p = on_circle({0.0, 0.5});
    const double d = geodesic_distance(p.col(0), p.col(1));
    CHECK(renyi_centers(p, d).size() == 1);
    CHECK(renyi_centers(p, std::nextafter(d, 0.0)).size() == 2);
}

TEST_CASE("greedy scans match brute force on random instances")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial)
    {
        const int d = 2 + trial % 4;
        const int n = 20 + static_cast<int>(unit(rng) * 200);
        const double delta = 0.02 + unit(rng) * 1.5;
        const Metric m = trial % 3 == 0 ? Metric::Euclidean : Metric::Geodesic;
        const MatrixXd p = sample_uniform_points(static_cast<std::uint64_t>(trial) + 1, d, n);
        const auto renyi = renyi_centers(p, delta, m);
        const auto strong = strong_renyi_centers(p, delta, m);
        CHECK(renyi == brute_renyi(p, delta, m));
        CHECK(strong == brute_strong(p, delta, m));
        CHECK(std::includes(renyi.begin(), renyi.end(), strong.begin(), strong.end()));
        REQUIRE(!renyi.empty());
        CHECK(renyi.front() == 0);
        CHECK(strong.front() == 0);
        for (std::size_t i = 0; i < renyi.size(); ++i)
        {
            for (std::size_t j = i + 1; j < renyi.size(); ++j)
            {
                CHECK(sphere_distance(p.col(renyi[i]), p.col(renyi[j]), m) > delta);
            }
        }
    }
}

TEST_CASE("larger delta never yields more strong centers")
{
    const MatrixXd p = sample_uniform_points(5, 3, 3000);
    std::size_t previous = p.cols() + 1;
    for (double delta = 0.01; delta < 3.0; delta *= 1.3)
    {
        const std::size_t count = strong_renyi_centers(p, delta).size();
        CHECK(count <= previous);
        previous = count;
    }
}

TEST_CASE("scans reject non-positive delta")
{
    CHECK_THROWS_AS(renyi_centers(sample_uniform_points(1, 2, 4), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(strong_renyi_centers(sample_uniform_points(1, 2, 4), -1.0), std::invalid_argument);
}

TEST_CASE("metric names and distances")
{
    CHECK(metric_from_string("geodesic") == Metric::Geodesic);
    CHECK(metric_from_string(to_string(Metric::Euclidean)) == Metric::Euclidean);
    CHECK_THROWS_AS(metric_from_string("manhattan"), std::invalid_argument);
    const VectorXd a = circle_point(0.0);
    const VectorXd b = circle_point(1.0);
    CHECK(sphere_distance(a, b, Metric::Geodesic) == doctest::Approx(1.0));
    CHECK(sphere_distance(a, b, Metric::Euclidean) == doctest::Approx(2 * std::sin(0.5)));
}

TEST_CASE("expected strong count")
{
    CHECK(expected_strong_count(2, std::numbers::pi / 32) == doctest::Approx(32.0));
    // inverse normalized cap area on S^2 is 1 / sin^2(delta / 2)
    CHECK(expected_strong_count(3, std::numbers::pi / 2) == doctest::Approx(2.0));
    for (const double delta : {0.1, 0.7, 2.0})
    {
        CHECK(cap_measure(3, delta) == doctest::Approx((1 - std::cos(delta)) / 2).epsilon(1e-12));
        CHECK(cap_measure(4, delta)
              == doctest::Approx((delta - std::sin(delta) * std::cos(delta)) / std::numbers::pi).epsilon(1e-10));
        // caps narrower than a hemisphere shrink with the dimension
        CHECK((cap_measure(6, delta) < cap_measure(5, delta)) == (delta < std::numbers::pi / 2));
    }
    CHECK_THROWS_AS(expected_strong_count(2, std::numbers::pi), std::domain_error);
    CHECK_THROWS_AS(expected_strong_count(3, 0.0), std::domain_error);
}

TEST_CASE("Monte Carlo strong count on the circle")
{
    const double delta = std::numbers::pi / 32;
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        total += static_cast<double>(strong_renyi_centers(sample_uniform_points(seed, 2, 100000), delta).size());
    }
    CHECK(total / 20.0 == doctest::Approx(32.0).epsilon(0.1));
}

TEST_CASE("horizons")
{
    RenyiReport report = renyi_report(sample_uniform_points(3, 2, 200), 0.5);
    CHECK(report.delta == 0.5);
    attach_horizons(report, 4.0, 0.5, 64.0);
    REQUIRE(report.horizons.size() == report.strong_indices.size());
    for (const auto& h : report.horizons)
    {
        CHECK(h.horizon == metastability_horizon(static_cast<long>(h.index) + 1, 4.0, 0.5, 64.0));
        CHECK(h.sufficient <= h.horizon);
    }
    attach_horizons(report, 0.5, 0.5, 64.0);
    CHECK(report.horizons.empty());
}

namespace
{
    Trajectory planar_run(const VectorXd& angles, double beta, double t_end)
    {
        IntegratorConfig c;
        c.dt = 0.1;
        c.t_end = t_end;
        c.record_every = 5;
        return integrate(SystemParams::identity(2, beta, DynamicsKind::Causal2d), ParticleState::from_angles(angles), c);
    }
}

TEST_CASE("metastability: single token")
{
    const VectorXd one = (VectorXd(1) << 0.7).finished();
    const Trajectory tr = planar_run(one, 64.0, 1400.0);
    const RenyiReport report = renyi_report(tr.initial().points, 0.5);
    const MetastabilityResult r = verify_metastability(tr, report, 4.0, 0.5, 64.0);
    REQUIRE(r.centers.size() == 1);
    CHECK(r.centers[0].checked);
    CHECK(r.centers[0].max_displacement == 0.0);
    CHECK(r.centers[0].passed);
    CHECK_FALSE(r.partial);
    CHECK(r.all_passed());
}

TEST_CASE("metastability: the bound is specific to strong centers")
{
    // token 2 starts 0.3 from token 1, inside delta: not a center
    const VectorXd angles = (VectorXd(2) << 0.0, 0.3).finished();
    const double beta = 64.0;
    const double T = metastability_horizon(2, 4.0, 0.5, beta);
    const Trajectory tr = planar_run(angles, beta, T);
    const RenyiReport report = renyi_report(tr.initial().points, 0.5);
    CHECK(report.strong_indices == std::vector<Eigen::Index>{0});
    const MetastabilityResult r = verify_metastability(tr, report, 4.0, 0.5, beta);
    CHECK(r.centers.size() == 1);
    CHECK(r.all_passed());

    double moved = 0.0;
    for (const auto& s : tr.snapshots)
    {
        moved = std::max(moved, (s.points.col(1) - tr.initial().points.col(1)).norm());
    }
    CHECK(moved > 0.5 * 4.0 / std::sqrt(beta));
}

TEST_CASE("metastability: skipped, partial and rejected inputs")
{
    // token 2 is a strong center for delta = 0.5 but too close for c = 4, eps = 0.5
    const VectorXd angles = (VectorXd(2) << 0.0, 0.8).finished();
    const Trajectory short_run = planar_run(angles, 64.0, 10.0);
    const RenyiReport report = renyi_report(short_run.initial().points, 0.5);
    REQUIRE(report.strong_indices.size() == 2);
    const MetastabilityResult r = verify_metastability(short_run, report, 4.0, 0.5, 64.0);
    REQUIRE(r.centers.size() == 2);
    CHECK(r.centers[0].checked);
    CHECK(r.centers[0].partial);
    CHECK(r.partial);
    CHECK_FALSE(r.centers[1].checked);
    CHECK_FALSE(r.centers[1].diagnostic.empty());

    IntegratorConfig c;
    c.dt = 0.1;
    c.t_end = 1.0;
    const Trajectory full =
        integrate(SystemParams::identity(3, 2.0), ParticleState::from_points(sample_uniform_points(1, 3, 3)), c);
    CHECK_THROWS_AS(verify_metastability(full, renyi_report(full.initial().points, 0.5), 4.0, 0.5, 2.0),
                    std::invalid_argument);
}
