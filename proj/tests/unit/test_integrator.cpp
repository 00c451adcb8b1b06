#include "attnflow/integrator.hpp"
#include "attnflow/matrix_spec.hpp"

#include <doctest.h>

using namespace attnflow;

namespace
{
    IntegratorConfig config(double dt, double t_end, int record_every = 1, Method method = Method::RK4)
    {
        IntegratorConfig c;
        c.method = method;
        c.dt = dt;
        c.t_end = t_end;
        c.record_every = record_every;
        return c;
    }

    SystemParams single_token(const MatrixXd& V)
    {
        SystemParams p = SystemParams::identity(static_cast<int>(V.rows()), 1.0);
        p.V = V;
        return p;
    }

    double final_error(const MatrixXd& V, const VectorXd& x0, double dt, double t_end)
    {
        const Trajectory tr = integrate(single_token(V), ParticleState::from_points(x0), config(dt, t_end, 1000000));
        return geodesic_distance(tr.final().points.col(0), LinearFlow(V)(x0, t_end));
    }
}

TEST_CASE("config validation")
{
    CHECK_NOTHROW(config(0.1, 1.0).validate());
    CHECK_THROWS_AS(config(2.0, 1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(config(0.0, 1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(config(0.1, 1.0, 0).validate(), std::invalid_argument);
    IntegratorConfig c = config(0.1, 1.0);
    c.rtol = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    for (const auto m : {Method::RK4, Method::Euler, Method::RK45Adaptive})
    {
        CHECK(method_from_string(to_string(m)) == m);
    }
    CHECK_THROWS_AS(method_from_string("leapfrog"), std::invalid_argument);
}

TEST_CASE("stationary single token under V = I")
{
    const VectorXd x0 = sample_uniform_points(2, 4, 1).col(0);
    for (const auto m : {Method::RK4, Method::Euler, Method::RK45Adaptive})
    {
        const Trajectory tr = integrate(single_token(MatrixXd::Identity(4, 4)), ParticleState::from_points(x0),
                                        config(0.1, 37.0, 10, m));
        CHECK((tr.final().points.col(0) - x0).norm() < 1e-12);
    }
}

TEST_CASE("snapshots: start at zero, strictly increasing, end at t_end, unit norm")
{
    SystemParams p = SystemParams::identity(3, 4.0);
    p.V = parse_matrix_spec("random_gaussian(5)", 3);
    const Trajectory tr = integrate(p, ParticleState::from_points(sample_uniform_points(1, 3, 10)), config(0.03, 5.0, 7));
    CHECK(tr.initial().time == 0.0);
    CHECK(tr.final().time == 5.0);
    CHECK(tr.termination == Termination::ReachedEnd);
    double drift = 0.0;
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i)
    {
        if (i > 0)
        {
            CHECK(tr.snapshots[i].time > tr.snapshots[i - 1].time);
        }
        drift = std::max(drift, (tr.snapshots[i].points.colwise().norm().array() - 1.0).abs().maxCoeff());
    }
    CHECK(drift <= 1e-12);
    // 167 steps of 0.03 reach 5.01; the last step is shortened
    CHECK(tr.steps == 167);
}

TEST_CASE("RK4 matches the closed form and converges at fourth order")
{
    const MatrixXd V = (MatrixXd(3, 3) << 0.3, -0.8, 0.1, 0.5, -0.2, 0.9, -0.7, 0.4, 0.6).finished();
    const VectorXd x0 = sample_uniform_points(21, 3, 1).col(0);
    CHECK(final_error(V, x0, 1e-3, 10.0) < 1e-6);
    const double coarse = final_error(V, x0, 0.1, 10.0);
    const double fine = final_error(V, x0, 0.05, 10.0);
    CHECK(coarse / fine > 12.0);
    CHECK(coarse / fine < 20.0);
}

TEST_CASE("Euler converges at first order")
{
    const MatrixXd V = parse_matrix_spec("diag(1,-0.5,0.2)");
    const VectorXd x0 = sample_uniform_points(5, 3, 1).col(0);
    auto err = [&](double dt) {
        const Trajectory tr =
            integrate(single_token(V), ParticleState::from_points(x0), config(dt, 2.0, 1000000, Method::Euler));
        return geodesic_distance(tr.final().points.col(0), LinearFlow(V)(x0, 2.0));
    };
    const double ratio = err(0.01) / err(0.005);
    CHECK(ratio > 1.7);
    CHECK(ratio < 2.3);
}

TEST_CASE("adaptive RK45 matches the closed form")
{
    const MatrixXd V = random_gaussian_matrix(8, 4);
    const VectorXd x0 = sample_uniform_points(8, 4, 1).col(0);
    const Trajectory tr =
        integrate(single_token(V), ParticleState::from_points(x0), config(0.1, 10.0, 1, Method::RK45Adaptive));
    CHECK(tr.final().time == 10.0);
    CHECK(geodesic_distance(tr.final().points.col(0), LinearFlow(V)(x0, 10.0)) < 1e-6);
}

TEST_CASE("renormalization only corrects radial error")
{
    SystemParams p = SystemParams::identity(3, 2.0);
    p.V = random_gaussian_matrix(3, 3);
    const auto init = ParticleState::from_points(sample_uniform_points(4, 3, 6));
    IntegratorConfig on = config(1e-4, 1.0, 10000);
    IntegratorConfig off = on;
    off.renormalize_every_step = false;
    const Trajectory a = integrate(p, init, on);
    const Trajectory b = integrate(p, init, off);
    MatrixXd pb = b.final().points;
    renormalize_columns(pb);
    CHECK((a.final().points - pb).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("integration is deterministic")
{
    SystemParams p = SystemParams::identity(3, 9.0);
    p.Q = random_gaussian_matrix(1, 3);
    const auto init = ParticleState::from_points(sample_uniform_points(6, 3, 20));
    const Trajectory a = integrate(p, init, config(0.05, 3.0, 5));
    const Trajectory b = integrate(p, init, config(0.05, 3.0, 5));
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t i = 0; i < a.snapshots.size(); ++i)
    {
        CHECK(a.snapshots[i].points == b.snapshots[i].points);
    }
}

TEST_CASE("integrate_until")
{
    SystemParams p = SystemParams::identity(2, 4.0, DynamicsKind::Causal2d);
    const auto init = ParticleState::from_angles(angles_of(sample_uniform_points(2, 2, 10)));
    const IntegratorConfig c = config(0.05, 4.0, 4);
    const Trajectory plain = integrate(p, init, c);
    const Trajectory never = integrate_until(p, init, c, [](const ParticleState&) { return false; });
    REQUIRE(plain.snapshots.size() == never.snapshots.size());
    CHECK(plain.final().angles == never.final().angles);
    CHECK(never.termination == Termination::ReachedEnd);

    const Trajectory always = integrate_until(p, init, c, [](const ParticleState&) { return true; });
    CHECK(always.snapshots.size() == 1);
    CHECK(always.termination == Termination::StopPredicate);

    const Trajectory slow = integrate_until(p, init, config(0.05, 1e4, 20), velocity_below(p, 1e-6));
    CHECK(slow.termination == Termination::StopPredicate);
    CHECK(max_velocity_norm(slow.final(), p) < 1e-6);
}

TEST_CASE("planar states keep unwrapped angles")
{
    SystemParams p = SystemParams::identity(2, 1.0, DynamicsKind::FrozenCenters);
    p.frozen = {{3.0, 1.0}};
    VectorXd phi(1);
    phi << 3.0 - 2.0 * std::numbers::pi + 0.5;
    const Trajectory tr = integrate(p, ParticleState::from_angles(phi), config(0.1, 50.0, 10));
    CHECK(tr.final().angles(0) == doctest::Approx(3.0 - 2.0 * std::numbers::pi).epsilon(1e-6));
    CHECK((tr.final().points.col(0) - circle_point(tr.final().angles(0))).norm() < 1e-15);
}

TEST_CASE("blow-up raises NumericalError with the failing time")
{
    SystemParams p = SystemParams::identity(2, 1.0);
    p.V = 1e300 * parse_matrix_spec("diag(1,2)");
    IntegratorConfig c = config(1.0, 10.0, 1, Method::Euler);
    c.renormalize_every_step = false;
    MatrixXd x(2, 2);
    x.col(0) = circle_point(0.3);
    x.col(1) = circle_point(1.2);
    try
    {
        integrate(p, ParticleState::from_points(x), c);
        FAIL("expected NumericalError");
    }
    catch (const NumericalError& e)
    {
        CHECK(e.time() > 0.0);
        CHECK(std::string(e.what()).find("t = ") != std::string::npos);
    }
}

TEST_CASE("dimension mismatch is rejected")
{
    CHECK_THROWS_AS(integrate(SystemParams::identity(3, 1.0), ParticleState::from_points(sample_uniform_points(1, 2, 3)),
                              config(0.1, 1.0)),
                    std::invalid_argument);
}
