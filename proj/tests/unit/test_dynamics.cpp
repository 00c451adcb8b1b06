#include "attnflow/dynamics.hpp"
#include "attnflow/matrix_spec.hpp"
#include "attnflow/potential.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace attnflow;

namespace
{
    SystemParams random_params(std::uint64_t seed, int d, double beta, DynamicsKind kind)
    {
        SystemParams p = SystemParams::identity(d, beta, kind);
        p.Q = random_gaussian_matrix(seed, d);
        p.K = random_gaussian_matrix(seed + 1, d);
        p.V = random_gaussian_matrix(seed + 2, d);
        return p;
    }

    // Plain softmax without the max shift, written out independently.
    MatrixXd reference_field(const MatrixXd& x, const SystemParams& p, bool causal)
    {
        const Eigen::Index n = x.cols();
        MatrixXd out = MatrixXd::Zero(x.rows(), n);
        for (Eigen::Index k = 0; k < n; ++k)
        {
            VectorXd num = VectorXd::Zero(x.rows());
            double z = 0.0;
            const Eigen::Index last = causal ? k : n - 1;
            for (Eigen::Index j = 0; j <= last; ++j)
            {
                const double w = std::exp(p.beta * (p.Q * x.col(k)).dot(p.K * x.col(j)));
                num += w * (p.V * x.col(j));
                z += w;
            }
            const VectorXd y = num / z;
            out.col(k) = y - x.col(k).dot(y) * x.col(k);
        }
        return out;
    }
}

TEST_CASE("SystemParams validation")
{
    CHECK_NOTHROW(SystemParams::identity(3, 1.0).validate());
    SystemParams p = SystemParams::identity(3, 1.0);
    p.beta = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = SystemParams::identity(3, 1.0);
    p.K = MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = SystemParams::identity(3, 1.0);
    p.V(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_THROWS_AS(SystemParams::identity(3, 1.0, DynamicsKind::Causal2d).validate(), std::invalid_argument);
    p = SystemParams::identity(2, 1.0, DynamicsKind::Causal2d);
    p.V(1, 1) = 2.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_THROWS_AS(SystemParams::identity(2, 1.0, DynamicsKind::FrozenCenters).validate(), std::invalid_argument);
    p = SystemParams::identity(2, 1.0, DynamicsKind::Causal2d);
    p.frozen = {{0.0, 1.0}};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.kind = DynamicsKind::FrozenCenters;
    CHECK_NOTHROW(p.validate());
    p.frozen = {{0.0, 0.5}};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("kind names round-trip")
{
    for (const auto kind : {DynamicsKind::Full, DynamicsKind::Causal, DynamicsKind::Causal2d, DynamicsKind::FrozenCenters})
    {
        CHECK(dynamics_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(dynamics_kind_from_string("sideways"), std::invalid_argument);
}

TEST_CASE("causal velocity: first token and antipodal pair")
{
    const SystemParams p = SystemParams::identity(3, 2.0);
    const auto state = ParticleState::from_points(sample_uniform_points(1, 3, 5));
    CHECK(csa_velocity(state, p)[0].dir.norm() == 0.0);

    const SystemParams p2 = SystemParams::identity(2, 5.0);
    MatrixXd pts(2, 2);
    pts.col(0) = circle_point(0.4);
    pts.col(1) = -circle_point(0.4);
    const auto v = csa_velocity(ParticleState::from_points(pts), p2);
    CHECK(v[1].dir.norm() < 1e-15);
}

TEST_CASE("causal velocity on the circle matches the angular form")
{
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
    {
        const double beta = 0.5 + static_cast<double>(seed % 7) * 9.0;
        const SystemParams p = SystemParams::identity(2, beta);
        const MatrixXd x = sample_uniform_points(seed, 2, 12);
        const VectorXd angles = angles_of(x);
        const VectorXd rate = csa2d_velocity(angles, beta);
        const auto v = csa_velocity(ParticleState::from_points(x), p);
        for (Eigen::Index k = 0; k < x.cols(); ++k)
        {
            const VectorXd tangent = (VectorXd(2) << -std::sin(angles(k)), std::cos(angles(k))).finished();
            CHECK((v[static_cast<std::size_t>(k)].dir - rate(k) * tangent).norm() < 1e-12);
        }
    }
}

TEST_CASE("attention field matches an unshifted softmax reference")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        const int d = 2 + static_cast<int>(seed % 4);
        const SystemParams p = random_params(seed * 10, d, 0.7, DynamicsKind::Causal);
        const MatrixXd x = sample_uniform_points(seed, d, 9);
        for (const bool causal : {true, false})
        {
            CHECK((attention_field(x, p, causal) - reference_field(x, p, causal)).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("large logits stay finite thanks to the max shift")
{
    SystemParams p = random_params(5, 3, 1e4, DynamicsKind::Causal);
    const MatrixXd v = attention_field(sample_uniform_points(9, 3, 16), p, true);
    CHECK(v.allFinite());
}

TEST_CASE("velocities are tangent")
{
    for (std::uint64_t seed = 1; seed <= 30; ++seed)
    {
        const int d = 2 + static_cast<int>(seed % 5);
        for (const auto kind : {DynamicsKind::Causal, DynamicsKind::Full})
        {
            const SystemParams p = random_params(seed, d, 3.0, kind);
            const auto state = ParticleState::from_points(sample_uniform_points(seed + 100, d, 10));
            const MatrixXd v = velocity(state, p);
            for (Eigen::Index k = 0; k < state.size(); ++k)
            {
                CHECK(std::abs(v.col(k).dot(state.points.col(k))) < 1e-10);
            }
        }
    }
}

TEST_CASE("causality: later tokens do not influence earlier ones")
{
    const SystemParams p = random_params(77, 3, 4.0, DynamicsKind::Causal);
    MatrixXd x = sample_uniform_points(3, 3, 8);
    const MatrixXd before = velocity(ParticleState::from_points(x), p);
    x.col(5) = sample_uniform_points(99, 3, 1).col(0);
    const MatrixXd after = velocity(ParticleState::from_points(x), p);
    CHECK(before.leftCols(5) == after.leftCols(5));

    VectorXd angles = angles_of(sample_uniform_points(4, 2, 8));
    const VectorXd r0 = csa2d_velocity(angles, 9.0);
    angles(6) += 0.3;
    const VectorXd r1 = csa2d_velocity(angles, 9.0);
    CHECK(r0.head(6) == r1.head(6));
}

TEST_CASE("full attention: single token, coincident tokens, permutation equivariance")
{
    const SystemParams full = random_params(3, 3, 2.0, DynamicsKind::Full);
    SystemParams causal = full;
    causal.kind = DynamicsKind::Causal;
    const auto one = ParticleState::from_points(sample_uniform_points(2, 3, 1));
    CHECK(sa_velocity(one, full)[0].dir == csa_velocity(one, causal)[0].dir);

    const SystemParams id = SystemParams::identity(3, 5.0, DynamicsKind::Full);
    MatrixXd same(3, 4);
    same.colwise() = sample_uniform_points(6, 3, 1).col(0);
    CHECK(velocity(ParticleState::from_points(same), id).norm() < 1e-15);

    std::mt19937_64 rng(1);
    const MatrixXd x = sample_uniform_points(8, 3, 7);
    const MatrixXd v = velocity(ParticleState::from_points(x), full);
    for (int trial = 0; trial < 10; ++trial)
    {
        std::vector<Eigen::Index> perm(7);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        MatrixXd xp(3, 7);
        for (int k = 0; k < 7; ++k)
        {
            xp.col(k) = x.col(perm[static_cast<std::size_t>(k)]);
        }
        const MatrixXd vp = velocity(ParticleState::from_points(xp), full);
        for (int k = 0; k < 7; ++k)
        {
            CHECK((vp.col(k) - v.col(perm[static_cast<std::size_t>(k)])).norm() < 1e-13);
        }
    }
}

TEST_CASE("V = I: tokens ordered by alignment with x1 keep aligning")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial)
    {
        const int d = 3;
        const int n = 6;
        SystemParams p = SystemParams::identity(d, 0.5 + 10.0 * unit(rng));
        p.Q = random_gaussian_matrix(static_cast<std::uint64_t>(trial) + 1000, d);
        p.K = random_gaussian_matrix(static_cast<std::uint64_t>(trial) + 2000, d);
        const VectorXd xi = sample_uniform_points(static_cast<std::uint64_t>(trial), d, 1).col(0);
        std::vector<double> a(n);
        a[0] = 1.0;
        for (int k = 1; k < n; ++k)
        {
            a[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k - 1)] * unit(rng);
        }
        MatrixXd x(d, n);
        const MatrixXd dirs = sample_uniform_points(static_cast<std::uint64_t>(trial) + 500, d, n);
        for (int k = 0; k < n; ++k)
        {
            const VectorXd u = (dirs.col(k) - dirs.col(k).dot(xi) * xi).normalized();
            const double ak = a[static_cast<std::size_t>(k)];
            x.col(k) = ak * xi + std::sqrt(1 - ak * ak) * u;
        }
        const MatrixXd v = velocity(ParticleState::from_points(x), p);
        for (int k = 1; k < n; ++k)
        {
            CHECK(v.col(k).dot(xi) >= -1e-12);
        }
    }
}

TEST_CASE("planar velocities")
{
    const double beta = 9.0;
    const VectorXd three = (VectorXd(3) << 0.1, 2.0, -1.0).finished();
    CHECK(csa2d_velocity(three, beta)(0) == 0.0);
    const VectorXd pair = (VectorXd(2) << 0.3, 0.3 + std::numbers::pi).finished();
    CHECK(std::abs(csa2d_velocity(pair, beta)(1)) < 1e-15);
    const double tau = critical_angle(beta);
    const VectorXd crit = (VectorXd(2) << 0.0, tau).finished();
    CHECK(csa2d_velocity(crit, beta)(1)
          == doctest::Approx(-interaction(tau, beta) / (1 + std::exp(beta * (std::cos(tau) - 1)))).epsilon(1e-14));
    // compensated summation agrees to round-off
    const VectorXd many = angles_of(sample_uniform_points(2, 2, 300));
    CHECK((csa2d_velocity(many, beta, true) - csa2d_velocity(many, beta, false)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("frozen-center velocities")
{
    const double beta = 14.0;
    const std::vector<FrozenCenter> centers{{1.0, 1.0}};
    CHECK(frozen_velocity((VectorXd(1) << 1.0).finished(), beta, centers)(0) == 0.0);
    const double offset = 0.1 / std::sqrt(beta);
    CHECK(frozen_velocity((VectorXd(1) << 1.0 + offset).finished(), beta, centers)(0) < 0.0);
    CHECK(frozen_velocity((VectorXd(1) << 1.0 - offset).finished(), beta, centers)(0) > 0.0);
    CHECK_THROWS_AS(frozen_velocity((VectorXd(1) << 1.0).finished(), beta, {}), std::invalid_argument);

    // a center of weight 2 acts like two unit centers at the same place
    const VectorXd phi = (VectorXd(2) << 0.2, 0.5).finished();
    const VectorXd w2 = frozen_velocity(phi, beta, {{0.0, 2.0}});
    const VectorXd w11 = frozen_velocity(phi, beta, {{0.0, 1.0}, {0.0, 1.0}});
    CHECK((w2 - w11).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("single-token closed form")
{
    const VectorXd x0 = sample_uniform_points(4, 3, 1).col(0);
    const auto u0 = renormalize(x0);
    CHECK((single_token_closed_form(MatrixXd::Identity(3, 3), u0, 7.0).coords() - x0).norm() < 1e-14);

    const MatrixXd V = (MatrixXd(2, 2) << 1, 0, 0, 0).finished();
    const auto x = renormalize((VectorXd(2) << 1, 1).finished());
    CHECK(geodesic_distance(single_token_closed_form(V, x, 10.0).coords(), VectorXd::Unit(2, 0)) < 1e-4);
    CHECK(single_token_closed_form(V, x, 1000.0).coords().allFinite());

    const MatrixXd S = parse_matrix_spec("diag(3,-1,0.5)");
    const auto eig = renormalize(VectorXd::Unit(3, 2));
    CHECK((single_token_closed_form(S, eig, 4.0).coords() - VectorXd::Unit(3, 2)).norm() < 1e-14);
}

TEST_CASE("closed form on a Jordan block uses the matrix exponential")
{
    const MatrixXd J = (MatrixXd(2, 2) << 1, 1, 0, 1).finished();
    const LinearFlow flow(J);
    CHECK_FALSE(flow.uses_eigendecomposition());
    const VectorXd x0 = (VectorXd(2) << 0.6, 0.8).finished();
    for (const double t : {0.5, 3.0, 40.0})
    {
        const VectorXd expected = (VectorXd(2) << x0(0) + t * x0(1), x0(1)).finished().normalized();
        CHECK((flow(x0, t) - expected).norm() < 1e-12);
    }
    CHECK(LinearFlow(parse_matrix_spec("diag(1,2)")).uses_eigendecomposition());
}

TEST_CASE("extreme contraction is reported")
{
    const MatrixXd V = (MatrixXd(2, 2) << 0, 0, 0, -1).finished();
    const LinearFlow flow(V);
    CHECK_THROWS_AS(flow(VectorXd::Unit(2, 1), 1000.0), std::domain_error);
}
