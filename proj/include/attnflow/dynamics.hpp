#pragma once

// Velocity fields of the attention particle system and the closed-form flow of
// a single token.

#include "attnflow/geometry.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace attnflow
{
    enum class DynamicsKind
    {
        Full,          // every token attends to every token
        Causal,        // token k attends to tokens j <= k
        Causal2d,      // causal, d = 2, Q = K = V = I, integrated in unwrapped angles
        FrozenCenters  // Causal2d plus fixed weighted attractors
    };

    std::string to_string(DynamicsKind kind);
    DynamicsKind dynamics_kind_from_string(const std::string& name);

    /// Returns true for the kinds whose state is a vector of circle angles.
    inline bool is_planar(DynamicsKind kind)
    {
        return kind == DynamicsKind::Causal2d || kind == DynamicsKind::FrozenCenters;
    }

    struct FrozenCenter
    {
        double angle = 0.0;   // radians
        double weight = 1.0;  // a_j >= 1
    };

    struct SystemParams
    {
        MatrixXd Q;
        MatrixXd K;
        MatrixXd V;
        double beta = 1.0;
        DynamicsKind kind = DynamicsKind::Causal;
        std::vector<FrozenCenter> frozen;
        /// Kahan-compensated accumulation of the attention sums.
        bool compensated_sum = false;

        Eigen::Index dim() const noexcept
        {
            return V.rows();
        }

        /// Throws std::invalid_argument naming the violated invariant.
        void validate() const;

        /// Q = K = V = I_d.
        static SystemParams identity(int d, double beta, DynamicsKind kind = DynamicsKind::Causal);
    };

    /// Token positions at one instant. Column k of `points` is token k; order
    /// is meaningful (it defines the causal mask). Planar kinds also carry the
    /// unwrapped angles, from which `points` is derived.
    struct ParticleState
    {
        MatrixXd points;
        VectorXd angles;
        double time = 0.0;

        Eigen::Index size() const noexcept
        {
            return points.cols();
        }

        Eigen::Index dim() const noexcept
        {
            return points.rows();
        }

        bool has_angles() const noexcept
        {
            return angles.size() > 0;
        }

        UnitVector<double> token(Eigen::Index k) const
        {
            return renormalize(points.col(k));
        }

        /// Columns are renormalized; throws if any is degenerate.
        static ParticleState from_points(MatrixXd points, double time = 0.0);
        static ParticleState from_angles(VectorXd angles, double time = 0.0);
    };

    /// Angles (atan2) of the columns of a 2 x n matrix.
    VectorXd angles_of(const MatrixXd& points);

    /// P_{x_k}( sum_j softmax_j(beta <Q x_k, K x_j>) V x_j ) for every token,
    /// over j <= k (causal) or all j. Logits are shifted by their row maximum
    /// and summed in ascending j. Returns a d x n matrix of tangent vectors.
    MatrixXd attention_field(const MatrixXd& points, const SystemParams& params, bool causal);

    /// Causal attention velocity; params.kind must be Causal.
    std::vector<TangentVector<double>> csa_velocity(const ParticleState& state, const SystemParams& params);

    /// Full attention velocity; params.kind must be Full.
    std::vector<TangentVector<double>> sa_velocity(const ParticleState& state, const SystemParams& params);

    /// Angular rates of causal attention on the circle with Q = K = V = I:
    ///   rate_k = (1 / Z_k) sum_{j<k} h(phi_j - phi_k),  Z_k = sum_{j<=k} e^{beta (cos(phi_k - phi_j) - 1)}.
    VectorXd csa2d_velocity(const VectorXd& angles, double beta, bool compensated = false);

    /// As csa2d_velocity with additional fixed attractors entering both the
    /// numerator and Z_k with weights a_j. Throws on an empty center list.
    VectorXd frozen_velocity(const VectorXd& angles, double beta, const std::vector<FrozenCenter>& centers,
                             bool compensated = false);

    /// Velocity of every token as d x n tangent vectors, for any kind.
    MatrixXd velocity(const ParticleState& state, const SystemParams& params);

    /// Largest absolute velocity component over all tokens.
    double max_velocity_norm(const ParticleState& state, const SystemParams& params);

    /// Exact flow of a single token, x' = P_x(V x): the normalized linear flow
    /// exp(tV) x0 / |exp(tV) x0|.
    ///
    /// Uses an eigendecomposition of V when its eigenvector matrix has
    /// condition number below 1e6, and a scaling-and-squaring Pade matrix
    /// exponential otherwise. V is shifted by its largest eigenvalue real part
    /// before exponentiating so that long horizons do not overflow.
    class LinearFlow
    {
      public:
        explicit LinearFlow(const MatrixXd& V);

        /// Direction of exp(tV) x0; throws std::domain_error when
        /// |exp(tV) x0| < 1e-300.
        VectorXd operator()(const VectorXd& x0, double t) const;

        bool uses_eigendecomposition() const noexcept
        {
            return use_eigen_;
        }

        double eigenvector_condition() const noexcept
        {
            return condition_;
        }

      private:
        MatrixXd V_;
        double shift_ = 0.0;
        bool use_eigen_ = false;
        double condition_ = 0.0;
        Eigen::MatrixXcd eigvecs_;
        Eigen::VectorXcd eigvals_;
        Eigen::PartialPivLU<Eigen::MatrixXcd> eigvecs_lu_;
    };

    UnitVector<double> single_token_closed_form(const MatrixXd& V, const UnitVector<double>& x0, double t);
}
