#pragma once

// Cluster detection, consumed fractions and collapse diagnostics on particle
// states.

#include "attnflow/dynamics.hpp"

#include <vector>

namespace attnflow
{
    struct Cluster
    {
        VectorXd representative;            // unit vector
        std::vector<Eigen::Index> members;  // increasing token indices
    };

    struct ClusterReport
    {
        double radius = 0.0;
        double time = 0.0;
        std::vector<Cluster> clusters;  // ordered by smallest member
        std::vector<Eigen::Index> unassigned;

        std::size_t count() const noexcept
        {
            return clusters.size();
        }
    };

    /// Default cluster / consumption radius 3 beta^{-1/2}.
    inline double default_radius(double beta)
    {
        return 3.0 / std::sqrt(beta);
    }

    /// Single-linkage components at geodesic threshold `radius`. Each
    /// component's representative is its normalized Euclidean mean; members
    /// farther than `radius` from it are moved to `unassigned` and the
    /// representative is recomputed once from the remaining members.
    ClusterReport detect_clusters(const ParticleState& state, double radius);

    /// Fraction of tokens within geodesic `radius` of some column of `centers`.
    double consumed_fraction(const ParticleState& state, const MatrixXd& centers, double radius);

    /// max_k dist(x_k, target).
    double collapse_diagnostic(const ParticleState& state, const VectorXd& target);

    /// Smallest pairwise geodesic distance between tokens (0 for n < 2).
    double min_pairwise_distance(const ParticleState& state);
}
