#pragma once

// Renyi parking centers of a token sequence and the metastability of the
// strong ones.

#include "attnflow/integrator.hpp"

#include <string>
#include <vector>

namespace attnflow
{
    enum class Metric
    {
        Geodesic,
        Euclidean
    };

    std::string to_string(Metric metric);
    Metric metric_from_string(const std::string& name);

    /// Distance between two unit vectors under `metric`.
    double sphere_distance(const VectorXd& a, const VectorXd& b, Metric metric);

    struct CenterHorizon
    {
        Eigen::Index index = 0;   // 0-based token index (token number s_j = index + 1)
        double horizon = 0.0;     // exact T_j
        double sufficient = 0.0;  // closed-form lower bound on T_j
    };

    struct RenyiReport
    {
        double delta = 0.0;
        Metric metric = Metric::Geodesic;
        std::vector<Eigen::Index> renyi_indices;   // 0-based, increasing
        std::vector<Eigen::Index> strong_indices;  // subset of renyi_indices
        std::vector<CenterHorizon> horizons;       // filled by attach_horizons()
    };

    /// Greedy scan in token order: token k is kept iff its distance to every
    /// previously kept token exceeds delta. Columns of `points` are tokens.
    std::vector<Eigen::Index> renyi_centers(const MatrixXd& points, double delta, Metric metric = Metric::Geodesic);

    /// Token k is kept iff its distance to every earlier token exceeds delta.
    std::vector<Eigen::Index> strong_renyi_centers(const MatrixXd& points, double delta,
                                                   Metric metric = Metric::Geodesic);

    RenyiReport renyi_report(const MatrixXd& points, double delta, Metric metric = Metric::Geodesic);

    /// Adds metastability horizons for every strong center whose separation
    /// exceeds the critical angle; centers violating it get no entry.
    void attach_horizons(RenyiReport& report, double c, double epsilon, double beta);

    /// Expected number of strong centers in an infinite i.i.d. uniform
    /// sequence on S^{d-1}: the inverse normalized cap measure of radius delta.
    /// Closed forms for d = 2 (pi / delta) and d = 3 (1 / sin^2(delta / 2));
    /// adaptive Simpson quadrature of sin^{d-2} otherwise.
    double expected_strong_count(int d, double delta);

    /// Normalized surface measure of a geodesic cap of radius delta on S^{d-1}.
    double cap_measure(int d, double delta);

    struct CenterDisplacement
    {
        Eigen::Index index = 0;
        bool checked = false;          // false when skipped (diagnostic says why)
        double separation = 0.0;       // min_{i < s} |x_s(0) - x_i(0)|
        double horizon = 0.0;          // T_j
        double max_displacement = 0.0; // max_{t <= T_j} |x_s(t) - x_s(0)|
        double bound = 0.0;            // eps c beta^{-1/2}
        bool partial = false;          // trajectory ends before T_j
        bool passed = false;
        std::string diagnostic;
    };

    struct MetastabilityResult
    {
        std::vector<CenterDisplacement> centers;
        bool partial = false;

        bool all_passed() const;
        int violations() const;
    };

    /// For every strong center of `report`: verifies the Euclidean separation
    /// min_{i<s} |x_s - x_i| > c (1 + 2 eps) beta^{-1/2} at t = 0 (skipped
    /// otherwise), computes its horizon, and compares the largest Euclidean
    /// displacement over snapshots with t <= T_j to eps c beta^{-1/2}.
    MetastabilityResult verify_metastability(const Trajectory& traj, const RenyiReport& report, double c,
                                             double epsilon, double beta);
}
