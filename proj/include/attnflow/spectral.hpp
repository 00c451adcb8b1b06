#pragma once

// Spectral structure of the value matrix and the final-configuration atlas it
// predicts.

#include "attnflow/integrator.hpp"

#include <complex>
#include <string>
#include <vector>

namespace attnflow
{
    enum class FinalConfiguration
    {
        CollapseToFirst,
        OnePointInL,
        TwoPointsPmXi,
        CloudAroundL,
        TwoClouds,
        ComplexRotating,
        Indeterminate
    };

    std::string to_string(FinalConfiguration row);

    /// "proved" for the row covered by the collapse theorem (V a positive
    /// multiple of the identity), "conjectured" for every other row.
    std::string status_of(FinalConfiguration row);

    struct SpectralClassification
    {
        std::complex<double> lambda_max;  // eigenvalue with the largest real part
        bool is_real = true;
        int multiplicity = 0;             // algebraic multiplicity of the top group
        MatrixXd L_basis;                 // orthonormal columns: top eigenvectors
        MatrixXd Lprime_basis;            // orthonormal columns: generalized eigenspace
        int max_jordan_block = 1;
        FinalConfiguration predicted_row = FinalConfiguration::Indeterminate;
        std::vector<std::complex<double>> eigenvalues;
    };

    /// Relative tolerance used to group eigenvalues with the top real part.
    inline constexpr double kDefaultSpectralTol = 1e-8;

    /// Groups the eigenvalues whose real part is within tol * spectral radius
    /// of the largest, and extracts L' (null space of the group's minimal
    /// polynomial power), the Jordan index and L (eigenvectors heading the
    /// longest chains). predicted_row is left Indeterminate.
    SpectralClassification dominant_subspaces(const MatrixXd& V, double tol = kDefaultSpectralTol);

    /// dominant_subspaces() plus the table row predicted from (sign of
    /// lambda_max, multiplicity, Jordan structure). Depends on V only.
    SpectralClassification classify_value_matrix(const MatrixXd& V, double tol = kDefaultSpectralTol);

    /// Row prediction from an eigenvalue list alone (no Jordan information, so
    /// the matrix is assumed diagonalizable).
    SpectralClassification classify_eigenvalues(const std::vector<std::complex<double>>& eigenvalues,
                                                double tol = kDefaultSpectralTol);

    /// True iff V maps L^perp into itself and <Vz, z> < lambda_max |z|^2 on
    /// L^perp \ {0} (hypothesis of the one-cluster conjecture for dim L >= 2).
    bool one_cluster_hypothesis_holds(const MatrixXd& V, const SpectralClassification& cls);

    /// Geodesic distance from a unit vector to the unit sphere of span(basis).
    double distance_to_subspace(const VectorXd& x, const MatrixXd& basis);

    enum class RateType
    {
        Exponential,
        Linear
    };

    std::string to_string(RateType type);

    struct RateFit
    {
        RateType type = RateType::Exponential;
        double rate = 0.0;  // slope of log-distance (exponential) or coefficient of 1/t (linear)
        double r_squared = 0.0;
        double exponential_rate = 0.0;
        double exponential_r_squared = 0.0;
        double linear_coefficient = 0.0;
        double linear_r_squared = 0.0;
    };

    /// Fits dist(x(t), span(target)) of a single-token trajectory over the
    /// snapshots in [t0, t1]: log-distance against t and distance against 1/t.
    /// Returns the better fit by r^2. Throws std::domain_error when the
    /// distances vanish (< 1e-14) over the window.
    RateFit fit_convergence_rate(const Trajectory& traj, const MatrixXd& target, double t0, double t1);
}
