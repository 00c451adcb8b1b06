#pragma once

// The five value matrices of the final-configuration atlas and the
// observable check for each predicted row.

#include "attnflow/integrator.hpp"
#include "attnflow/spectral.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>

namespace attnflow
{
    struct AtlasCase
    {
        const char* figure;  // fig1a .. fig1e
        const char* V;       // matrix spec
        FinalConfiguration caption_row;
    };

    inline constexpr std::array<AtlasCase, 5> kAtlasCases{{
        {"fig1a", "diag(1,1,1)", FinalConfiguration::CollapseToFirst},
        {"fig1b", "diag(1,1,0)", FinalConfiguration::OnePointInL},
        {"fig1c", "diag(1,0,0)", FinalConfiguration::TwoPointsPmXi},
        {"fig1d", "diag(-1,-1,-3)", FinalConfiguration::CloudAroundL},
        {"fig1e", "diag(-1,-3,-3)", FinalConfiguration::TwoClouds},
    }};

    // Tolerances of the per-row checks.
    inline constexpr double kCollapseTol = 1e-3;
    inline constexpr double kPointTol = 1e-2;
    inline constexpr double kCloudRadius = 0.5;
    inline constexpr double kCloudMinGap = 1e-3;

    struct AtlasObservation
    {
        bool matches = false;
        std::map<std::string, double> metrics;
        std::string summary;
    };

    // Shared run parameters: d = 3, n = 32, beta = 9, Q = K = I, T = 5000.
    inline constexpr int kAtlasDim = 3;
    inline constexpr int kAtlasTokens = 32;
    inline constexpr double kAtlasBeta = 9.0;
    inline constexpr double kAtlasHorizon = 5000.0;
    inline constexpr double kAtlasStep = 0.05;

    /// Causal RK4 run of one atlas matrix from the uniform initial state of `seed`.
    Trajectory run_atlas_case(const AtlasCase& atlas_case, std::uint64_t seed, int record_every);

    /// Compares a terminal state with the configuration predicted by `cls`:
    ///   CollapseToFirst  max dist to x1(0) < 1e-3
    ///   OnePointInL      all tokens within 1e-2 of one point, itself within 1e-2 of L
    ///   TwoPointsPmXi    every token within 1e-2 of +-xi
    ///   CloudAroundL,
    ///   TwoClouds        every token within 0.5 of L (+-xi) and min pairwise distance > 1e-3
    /// Other rows never match.
    AtlasObservation observe_final_configuration(const SpectralClassification& cls, const ParticleState& initial,
                                                 const ParticleState& final);
}
