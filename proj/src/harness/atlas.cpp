#include "attnflow/atlas.hpp"

#include "attnflow/matrix_spec.hpp"
#include "attnflow/metrics.hpp"

#include <algorithm>
#include <sstream>

namespace attnflow
{
    Trajectory run_atlas_case(const AtlasCase& atlas_case, std::uint64_t seed, int record_every)
    {
        SystemParams p = SystemParams::identity(kAtlasDim, kAtlasBeta);
        p.V = parse_matrix_spec(atlas_case.V, kAtlasDim);
        IntegratorConfig cfg;
        cfg.dt = kAtlasStep;
        cfg.t_end = kAtlasHorizon;
        cfg.record_every = record_every;
        return integrate(p, ParticleState::from_points(sample_uniform_points(seed, kAtlasDim, kAtlasTokens)), cfg,
                         seed);
    }

    AtlasObservation observe_final_configuration(const SpectralClassification& cls, const ParticleState& initial,
                                                 const ParticleState& final)
    {
        AtlasObservation obs;
        std::ostringstream text;
        text.precision(6);
        const Eigen::Index n = final.size();
        switch (cls.predicted_row)
        {
            case FinalConfiguration::CollapseToFirst:
            {
                const double dist = collapse_diagnostic(final, initial.points.col(0));
                obs.metrics["max_dist_to_first"] = dist;
                obs.matches = dist < kCollapseTol;
                text << "max dist to x1(0) " << dist;
                break;
            }
            case FinalConfiguration::OnePointInL:
            {
                const VectorXd mean = final.points.rowwise().sum();
                const VectorXd point =
                    mean.norm() > kMinNormalizableNorm ? VectorXd(mean.normalized()) : VectorXd(final.points.col(0));
                const double spread = collapse_diagnostic(final, point);
                const double off = distance_to_subspace(point, cls.L_basis);
                obs.metrics["spread"] = spread;
                obs.metrics["point_dist_to_L"] = off;
                obs.matches = spread < kPointTol && off < kPointTol;
                text << "spread " << spread << ", point off L by " << off;
                break;
            }
            case FinalConfiguration::TwoPointsPmXi:
            {
                const VectorXd xi = cls.L_basis.col(0);
                double worst = 0.0;
                for (Eigen::Index k = 0; k < n; ++k)
                {
                    worst = std::max(worst, std::min(geodesic_distance(final.points.col(k), xi),
                                                     geodesic_distance(final.points.col(k), -xi)));
                }
                obs.metrics["max_dist_to_pm_xi"] = worst;
                obs.matches = worst < kPointTol;
                text << "max dist to +-xi " << worst;
                break;
            }
            case FinalConfiguration::CloudAroundL:
            case FinalConfiguration::TwoClouds:
            {
                double worst = 0.0;
                for (Eigen::Index k = 0; k < n; ++k)
                {
                    worst = std::max(worst, distance_to_subspace(final.points.col(k), cls.L_basis));
                }
                const double gap = min_pairwise_distance(final);
                obs.metrics["max_dist_to_L"] = worst;
                obs.metrics["min_pairwise"] = gap;
                obs.matches = worst < kCloudRadius && gap > kCloudMinGap;
                text << "max dist to L " << worst << ", min pairwise " << gap;
                break;
            }
            default:
                text << "no observable pattern for row " << to_string(cls.predicted_row);
        }
        obs.summary = text.str();
        return obs;
    }
}
