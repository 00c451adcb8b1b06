#include "attnflow/metrics.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace attnflow
{
    namespace
    {
        class DisjointSets
        {
          public:
            explicit DisjointSets(Eigen::Index n)
                : parent_(static_cast<std::size_t>(n))
            {
                std::iota(parent_.begin(), parent_.end(), Eigen::Index{0});
            }

            Eigen::Index find(Eigen::Index i)
            {
                auto u = static_cast<std::size_t>(i);
                while (parent_[u] != static_cast<Eigen::Index>(u))
                {
                    parent_[u] = parent_[static_cast<std::size_t>(parent_[u])];
                    u = static_cast<std::size_t>(parent_[u]);
                }
                return static_cast<Eigen::Index>(u);
            }

            void unite(Eigen::Index a, Eigen::Index b)
            {
                a = find(a);
                b = find(b);
                if (a != b)
                {
                    // smaller index becomes the root so labels do not depend on merge order
                    parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
                }
            }

          private:
            std::vector<Eigen::Index> parent_;
        };

        VectorXd mean_direction(const MatrixXd& points, const std::vector<Eigen::Index>& members)
        {
            VectorXd sum = VectorXd::Zero(points.rows());
            for (const Eigen::Index k : members)
            {
                sum += points.col(k);
            }
            const double norm = sum.norm();
            if (!(norm > kMinNormalizableNorm))
            {
                // balanced configuration: fall back to the first member
                return points.col(members.front());
            }
            return sum / norm;
        }
    }

    ClusterReport detect_clusters(const ParticleState& state, double radius)
    {
        if (!(radius > 0.0))
        {
            throw std::invalid_argument("detect_clusters: radius must be positive");
        }
        const MatrixXd& x = state.points;
        const Eigen::Index n = x.cols();
        DisjointSets sets(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            for (Eigen::Index j = i + 1; j < n; ++j)
            {
                if (geodesic_distance(x.col(i), x.col(j)) <= radius)
                {
                    sets.unite(i, j);
                }
            }
        }

        std::map<Eigen::Index, std::vector<Eigen::Index>> groups;
        for (Eigen::Index k = 0; k < n; ++k)
        {
            groups[sets.find(k)].push_back(k);
        }

        ClusterReport report;
        report.radius = radius;
        report.time = state.time;
        for (auto& [root, members] : groups)
        {
            VectorXd rep = mean_direction(x, members);
            std::vector<Eigen::Index> kept;
            for (const Eigen::Index k : members)
            {
                if (geodesic_distance(x.col(k), rep) <= radius)
                {
                    kept.push_back(k);
                }
                else
                {
                    report.unassigned.push_back(k);
                }
            }
            if (kept.empty())
            {
                continue;
            }
            if (kept.size() != members.size())
            {
                rep = mean_direction(x, kept);
                std::vector<Eigen::Index> final_members;
                for (const Eigen::Index k : kept)
                {
                    if (geodesic_distance(x.col(k), rep) <= radius)
                    {
                        final_members.push_back(k);
                    }
                    else
                    {
                        report.unassigned.push_back(k);
                    }
                }
                kept = std::move(final_members);
                if (kept.empty())
                {
                    continue;
                }
            }
            report.clusters.push_back({rep, std::move(kept)});
        }
        std::sort(report.unassigned.begin(), report.unassigned.end());
        std::sort(report.clusters.begin(), report.clusters.end(),
                  [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
        return report;
    }

    double consumed_fraction(const ParticleState& state, const MatrixXd& centers, double radius)
    {
        if (centers.cols() == 0)
        {
            throw std::invalid_argument("consumed_fraction: center set is empty");
        }
        if (centers.rows() != state.dim())
        {
            throw std::invalid_argument("consumed_fraction: center dimension does not match tokens");
        }
        const Eigen::Index n = state.size();
        if (n == 0)
        {
            return 0.0;
        }
        Eigen::Index consumed = 0;
        for (Eigen::Index k = 0; k < n; ++k)
        {
            for (Eigen::Index j = 0; j < centers.cols(); ++j)
            {
                if (geodesic_distance(state.points.col(k), centers.col(j)) <= radius)
                {
                    ++consumed;
                    break;
                }
            }
        }
        return static_cast<double>(consumed) / static_cast<double>(n);
    }

    double collapse_diagnostic(const ParticleState& state, const VectorXd& target)
    {
        if (target.size() != state.dim())
        {
            throw std::invalid_argument("collapse_diagnostic: target dimension does not match tokens");
        }
        double worst = 0.0;
        for (Eigen::Index k = 0; k < state.size(); ++k)
        {
            worst = std::max(worst, geodesic_distance(state.points.col(k), target));
        }
        return worst;
    }

    double min_pairwise_distance(const ParticleState& state)
    {
        const Eigen::Index n = state.size();
        if (n < 2)
        {
            return 0.0;
        }
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i)
        {
            for (Eigen::Index j = i + 1; j < n; ++j)
            {
                best = std::min(best, geodesic_distance(state.points.col(i), state.points.col(j)));
            }
        }
        return best;
    }
}
