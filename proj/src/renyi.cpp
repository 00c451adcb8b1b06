#include "attnflow/renyi.hpp"

#include "attnflow/potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace attnflow
{
    namespace
    {
        // Uniform grid over [-1, 1]^d used to find tokens that may lie within
        // the exclusion radius; decisions are always made with the exact metric.
        class NeighborGrid
        {
          public:
            NeighborGrid(int d, double chord_radius)
                : d_(d)
                , cell_(chord_radius)
            {
                per_axis_ = static_cast<std::int64_t>(std::ceil(2.0 / cell_)) + 1;
            }

            static bool usable(int d, double chord_radius)
            {
                if (d > 4 || !(chord_radius > 0.0) || chord_radius >= 2.0)
                {
                    return false;
                }
                return std::ceil(2.0 / chord_radius) + 1 < 65535.0;
            }

            void insert(const double* x, Eigen::Index index)
            {
                cells_[key(coords(x))].push_back(index);
            }

            /// Calls visit(index) for every stored token in the 3^d block
            /// around x; stops early when visit returns true.
            bool any_near(const double* x, const std::function<bool(Eigen::Index)>& visit) const
            {
                const auto base = coords(x);
                std::array<std::int64_t, 4> c{};
                return scan(base, c, 0, visit);
            }

          private:
            std::array<std::int64_t, 4> coords(const double* x) const
            {
                std::array<std::int64_t, 4> c{};
                for (int i = 0; i < d_; ++i)
                {
                    c[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor((x[i] + 1.0) / cell_));
                }
                return c;
            }

            std::uint64_t key(const std::array<std::int64_t, 4>& c) const
            {
                std::uint64_t k = 0;
                for (int i = 0; i < d_; ++i)
                {
                    k = (k << 16) | static_cast<std::uint64_t>(c[static_cast<std::size_t>(i)] + 1);
                }
                return k;
            }

            bool scan(const std::array<std::int64_t, 4>& base, std::array<std::int64_t, 4>& c, int axis,
                      const std::function<bool(Eigen::Index)>& visit) const
            {
                if (axis == d_)
                {
                    const auto it = cells_.find(key(c));
                    if (it == cells_.end())
                    {
                        return false;
                    }
                    for (const Eigen::Index idx : it->second)
                    {
                        if (visit(idx))
                        {
                            return true;
                        }
                    }
                    return false;
                }
                const auto a = static_cast<std::size_t>(axis);
                for (std::int64_t off = -1; off <= 1; ++off)
                {
                    c[a] = base[a] + off;
                    if (c[a] < 0 || c[a] >= per_axis_)
                    {
                        continue;
                    }
                    if (scan(base, c, axis + 1, visit))
                    {
                        return true;
                    }
                }
                return false;
            }

            int d_;
            double cell_;
            std::int64_t per_axis_ = 0;
            std::unordered_map<std::uint64_t, std::vector<Eigen::Index>> cells_;
        };

        double exclusion_chord(double delta, Metric metric)
        {
            if (metric == Metric::Euclidean)
            {
                return delta;
            }
            return delta >= std::numbers::pi ? 2.0 : chord_from_geodesic(delta);
        }

        // Shared greedy scan; `keep_all` selects the strong variant, where every
        // earlier token (not only kept ones) excludes its neighborhood.
        std::vector<Eigen::Index> greedy_scan(const MatrixXd& points, double delta, Metric metric, bool keep_all)
        {
            if (!(delta > 0.0))
            {
                throw std::invalid_argument("renyi centers: delta must be positive");
            }
            const int d = static_cast<int>(points.rows());
            const Eigen::Index n = points.cols();
            std::vector<Eigen::Index> kept;
            std::vector<Eigen::Index> excluders;
            const double chord = exclusion_chord(delta, metric);

            auto too_close = [&](Eigen::Index k, Eigen::Index j) {
                return !(sphere_distance(points.col(k), points.col(j), metric) > delta);
            };

            if (NeighborGrid::usable(d, chord * (1.0 + 1e-9)))
            {
                NeighborGrid grid(d, chord * (1.0 + 1e-9));
                for (Eigen::Index k = 0; k < n; ++k)
                {
                    const double* x = points.data() + k * d;
                    const bool blocked = grid.any_near(x, [&](Eigen::Index j) { return too_close(k, j); });
                    if (!blocked)
                    {
                        kept.push_back(k);
                    }
                    if (!blocked || keep_all)
                    {
                        grid.insert(x, k);
                    }
                }
                return kept;
            }

            for (Eigen::Index k = 0; k < n; ++k)
            {
                const bool blocked = std::any_of(excluders.begin(), excluders.end(),
                                                 [&](Eigen::Index j) { return too_close(k, j); });
                if (!blocked)
                {
                    kept.push_back(k);
                }
                if (!blocked || keep_all)
                {
                    excluders.push_back(k);
                }
            }
            return kept;
        }

        double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth)
        {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m);
            const double rm = 0.5 * (m + b);
            const double flm = f(lm);
            const double frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const double diff = left + right - whole;
            if (depth <= 0 || std::abs(diff) <= 15.0 * tol)
            {
                return left + right + diff / 15.0;
            }
            return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                   + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
        }

        double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol)
        {
            const double fa = f(a);
            const double fb = f(b);
            const double fm = f(0.5 * (a + b));
            const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            // Coarse magnitude estimate to turn the relative target into an absolute one.
            const double scale = std::max(std::abs(whole), 1e-300);
            return simpson(f, a, b, fa, fm, fb, whole, rel_tol * scale, 50);
        }
    }

    std::string to_string(Metric metric)
    {
        return metric == Metric::Geodesic ? "geodesic" : "euclidean";
    }

    Metric metric_from_string(const std::string& name)
    {
        if (name == "geodesic")
        {
            return Metric::Geodesic;
        }
        if (name == "euclidean")
        {
            return Metric::Euclidean;
        }
        throw std::invalid_argument("unknown metric '" + name + "' (expected geodesic|euclidean)");
    }

    double sphere_distance(const VectorXd& a, const VectorXd& b, Metric metric)
    {
        return metric == Metric::Geodesic ? geodesic_distance(a, b) : (a - b).norm();
    }

    std::vector<Eigen::Index> renyi_centers(const MatrixXd& points, double delta, Metric metric)
    {
        return greedy_scan(points, delta, metric, false);
    }

    std::vector<Eigen::Index> strong_renyi_centers(const MatrixXd& points, double delta, Metric metric)
    {
        return greedy_scan(points, delta, metric, true);
    }

    RenyiReport renyi_report(const MatrixXd& points, double delta, Metric metric)
    {
        RenyiReport r;
        r.delta = delta;
        r.metric = metric;
        r.renyi_indices = renyi_centers(points, delta, metric);
        r.strong_indices = strong_renyi_centers(points, delta, metric);
        return r;
    }

    void attach_horizons(RenyiReport& report, double c, double epsilon, double beta)
    {
        report.horizons.clear();
        for (const Eigen::Index s : report.strong_indices)
        {
            try
            {
                const long token = static_cast<long>(s) + 1;
                report.horizons.push_back({s, metastability_horizon(token, c, epsilon, beta),
                                           metastability_horizon_sufficient(token, c, epsilon, beta)});
            }
            catch (const std::domain_error&)
            {
                // separation below the critical angle: no guarantee to report
            }
        }
    }

    double cap_measure(int d, double delta)
    {
        if (d < 2)
        {
            throw std::invalid_argument("cap_measure: d must be >= 2");
        }
        if (!(delta > 0.0) || delta >= std::numbers::pi)
        {
            throw std::domain_error("cap_measure: delta must lie in (0, pi)");
        }
        if (d == 2)
        {
            return delta / std::numbers::pi;
        }
        const int power = d - 2;
        const auto density = [power](double theta) { return std::pow(std::sin(theta), power); };
        const double cap = adaptive_simpson(density, 0.0, delta, 1e-12);
        const double whole = adaptive_simpson(density, 0.0, std::numbers::pi, 1e-12);
        return cap / whole;
    }

    double expected_strong_count(int d, double delta)
    {
        if (!(delta > 0.0) || delta >= std::numbers::pi)
        {
            throw std::domain_error("expected_strong_count: delta must lie in (0, pi)");
        }
        if (d == 2)
        {
            return std::numbers::pi / delta;
        }
        if (d == 3)
        {
            const double s = std::sin(delta / 2.0);
            return 1.0 / (s * s);
        }
        return 1.0 / cap_measure(d, delta);
    }

    bool MetastabilityResult::all_passed() const
    {
        return violations() == 0;
    }

    int MetastabilityResult::violations() const
    {
        return static_cast<int>(
            std::count_if(centers.begin(), centers.end(), [](const CenterDisplacement& c) { return c.checked && !c.passed; }));
    }

    MetastabilityResult verify_metastability(const Trajectory& traj, const RenyiReport& report, double c,
                                             double epsilon, double beta)
    {
        if (traj.snapshots.empty())
        {
            throw std::invalid_argument("verify_metastability: empty trajectory");
        }
        const auto& p = traj.params;
        const bool planar_identity = p.kind == DynamicsKind::Causal2d;
        const bool causal_identity = p.kind == DynamicsKind::Causal && p.dim() == 2 && p.Q.isIdentity(0.0)
                                     && p.K.isIdentity(0.0) && p.V.isIdentity(0.0);
        if (!planar_identity && !causal_identity)
        {
            throw std::invalid_argument(
                "verify_metastability: requires planar causal dynamics with Q = K = V = I");
        }

        const MatrixXd& x0 = traj.initial().points;
        const double b = 1.0 / std::sqrt(beta);
        const double required = c * (1.0 + 2.0 * epsilon) * b;
        const double bound = epsilon * c * b;

        MetastabilityResult result;
        for (const Eigen::Index s : report.strong_indices)
        {
            CenterDisplacement cd;
            cd.index = s;
            cd.bound = bound;
            cd.separation = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < s; ++i)
            {
                cd.separation = std::min(cd.separation, (x0.col(s) - x0.col(i)).norm());
            }
            if (!(cd.separation > required))
            {
                std::ostringstream msg;
                msg << "skipped: separation " << cd.separation << " <= c(1+2eps)beta^-1/2 = " << required;
                cd.diagnostic = msg.str();
                result.centers.push_back(cd);
                continue;
            }
            try
            {
                cd.horizon = metastability_horizon(static_cast<long>(s) + 1, c, epsilon, beta);
            }
            catch (const std::domain_error& e)
            {
                cd.diagnostic = std::string("skipped: ") + e.what();
                result.centers.push_back(cd);
                continue;
            }
            cd.checked = true;
            for (const auto& snap : traj.snapshots)
            {
                if (snap.time > cd.horizon)
                {
                    break;
                }
                cd.max_displacement = std::max(cd.max_displacement, (snap.points.col(s) - x0.col(s)).norm());
            }
            cd.partial = traj.final().time < cd.horizon;
            result.partial = result.partial || cd.partial;
            cd.passed = cd.max_displacement <= bound;
            std::ostringstream msg;
            msg << "max displacement " << cd.max_displacement << (cd.passed ? " <= " : " > ") << "bound " << bound
                << " over [0, " << std::min(cd.horizon, traj.final().time) << "]" << (cd.partial ? " (partial)" : "");
            cd.diagnostic = msg.str();
            result.centers.push_back(cd);
        }
        return result;
    }
}
