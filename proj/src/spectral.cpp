#include "attnflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace attnflow
{
    namespace
    {
        constexpr double kRankTol = 1e-10;

        struct EigenCluster
        {
            std::complex<double> value;  // representative (Im >= 0)
            int count = 0;               // eigenvalues with Im >= 0 in the cluster
            bool real = true;
        };

        double spectral_radius(const std::vector<std::complex<double>>& ev)
        {
            double r = 0.0;
            for (const auto& l : ev)
            {
                r = std::max(r, std::abs(l));
            }
            return r;
        }

        // Eigenvalues whose real part is within `abs_tol` of the largest,
        // merged into clusters; conjugates are folded into the Im > 0 member.
        std::vector<EigenCluster> top_clusters(const std::vector<std::complex<double>>& ev, double abs_tol,
                                               int& total_count)
        {
            double top = -std::numeric_limits<double>::infinity();
            for (const auto& l : ev)
            {
                top = std::max(top, l.real());
            }
            std::vector<EigenCluster> clusters;
            total_count = 0;
            for (const auto& l : ev)
            {
                if (l.real() < top - abs_tol)
                {
                    continue;
                }
                ++total_count;
                if (l.imag() < -abs_tol)
                {
                    continue;
                }
                const std::complex<double> rep(l.real(), std::abs(l.imag()) <= abs_tol ? 0.0 : l.imag());
                auto it = std::find_if(clusters.begin(), clusters.end(),
                                       [&](const EigenCluster& c) { return std::abs(c.value - rep) <= abs_tol; });
                if (it == clusters.end())
                {
                    clusters.push_back({rep, 1, rep.imag() == 0.0});
                }
                else
                {
                    it->value = (it->value * static_cast<double>(it->count) + rep) / static_cast<double>(it->count + 1);
                    ++it->count;
                }
            }
            std::sort(clusters.begin(), clusters.end(),
                      [](const EigenCluster& a, const EigenCluster& b) { return a.value.imag() < b.value.imag(); });
            return clusters;
        }

        // Real polynomial whose roots are the cluster value (and conjugate).
        MatrixXd cluster_polynomial(const MatrixXd& V, const EigenCluster& c)
        {
            const Eigen::Index d = V.rows();
            const MatrixXd I = MatrixXd::Identity(d, d);
            if (c.real)
            {
                return V - c.value.real() * I;
            }
            const double a = c.value.real();
            const double b = c.value.imag();
            return V * V - 2.0 * a * V + (a * a + b * b) * I;
        }

        MatrixXd null_space(const MatrixXd& A, double threshold)
        {
            Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            Eigen::Index rank = 0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
            {
                if (sv[i] > threshold)
                {
                    ++rank;
                }
            }
            return svd.matrixV().rightCols(A.cols() - rank);
        }

        MatrixXd orthonormal_range(const MatrixXd& A)
        {
            if (A.cols() == 0)
            {
                return MatrixXd(A.rows(), 0);
            }
            Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU);
            const auto& sv = svd.singularValues();
            const double top = sv.size() > 0 ? sv[0] : 0.0;
            Eigen::Index rank = 0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
            {
                if (sv[i] > kRankTol * std::max(top, 1e-300))
                {
                    ++rank;
                }
            }
            return svd.matrixU().leftCols(rank);
        }

        MatrixXd hstack(const std::vector<MatrixXd>& blocks, Eigen::Index rows)
        {
            Eigen::Index cols = 0;
            for (const auto& b : blocks)
            {
                cols += b.cols();
            }
            MatrixXd out(rows, cols);
            Eigen::Index at = 0;
            for (const auto& b : blocks)
            {
                out.middleCols(at, b.cols()) = b;
                at += b.cols();
            }
            return out;
        }

        std::vector<std::complex<double>> eigenvalues_of(const MatrixXd& V)
        {
            if (V.rows() != V.cols() || V.rows() == 0)
            {
                throw std::invalid_argument("spectral analysis requires a non-empty square matrix");
            }
            if (!V.allFinite())
            {
                throw std::invalid_argument("spectral analysis requires finite entries");
            }
            Eigen::EigenSolver<MatrixXd> solver(V, false);
            if (solver.info() != Eigen::Success)
            {
                throw std::runtime_error("eigenvalue computation did not converge");
            }
            std::vector<std::complex<double>> ev(solver.eigenvalues().data(),
                                                 solver.eigenvalues().data() + solver.eigenvalues().size());
            return ev;
        }

        FinalConfiguration predict_row(const SpectralClassification& cls, double abs_tol, Eigen::Index d)
        {
            if (!cls.is_real)
            {
                return FinalConfiguration::ComplexRotating;
            }
            if (std::abs(cls.lambda_max.real()) <= abs_tol || cls.max_jordan_block > 1)
            {
                return FinalConfiguration::Indeterminate;
            }
            if (cls.lambda_max.real() > 0.0)
            {
                if (cls.multiplicity == d)
                {
                    return FinalConfiguration::CollapseToFirst;
                }
                return cls.multiplicity >= 2 ? FinalConfiguration::OnePointInL : FinalConfiguration::TwoPointsPmXi;
            }
            return cls.multiplicity >= 2 ? FinalConfiguration::CloudAroundL : FinalConfiguration::TwoClouds;
        }

        void fill_top(SpectralClassification& cls, const std::vector<EigenCluster>& clusters, int count)
        {
            cls.multiplicity = count;
            cls.is_real = std::all_of(clusters.begin(), clusters.end(), [](const EigenCluster& c) { return c.real; });
            // Representative: the cluster with the largest imaginary part.
            cls.lambda_max = clusters.back().value;
        }

        struct LinearFit
        {
            double slope = 0.0;
            double intercept = 0.0;
            double r_squared = 0.0;
        };

        LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
        {
            const double n = static_cast<double>(x.size());
            double mx = 0.0;
            double my = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                mx += x[i];
                my += y[i];
            }
            mx /= n;
            my /= n;
            double sxx = 0.0;
            double sxy = 0.0;
            double syy = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                sxx += (x[i] - mx) * (x[i] - mx);
                sxy += (x[i] - mx) * (y[i] - my);
                syy += (y[i] - my) * (y[i] - my);
            }
            LinearFit fit;
            fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
            fit.intercept = my - fit.slope * mx;
            fit.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 0.0;
            return fit;
        }
    }

    std::string to_string(FinalConfiguration row)
    {
        switch (row)
        {
            case FinalConfiguration::CollapseToFirst:
                return "CollapseToFirst";
            case FinalConfiguration::OnePointInL:
                return "OnePointInL";
            case FinalConfiguration::TwoPointsPmXi:
                return "TwoPointsPmXi";
            case FinalConfiguration::CloudAroundL:
                return "CloudAroundL";
            case FinalConfiguration::TwoClouds:
                return "TwoClouds";
            case FinalConfiguration::ComplexRotating:
                return "ComplexRotating";
            case FinalConfiguration::Indeterminate:
                return "Indeterminate";
        }
        return "Indeterminate";
    }

    std::string status_of(FinalConfiguration row)
    {
        return row == FinalConfiguration::CollapseToFirst ? "proved" : "conjectured";
    }

    std::string to_string(RateType type)
    {
        return type == RateType::Exponential ? "exponential" : "linear";
    }

    SpectralClassification dominant_subspaces(const MatrixXd& V, double tol)
    {
        const auto ev = eigenvalues_of(V);
        const Eigen::Index d = V.rows();
        const double abs_tol = tol * spectral_radius(ev);

        SpectralClassification cls;
        cls.eigenvalues = ev;
        int count = 0;
        const auto clusters = top_clusters(ev, abs_tol, count);
        fill_top(cls, clusters, count);

        const double vnorm = std::max(V.norm(), 1e-300);
        std::vector<MatrixXd> generalized;
        std::vector<int> index;
        std::vector<MatrixXd> polys;
        for (const auto& c : clusters)
        {
            const MatrixXd p = cluster_polynomial(V, c);
            const double p_scale = c.real ? vnorm : vnorm * vnorm;
            MatrixXd power = MatrixXd::Identity(d, d);
            MatrixXd full_null;
            Eigen::Index full_dim = -1;
            int k_index = c.count;
            std::vector<Eigen::Index> nullity;
            for (int k = 1; k <= c.count; ++k)
            {
                power = power * p;
                const MatrixXd ns = null_space(power, kRankTol * std::pow(p_scale, k));
                nullity.push_back(ns.cols());
                full_null = ns;
            }
            full_dim = nullity.back();
            for (int k = 1; k <= c.count; ++k)
            {
                if (nullity[static_cast<std::size_t>(k - 1)] == full_dim)
                {
                    k_index = k;
                    break;
                }
            }
            generalized.push_back(full_null);
            index.push_back(k_index);
            polys.push_back(p);
        }

        cls.Lprime_basis = orthonormal_range(hstack(generalized, d));
        cls.max_jordan_block = *std::max_element(index.begin(), index.end());

        std::vector<MatrixXd> tops;
        for (std::size_t i = 0; i < clusters.size(); ++i)
        {
            if (index[i] != cls.max_jordan_block)
            {
                continue;
            }
            MatrixXd lead = generalized[i];
            for (int k = 1; k < cls.max_jordan_block; ++k)
            {
                lead = polys[i] * lead;
            }
            tops.push_back(lead);
        }
        cls.L_basis = orthonormal_range(hstack(tops, d));
        return cls;
    }

    SpectralClassification classify_value_matrix(const MatrixXd& V, double tol)
    {
        SpectralClassification cls = dominant_subspaces(V, tol);
        const double abs_tol = tol * spectral_radius(cls.eigenvalues);
        cls.predicted_row = spectral_radius(cls.eigenvalues) == 0.0 ? FinalConfiguration::Indeterminate
                                                                    : predict_row(cls, abs_tol, V.rows());
        return cls;
    }

    SpectralClassification classify_eigenvalues(const std::vector<std::complex<double>>& eigenvalues, double tol)
    {
        if (eigenvalues.empty())
        {
            throw std::invalid_argument("classify_eigenvalues: empty spectrum");
        }
        SpectralClassification cls;
        cls.eigenvalues = eigenvalues;
        const double radius = spectral_radius(eigenvalues);
        const double abs_tol = tol * radius;
        int count = 0;
        const auto clusters = top_clusters(eigenvalues, abs_tol, count);
        fill_top(cls, clusters, count);
        cls.max_jordan_block = 1;
        cls.predicted_row = radius == 0.0
                                ? FinalConfiguration::Indeterminate
                                : predict_row(cls, abs_tol, static_cast<Eigen::Index>(eigenvalues.size()));
        return cls;
    }

    bool one_cluster_hypothesis_holds(const MatrixXd& V, const SpectralClassification& cls)
    {
        const Eigen::Index d = V.rows();
        const MatrixXd& L = cls.L_basis;
        if (L.cols() == d)
        {
            return true;
        }
        // Orthonormal basis of L^perp.
        const MatrixXd W = null_space(L.transpose(), kRankTol);
        const double scale = std::max(V.norm(), 1e-300);
        if ((L.transpose() * V * W).norm() > kRankTol * scale)
        {
            return false;
        }
        const MatrixXd sym = 0.5 * W.transpose() * (V + V.transpose()) * W;
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
        return es.eigenvalues().maxCoeff() < cls.lambda_max.real() - kRankTol * scale;
    }

    double distance_to_subspace(const VectorXd& x, const MatrixXd& basis)
    {
        if (basis.rows() != x.size())
        {
            throw std::invalid_argument("distance_to_subspace: dimension mismatch");
        }
        const VectorXd inside = basis * (basis.transpose() * x);
        return std::atan2((x - inside).norm(), inside.norm());
    }

    RateFit fit_convergence_rate(const Trajectory& traj, const MatrixXd& target, double t0, double t1)
    {
        std::vector<double> ts;
        std::vector<double> dists;
        for (const auto& snap : traj.snapshots)
        {
            if (snap.size() != 1)
            {
                throw std::invalid_argument("fit_convergence_rate: trajectory must contain a single token");
            }
            if (snap.time < t0 || snap.time > t1)
            {
                continue;
            }
            const double dist = distance_to_subspace(snap.points.col(0), target);
            if (dist < 1e-14)
            {
                throw std::domain_error("fit_convergence_rate: token already lies in the target subspace");
            }
            ts.push_back(snap.time);
            dists.push_back(dist);
        }
        if (ts.size() < 3)
        {
            throw std::invalid_argument("fit_convergence_rate: fewer than 3 snapshots in the window");
        }
        if (ts.front() <= 0.0)
        {
            throw std::invalid_argument("fit_convergence_rate: window must start after t = 0");
        }

        std::vector<double> log_d(dists.size());
        std::vector<double> inv_t(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i)
        {
            log_d[i] = std::log(dists[i]);
            inv_t[i] = 1.0 / ts[i];
        }
        const LinearFit expo = least_squares(ts, log_d);
        const LinearFit lin = least_squares(inv_t, dists);

        RateFit out;
        out.exponential_rate = expo.slope;
        out.exponential_r_squared = expo.r_squared;
        out.linear_coefficient = lin.slope;
        out.linear_r_squared = lin.r_squared;
        if (expo.r_squared >= lin.r_squared)
        {
            out.type = RateType::Exponential;
            out.rate = expo.slope;
            out.r_squared = expo.r_squared;
        }
        else
        {
            out.type = RateType::Linear;
            out.rate = lin.slope;
            out.r_squared = lin.r_squared;
        }
        return out;
    }
}
