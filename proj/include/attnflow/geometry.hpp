#pragma once

// Primitives on the unit sphere S^{d-1} embedded in R^d.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace attnflow
{
    template <typename Scalar>
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    template <typename Scalar>
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    using VectorXd = Vector<double>;
    using MatrixXd = Matrix<double>;

    /// Smallest norm renormalize() accepts before declaring a blow-up.
    inline constexpr double kMinNormalizableNorm = 1e-14;

    namespace detail
    {
        template <typename A, typename B>
        void require_same_size(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, const char* what)
        {
            if (a.size() != b.size())
            {
                throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a.size())
                                            + " vs " + std::to_string(b.size()) + ")");
            }
        }
    }

    /// A point of S^{d-1}. Construction goes through renormalize(), so the
    /// unit-norm invariant holds for every instance.
    template <typename Scalar = double>
    class UnitVector
    {
      public:
        using VectorType = Vector<Scalar>;

        const VectorType& coords() const noexcept
        {
            return coords_;
        }

        Eigen::Index dim() const noexcept
        {
            return coords_.size();
        }

        Scalar operator[](Eigen::Index i) const
        {
            return coords_[i];
        }

        template <typename S, typename Derived>
        friend UnitVector<S> renormalize_as(const Eigen::MatrixBase<Derived>& x);

      private:
        explicit UnitVector(VectorType v)
            : coords_(std::move(v))
        {
        }

        VectorType coords_;
    };

    /// Tangent vector at `base`; `dir` is orthogonal to base.
    template <typename Scalar = double>
    struct TangentVector
    {
        UnitVector<Scalar> base;
        Vector<Scalar> dir;
    };

    template <typename Scalar, typename Derived>
    UnitVector<Scalar> renormalize_as(const Eigen::MatrixBase<Derived>& x)
    {
        if (x.size() < 2)
        {
            throw std::invalid_argument("renormalize: sphere dimension d must be >= 2");
        }
        const Scalar norm = x.template cast<Scalar>().norm();
        if (!(norm > Scalar(kMinNormalizableNorm)) || !std::isfinite(static_cast<double>(norm)))
        {
            throw std::domain_error("renormalize: vector norm " + std::to_string(static_cast<double>(norm))
                                    + " cannot be projected onto the sphere");
        }
        return UnitVector<Scalar>(x.template cast<Scalar>() / norm);
    }

    /// x / |x|. Throws std::domain_error when |x| <= 1e-14 (integrator blow-up).
    template <typename Derived>
    UnitVector<typename Derived::Scalar> renormalize(const Eigen::MatrixBase<Derived>& x)
    {
        return renormalize_as<typename Derived::Scalar>(x);
    }

    /// y - <x, y> x, the component of y tangent to the sphere at x.
    template <typename DerivedX, typename DerivedY>
    auto tangent_part(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y)
    {
        return (y - x.dot(y) * x).eval();
    }

    template <typename Scalar, typename Derived>
    TangentVector<Scalar> project_tangent(const UnitVector<Scalar>& x, const Eigen::MatrixBase<Derived>& y)
    {
        detail::require_same_size(x.coords(), y, "project_tangent");
        return {x, tangent_part(x.coords(), y)};
    }

    /// Geodesic (great-circle) distance in [0, pi] between two points of the
    /// sphere given as raw coordinate vectors.
    ///
    /// The inner product is clamped to [-1, 1]. For nearly coincident points
    /// the chord form 2 asin(|a - b| / 2) is used, which keeps full relative
    /// precision where arccos(1 - u) does not.
    template <typename DerivedA, typename DerivedB>
    typename DerivedA::Scalar geodesic_distance(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b)
    {
        using Scalar = typename DerivedA::Scalar;
        const Scalar c = std::clamp(a.dot(b), Scalar(-1), Scalar(1));
        if (c > Scalar(0.9))
        {
            const Scalar half_chord = std::min(Scalar(1), (a - b).norm() / Scalar(2));
            return Scalar(2) * std::asin(half_chord);
        }
        return std::acos(c);
    }

    template <typename Scalar>
    Scalar geodesic_dist(const UnitVector<Scalar>& a, const UnitVector<Scalar>& b)
    {
        detail::require_same_size(a.coords(), b.coords(), "geodesic_dist");
        return geodesic_distance(a.coords(), b.coords());
    }

    /// Chord length corresponding to a geodesic distance (monotone on [0, pi]).
    template <typename Scalar>
    Scalar chord_from_geodesic(Scalar angle)
    {
        return Scalar(2) * std::sin(angle / Scalar(2));
    }

    /// n i.i.d. uniform points on S^{d-1} as the columns of a d x n matrix
    /// (normalized standard Gaussian vectors; deterministic for a seed).
    inline MatrixXd sample_uniform_points(std::uint64_t seed, int d, int n)
    {
        if (d < 2)
        {
            throw std::invalid_argument("sample_uniform: d must be >= 2");
        }
        if (n < 0)
        {
            throw std::invalid_argument("sample_uniform: n must be non-negative");
        }
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        MatrixXd points(d, n);
        for (int k = 0; k < n; ++k)
        {
            double norm = 0.0;
            do
            {
                for (int i = 0; i < d; ++i)
                {
                    points(i, k) = normal(rng);
                }
                norm = points.col(k).norm();
            } while (norm <= kMinNormalizableNorm);
            points.col(k) /= norm;
        }
        return points;
    }

    inline std::vector<UnitVector<double>> sample_uniform(std::uint64_t seed, int d, int n)
    {
        const MatrixXd points = sample_uniform_points(seed, d, n);
        std::vector<UnitVector<double>> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
        {
            out.push_back(renormalize(points.col(k)));
        }
        return out;
    }

    /// Columns of `points` rescaled to unit norm in place.
    inline void renormalize_columns(MatrixXd& points)
    {
        for (Eigen::Index k = 0; k < points.cols(); ++k)
        {
            const double norm = points.col(k).norm();
            if (!(norm > kMinNormalizableNorm) || !std::isfinite(norm))
            {
                throw std::domain_error("renormalize: token " + std::to_string(k) + " has norm "
                                        + std::to_string(norm));
            }
            points.col(k) /= norm;
        }
    }

    /// Unit circle point (cos phi, sin phi).
    inline VectorXd circle_point(double phi)
    {
        VectorXd p(2);
        p << std::cos(phi), std::sin(phi);
        return p;
    }
}
