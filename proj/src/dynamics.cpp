#include "attnflow/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

namespace attnflow
{
    namespace
    {
        constexpr double kEigenConditionLimit = 1e6;
        constexpr double kMinFlowNorm = 1e-300;

        bool all_finite(const MatrixXd& m)
        {
            return m.allFinite();
        }

        bool is_identity(const MatrixXd& m)
        {
            return m.rows() == m.cols() && m == MatrixXd::Identity(m.rows(), m.cols());
        }

        /// Sequential or Kahan-compensated running sum.
        template <bool Compensated>
        struct Sum
        {
            double value = 0.0;
            double carry = 0.0;

            void add(double x)
            {
                if constexpr (Compensated)
                {
                    const double y = x - carry;
                    const double t = value + y;
                    carry = (t - value) - y;
                    value = t;
                }
                else
                {
                    value += x;
                }
            }
        };

        // x_k -> M x_k column by column with a fixed inner loop order, so that
        // column k never depends on the other columns.
        MatrixXd apply_columns(const MatrixXd& M, const MatrixXd& X)
        {
            const Eigen::Index d = X.rows();
            MatrixXd out(M.rows(), X.cols());
            for (Eigen::Index k = 0; k < X.cols(); ++k)
            {
                const double* x = X.data() + k * d;
                for (Eigen::Index i = 0; i < M.rows(); ++i)
                {
                    double s = 0.0;
                    for (Eigen::Index l = 0; l < d; ++l)
                    {
                        s += M(i, l) * x[l];
                    }
                    out(i, k) = s;
                }
            }
            return out;
        }

        template <bool Compensated>
        MatrixXd attention_field_impl(const MatrixXd& X, const SystemParams& p, bool causal)
        {
            const Eigen::Index d = X.rows();
            const Eigen::Index n = X.cols();
            const MatrixXd QX = apply_columns(p.Q, X);
            const MatrixXd KX = apply_columns(p.K, X);
            const MatrixXd VX = apply_columns(p.V, X);

            MatrixXd out(d, n);
            std::vector<double> logits(static_cast<std::size_t>(n));
            std::vector<Sum<Compensated>> acc(static_cast<std::size_t>(d));
            std::vector<double> u(static_cast<std::size_t>(d));

            for (Eigen::Index k = 0; k < n; ++k)
            {
                const Eigen::Index last = causal ? k : n - 1;
                const double* qk = QX.data() + k * d;
                double top = -std::numeric_limits<double>::infinity();
                for (Eigen::Index j = 0; j <= last; ++j)
                {
                    const double* kj = KX.data() + j * d;
                    double dot = 0.0;
                    for (Eigen::Index i = 0; i < d; ++i)
                    {
                        dot += qk[i] * kj[i];
                    }
                    const double logit = p.beta * dot;
                    logits[static_cast<std::size_t>(j)] = logit;
                    top = std::max(top, logit);
                }

                Sum<Compensated> z;
                for (auto& a : acc)
                {
                    a = {};
                }
                for (Eigen::Index j = 0; j <= last; ++j)
                {
                    const double w = std::exp(logits[static_cast<std::size_t>(j)] - top);
                    z.add(w);
                    const double* vj = VX.data() + j * d;
                    for (Eigen::Index i = 0; i < d; ++i)
                    {
                        acc[static_cast<std::size_t>(i)].add(w * vj[i]);
                    }
                }

                const double* xk = X.data() + k * d;
                double radial = 0.0;
                for (Eigen::Index i = 0; i < d; ++i)
                {
                    u[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)].value / z.value;
                    radial += xk[i] * u[static_cast<std::size_t>(i)];
                }
                for (Eigen::Index i = 0; i < d; ++i)
                {
                    out(i, k) = u[static_cast<std::size_t>(i)] - radial * xk[i];
                }
            }
            return out;
        }

        // Numerator and normalizer of the planar rates; h(phi_j - phi_k) is
        // assembled from precomputed cos/sin through the difference formulas.
        template <bool Compensated>
        VectorXd planar_field_impl(const VectorXd& angles, double beta, const std::vector<FrozenCenter>* centers)
        {
            const Eigen::Index n = angles.size();
            VectorXd c(n);
            VectorXd s(n);
            for (Eigen::Index k = 0; k < n; ++k)
            {
                c[k] = std::cos(angles[k]);
                s[k] = std::sin(angles[k]);
            }
            std::vector<double> cc;
            std::vector<double> cs;
            if (centers != nullptr)
            {
                for (const auto& center : *centers)
                {
                    cc.push_back(std::cos(center.angle));
                    cs.push_back(std::sin(center.angle));
                }
            }

            VectorXd rate(n);
            for (Eigen::Index k = 0; k < n; ++k)
            {
                Sum<Compensated> z;
                Sum<Compensated> num;
                z.add(1.0);
                for (Eigen::Index j = 0; j < k; ++j)
                {
                    const double cosd = c[j] * c[k] + s[j] * s[k];
                    const double sind = s[j] * c[k] - c[j] * s[k];
                    const double w = std::exp(beta * (cosd - 1.0));
                    z.add(w);
                    num.add(w * sind);
                }
                if (centers != nullptr)
                {
                    for (std::size_t m = 0; m < cc.size(); ++m)
                    {
                        const double cosd = cc[m] * c[k] + cs[m] * s[k];
                        const double sind = cs[m] * c[k] - cc[m] * s[k];
                        const double w = (*centers)[m].weight * std::exp(beta * (cosd - 1.0));
                        z.add(w);
                        num.add(w * sind);
                    }
                }
                rate[k] = num.value / z.value;
            }
            return rate;
        }

        std::vector<TangentVector<double>> as_tangent_list(const MatrixXd& points, const MatrixXd& field)
        {
            std::vector<TangentVector<double>> out;
            out.reserve(static_cast<std::size_t>(points.cols()));
            for (Eigen::Index k = 0; k < points.cols(); ++k)
            {
                out.push_back({renormalize(points.col(k)), field.col(k)});
            }
            return out;
        }
    }

    std::string to_string(DynamicsKind kind)
    {
        switch (kind)
        {
            case DynamicsKind::Full:
                return "full";
            case DynamicsKind::Causal:
                return "causal";
            case DynamicsKind::Causal2d:
                return "causal2d";
            case DynamicsKind::FrozenCenters:
                return "frozen";
        }
        return "unknown";
    }

    DynamicsKind dynamics_kind_from_string(const std::string& name)
    {
        if (name == "full")
        {
            return DynamicsKind::Full;
        }
        if (name == "causal")
        {
            return DynamicsKind::Causal;
        }
        if (name == "causal2d")
        {
            return DynamicsKind::Causal2d;
        }
        if (name == "frozen")
        {
            return DynamicsKind::FrozenCenters;
        }
        throw std::invalid_argument("unknown dynamics kind '" + name + "' (expected full|causal|causal2d|frozen)");
    }

    void SystemParams::validate() const
    {
        const Eigen::Index d = V.rows();
        if (d < 2)
        {
            throw std::invalid_argument("SystemParams: dimension must be >= 2");
        }
        for (const MatrixXd* m : {&Q, &K, &V})
        {
            if (m->rows() != d || m->cols() != d)
            {
                throw std::invalid_argument("SystemParams: Q, K, V must all be " + std::to_string(d) + "x"
                                            + std::to_string(d));
            }
            if (!all_finite(*m))
            {
                throw std::invalid_argument("SystemParams: matrix entries must be finite");
            }
        }
        if (!(beta > 0.0) || !std::isfinite(beta))
        {
            throw std::invalid_argument("SystemParams: beta must be positive and finite");
        }
        if (is_planar(kind))
        {
            if (d != 2 || !is_identity(Q) || !is_identity(K) || !is_identity(V))
            {
                throw std::invalid_argument("SystemParams: " + to_string(kind) + " requires d = 2 and Q = K = V = I");
            }
        }
        if ((kind == DynamicsKind::FrozenCenters) != !frozen.empty())
        {
            throw std::invalid_argument("SystemParams: frozen centers must be given exactly for the frozen kind");
        }
        for (const auto& center : frozen)
        {
            if (!(center.weight >= 1.0) || !std::isfinite(center.angle))
            {
                throw std::invalid_argument("SystemParams: frozen weights must be >= 1 and angles finite");
            }
        }
    }

    SystemParams SystemParams::identity(int d, double beta, DynamicsKind kind)
    {
        SystemParams p;
        p.Q = MatrixXd::Identity(d, d);
        p.K = MatrixXd::Identity(d, d);
        p.V = MatrixXd::Identity(d, d);
        p.beta = beta;
        p.kind = kind;
        return p;
    }

    ParticleState ParticleState::from_points(MatrixXd points, double time)
    {
        renormalize_columns(points);
        ParticleState s;
        s.points = std::move(points);
        s.time = time;
        return s;
    }

    ParticleState ParticleState::from_angles(VectorXd angles, double time)
    {
        ParticleState s;
        s.points.resize(2, angles.size());
        for (Eigen::Index k = 0; k < angles.size(); ++k)
        {
            s.points(0, k) = std::cos(angles[k]);
            s.points(1, k) = std::sin(angles[k]);
        }
        s.angles = std::move(angles);
        s.time = time;
        return s;
    }

    VectorXd angles_of(const MatrixXd& points)
    {
        if (points.rows() != 2)
        {
            throw std::invalid_argument("angles_of: points must be 2-dimensional");
        }
        VectorXd out(points.cols());
        for (Eigen::Index k = 0; k < points.cols(); ++k)
        {
            out[k] = std::atan2(points(1, k), points(0, k));
        }
        return out;
    }

    MatrixXd attention_field(const MatrixXd& points, const SystemParams& params, bool causal)
    {
        if (points.rows() != params.dim())
        {
            throw std::invalid_argument("attention_field: state dimension does not match parameters");
        }
        if (!all_finite(params.Q) || !all_finite(params.K) || !all_finite(params.V))
        {
            throw std::invalid_argument("attention_field: matrix entries must be finite");
        }
        return params.compensated_sum ? attention_field_impl<true>(points, params, causal)
                                      : attention_field_impl<false>(points, params, causal);
    }

    std::vector<TangentVector<double>> csa_velocity(const ParticleState& state, const SystemParams& params)
    {
        if (params.kind != DynamicsKind::Causal)
        {
            throw std::invalid_argument("csa_velocity: parameters are not of the causal kind");
        }
        return as_tangent_list(state.points, attention_field(state.points, params, true));
    }

    std::vector<TangentVector<double>> sa_velocity(const ParticleState& state, const SystemParams& params)
    {
        if (params.kind != DynamicsKind::Full)
        {
            throw std::invalid_argument("sa_velocity: parameters are not of the full kind");
        }
        return as_tangent_list(state.points, attention_field(state.points, params, false));
    }

    VectorXd csa2d_velocity(const VectorXd& angles, double beta, bool compensated)
    {
        return compensated ? planar_field_impl<true>(angles, beta, nullptr)
                           : planar_field_impl<false>(angles, beta, nullptr);
    }

    VectorXd frozen_velocity(const VectorXd& angles, double beta, const std::vector<FrozenCenter>& centers,
                             bool compensated)
    {
        if (centers.empty())
        {
            throw std::invalid_argument("frozen_velocity: at least one frozen center is required");
        }
        return compensated ? planar_field_impl<true>(angles, beta, &centers)
                           : planar_field_impl<false>(angles, beta, &centers);
    }

    MatrixXd velocity(const ParticleState& state, const SystemParams& params)
    {
        switch (params.kind)
        {
            case DynamicsKind::Full:
                return attention_field(state.points, params, false);
            case DynamicsKind::Causal:
                return attention_field(state.points, params, true);
            case DynamicsKind::Causal2d:
            case DynamicsKind::FrozenCenters:
            {
                const VectorXd angles = state.has_angles() ? state.angles : angles_of(state.points);
                const VectorXd rate = params.kind == DynamicsKind::Causal2d
                                          ? csa2d_velocity(angles, params.beta, params.compensated_sum)
                                          : frozen_velocity(angles, params.beta, params.frozen, params.compensated_sum);
                MatrixXd out(2, angles.size());
                for (Eigen::Index k = 0; k < angles.size(); ++k)
                {
                    out(0, k) = -std::sin(angles[k]) * rate[k];
                    out(1, k) = std::cos(angles[k]) * rate[k];
                }
                return out;
            }
        }
        throw std::logic_error("velocity: unhandled dynamics kind");
    }

    double max_velocity_norm(const ParticleState& state, const SystemParams& params)
    {
        if (state.size() == 0)
        {
            return 0.0;
        }
        return velocity(state, params).cwiseAbs().maxCoeff();
    }

    LinearFlow::LinearFlow(const MatrixXd& V)
        : V_(V)
    {
        if (V.rows() != V.cols() || V.rows() < 1)
        {
            throw std::invalid_argument("LinearFlow: V must be square");
        }
        if (!V.allFinite())
        {
            throw std::invalid_argument("LinearFlow: V must be finite");
        }
        Eigen::EigenSolver<MatrixXd> solver(V, true);
        if (solver.info() == Eigen::Success)
        {
            eigvals_ = solver.eigenvalues();
            eigvecs_ = solver.eigenvectors();
            shift_ = eigvals_.real().maxCoeff();
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(eigvecs_);
            const auto& sv = svd.singularValues();
            const double smin = sv[sv.size() - 1];
            condition_ = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
            use_eigen_ = condition_ < kEigenConditionLimit;
            if (use_eigen_)
            {
                eigvecs_lu_.compute(eigvecs_);
            }
        }
        else
        {
            shift_ = 0.0;
            condition_ = std::numeric_limits<double>::infinity();
        }
    }

    VectorXd LinearFlow::operator()(const VectorXd& x0, double t) const
    {
        if (x0.size() != V_.rows())
        {
            throw std::invalid_argument("LinearFlow: x0 dimension mismatch");
        }
        if (t < 0.0)
        {
            throw std::invalid_argument("LinearFlow: t must be non-negative");
        }
        VectorXd y;
        if (use_eigen_)
        {
            const Eigen::VectorXcd coeffs = eigvecs_lu_.solve(x0.cast<std::complex<double>>());
            Eigen::VectorXcd scaled(coeffs.size());
            for (Eigen::Index i = 0; i < coeffs.size(); ++i)
            {
                scaled[i] = std::exp((eigvals_[i] - shift_) * t) * coeffs[i];
            }
            y = (eigvecs_ * scaled).real();
        }
        else
        {
            const MatrixXd shifted = t * (V_ - shift_ * MatrixXd::Identity(V_.rows(), V_.cols()));
            y = shifted.exp() * x0;
        }
        const double norm = y.norm();
        if (!(norm > 0.0) || !std::isfinite(norm) || std::log(norm) + shift_ * t < std::log(kMinFlowNorm))
        {
            throw std::domain_error("single_token_closed_form: |exp(tV) x0| underflows below 1e-300");
        }
        return y / norm;
    }

    UnitVector<double> single_token_closed_form(const MatrixXd& V, const UnitVector<double>& x0, double t)
    {
        if (x0.dim() != V.rows())
        {
            throw std::invalid_argument("single_token_closed_form: dimension mismatch");
        }
        return renormalize(LinearFlow(V)(x0.coords(), t));
    }
}
