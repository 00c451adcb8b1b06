#include "attnflow/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace attnflow
{
    namespace
    {
        // Flattened state: d x n points, or 1 x n angles for planar kinds.
        struct Flow
        {
            const SystemParams& params;
            bool planar;

            void rate(const MatrixXd& y, MatrixXd& dy) const
            {
                if (planar)
                {
                    const VectorXd angles = y.row(0).transpose();
                    const VectorXd r = params.kind == DynamicsKind::Causal2d
                                           ? csa2d_velocity(angles, params.beta, params.compensated_sum)
                                           : frozen_velocity(angles, params.beta, params.frozen, params.compensated_sum);
                    dy = r.transpose();
                }
                else
                {
                    dy = attention_field(y, params, params.kind != DynamicsKind::Full);
                }
            }

            ParticleState state(const MatrixXd& y, double t) const
            {
                if (planar)
                {
                    return ParticleState::from_angles(y.row(0).transpose(), t);
                }
                ParticleState s;
                s.points = y;
                s.time = t;
                return s;
            }
        };

        void check_finite(const MatrixXd& y, double t)
        {
            if (!y.allFinite())
            {
                std::ostringstream msg;
                msg << "non-finite state detected at t = " << t;
                throw NumericalError(msg.str(), t);
            }
        }

        void project(const Flow& flow, const IntegratorConfig& config, MatrixXd& y, double t)
        {
            check_finite(y, t);
            if (!flow.planar && config.renormalize_every_step)
            {
                try
                {
                    renormalize_columns(y);
                }
                catch (const std::domain_error& e)
                {
                    throw NumericalError(std::string(e.what()) + " at t = " + std::to_string(t), t);
                }
            }
        }

        class Stepper
        {
          public:
            explicit Stepper(const Flow& flow)
                : flow_(flow)
            {
            }

            void euler(MatrixXd& y, double h)
            {
                flow_.rate(y, k1_);
                y += h * k1_;
            }

            void rk4(MatrixXd& y, double h)
            {
                flow_.rate(y, k1_);
                tmp_ = y + (0.5 * h) * k1_;
                flow_.rate(tmp_, k2_);
                tmp_ = y + (0.5 * h) * k2_;
                flow_.rate(tmp_, k3_);
                tmp_ = y + h * k3_;
                flow_.rate(tmp_, k4_);
                y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
            }

            // Dormand-Prince 5(4). Writes the 5th-order solution to `out` and
            // returns the scaled error norm.
            double dopri(const MatrixXd& y, double h, double rtol, double atol, MatrixXd& out)
            {
                static constexpr double a21 = 1.0 / 5.0;
                static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
                static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
                static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                                        a54 = -212.0 / 729.0;
                static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
                static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                                        b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
                static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

                flow_.rate(y, k1_);
                tmp_ = y + h * a21 * k1_;
                flow_.rate(tmp_, k2_);
                tmp_ = y + h * (a31 * k1_ + a32 * k2_);
                flow_.rate(tmp_, k3_);
                tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
                flow_.rate(tmp_, k4_);
                tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
                flow_.rate(tmp_, k5_);
                tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
                flow_.rate(tmp_, k6_);
                out = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
                flow_.rate(out, k7_);
                const MatrixXd err = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

                double worst = 0.0;
                for (Eigen::Index i = 0; i < err.size(); ++i)
                {
                    const double scale = atol + rtol * std::max(std::abs(y.data()[i]), std::abs(out.data()[i]));
                    worst = std::max(worst, std::abs(err.data()[i]) / scale);
                }
                return worst;
            }

          private:
            const Flow& flow_;
            MatrixXd k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_;
        };

        Trajectory run(const SystemParams& params, const ParticleState& initial, const IntegratorConfig& config,
                       const StopPredicate* stop, std::uint64_t seed)
        {
            params.validate();
            config.validate();
            if (initial.dim() != params.dim() && !(is_planar(params.kind) && initial.has_angles()))
            {
                throw std::invalid_argument("integrate: initial state dimension does not match parameters");
            }

            const Flow flow{params, is_planar(params.kind)};
            MatrixXd y;
            if (flow.planar)
            {
                const VectorXd angles = initial.has_angles() ? initial.angles : angles_of(initial.points);
                y = angles.transpose();
            }
            else
            {
                y = initial.points;
            }
            check_finite(y, 0.0);

            Trajectory traj;
            traj.params = params;
            traj.config = config;
            traj.seed = seed;
            traj.snapshots.push_back(flow.state(y, 0.0));
            if (stop != nullptr && (*stop)(traj.snapshots.back()))
            {
                traj.termination = Termination::StopPredicate;
                return traj;
            }

            Stepper stepper(flow);
            auto record = [&](double t, long step, bool last) {
                if (last || step % config.record_every == 0)
                {
                    traj.snapshots.push_back(flow.state(y, t));
                    if (stop != nullptr && (*stop)(traj.snapshots.back()))
                    {
                        traj.termination = Termination::StopPredicate;
                        return true;
                    }
                }
                return false;
            };

            if (config.method == Method::RK45Adaptive)
            {
                double t = 0.0;
                double h = config.dt;
                long accepted = 0;
                MatrixXd candidate;
                const double h_min = 1e-14 * std::max(1.0, config.t_end);
                while (t < config.t_end)
                {
                    const bool last = t + h >= config.t_end;
                    const double step = last ? config.t_end - t : h;
                    const double err = stepper.dopri(y, step, config.rtol, config.atol, candidate);
                    if (!std::isfinite(err))
                    {
                        throw NumericalError("non-finite error estimate at t = " + std::to_string(t), t);
                    }
                    if (err <= 1.0)
                    {
                        y = candidate;
                        t = last ? config.t_end : t + step;
                        project(flow, config, y, t);
                        ++accepted;
                        traj.steps = accepted;
                        if (record(t, accepted, last))
                        {
                            return traj;
                        }
                    }
                    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                    h = step * factor;
                    if (h < h_min)
                    {
                        throw NumericalError("adaptive step size underflow at t = " + std::to_string(t), t);
                    }
                }
                return traj;
            }

            long n_steps = std::lround(config.t_end / config.dt);
            if (std::abs(static_cast<double>(n_steps) * config.dt - config.t_end) > 1e-9 * config.t_end)
            {
                n_steps = static_cast<long>(std::ceil(config.t_end / config.dt));
            }
            n_steps = std::max(n_steps, 1L);
            for (long i = 0; i < n_steps; ++i)
            {
                const double t0 = static_cast<double>(i) * config.dt;
                const bool last = i + 1 == n_steps;
                const double t1 = last ? config.t_end : static_cast<double>(i + 1) * config.dt;
                const double h = t1 - t0;
                if (config.method == Method::Euler)
                {
                    stepper.euler(y, h);
                }
                else
                {
                    stepper.rk4(y, h);
                }
                project(flow, config, y, t1);
                traj.steps = i + 1;
                if (record(t1, i + 1, last))
                {
                    return traj;
                }
            }
            return traj;
        }
    }

    std::string to_string(Method method)
    {
        switch (method)
        {
            case Method::RK4:
                return "rk4";
            case Method::Euler:
                return "euler";
            case Method::RK45Adaptive:
                return "rk45";
        }
        return "unknown";
    }

    Method method_from_string(const std::string& name)
    {
        if (name == "rk4")
        {
            return Method::RK4;
        }
        if (name == "euler")
        {
            return Method::Euler;
        }
        if (name == "rk45")
        {
            return Method::RK45Adaptive;
        }
        throw std::invalid_argument("unknown integration method '" + name + "' (expected rk4|euler|rk45)");
    }

    void IntegratorConfig::validate() const
    {
        if (!(dt > 0.0) || !(t_end > 0.0) || !std::isfinite(dt) || !std::isfinite(t_end))
        {
            throw std::invalid_argument("IntegratorConfig: dt and t_end must be positive");
        }
        if (dt > t_end)
        {
            throw std::invalid_argument("IntegratorConfig: dt must not exceed t_end");
        }
        if (record_every < 1)
        {
            throw std::invalid_argument("IntegratorConfig: record_every must be >= 1");
        }
        if (!(rtol > 0.0 && rtol < 1.0 && atol > 0.0 && atol < 1.0))
        {
            throw std::invalid_argument("IntegratorConfig: rtol and atol must lie in (0, 1)");
        }
    }

    Trajectory integrate(const SystemParams& params, const ParticleState& initial, const IntegratorConfig& config,
                         std::uint64_t seed)
    {
        return run(params, initial, config, nullptr, seed);
    }

    Trajectory integrate_until(const SystemParams& params, const ParticleState& initial,
                               const IntegratorConfig& config, const StopPredicate& stop, std::uint64_t seed)
    {
        return run(params, initial, config, &stop, seed);
    }

    StopPredicate velocity_below(const SystemParams& params, double tolerance)
    {
        return [params, tolerance](const ParticleState& state) {
            return max_velocity_norm(state, params) < tolerance;
        };
    }
}
