#pragma once

// Time stepping for the particle system with snapshot recording.

#include "attnflow/dynamics.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace attnflow
{
    enum class Method
    {
        RK4,
        Euler,
        RK45Adaptive
    };

    std::string to_string(Method method);
    Method method_from_string(const std::string& name);

    struct IntegratorConfig
    {
        Method method = Method::RK4;
        double dt = 1e-2;
        double t_end = 1.0;
        int record_every = 1;  // steps between snapshots
        double rtol = 1e-8;    // RK45Adaptive only
        double atol = 1e-10;   // RK45Adaptive only
        bool renormalize_every_step = true;

        void validate() const;
    };

    enum class Termination
    {
        ReachedEnd,
        StopPredicate
    };

    struct Trajectory
    {
        std::vector<ParticleState> snapshots;  // snapshots.front().time == 0
        SystemParams params;
        IntegratorConfig config;
        std::uint64_t seed = 0;
        Termination termination = Termination::ReachedEnd;
        long steps = 0;

        const ParticleState& initial() const
        {
            return snapshots.front();
        }

        const ParticleState& final() const
        {
            return snapshots.back();
        }
    };

    /// Raised when the state stops being finite; carries the time of failure.
    class NumericalError : public std::runtime_error
    {
      public:
        NumericalError(const std::string& what, double time)
            : std::runtime_error(what)
            , time_(time)
        {
        }

        double time() const noexcept
        {
            return time_;
        }

      private:
        double time_;
    };

    using StopPredicate = std::function<bool(const ParticleState&)>;

    /// Advances `initial` to config.t_end. Planar kinds step the unwrapped
    /// angles; the other kinds step the points and project each back onto the
    /// sphere after every step (unless renormalize_every_step is off).
    /// Deterministic given its inputs. `seed` is stored for provenance only.
    Trajectory integrate(const SystemParams& params, const ParticleState& initial, const IntegratorConfig& config,
                         std::uint64_t seed = 0);

    /// As integrate(), stopping at the first recorded snapshot where `stop`
    /// holds (checked at t = 0 too).
    Trajectory integrate_until(const SystemParams& params, const ParticleState& initial,
                               const IntegratorConfig& config, const StopPredicate& stop, std::uint64_t seed = 0);

    /// Stop predicate: largest velocity component below `tolerance`.
    StopPredicate velocity_below(const SystemParams& params, double tolerance);
}
