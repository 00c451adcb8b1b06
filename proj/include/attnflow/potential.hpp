#pragma once

// Pairwise angular interaction on the circle for Q = K = V = I:
//   interaction(x)            = exp(beta (cos x - 1)) sin x
//   interaction_derivative(x) = exp(beta (cos x - 1)) (cos x - beta sin^2 x)
// The exponent is written as -2 beta sin^2(x/2), which is never positive and
// keeps full precision for small angles.

#include <cmath>
#include <stdexcept>
#include <string>

namespace attnflow
{
    template <typename Scalar>
    Scalar attention_kernel(Scalar x, Scalar beta)
    {
        const Scalar s = std::sin(x / Scalar(2));
        return std::exp(Scalar(-2) * beta * s * s);
    }

    template <typename Scalar>
    Scalar interaction(Scalar x, Scalar beta)
    {
        return attention_kernel(x, beta) * std::sin(x);
    }

    template <typename Scalar>
    Scalar interaction_derivative(Scalar x, Scalar beta)
    {
        const Scalar s = std::sin(x);
        return attention_kernel(x, beta) * (std::cos(x) - beta * s * s);
    }

    /// Angle in (0, pi) where the interaction peaks (zero of its derivative).
    ///
    /// cos(angle) = (-1 + sqrt(4 beta^2 + 1)) / (2 beta); evaluated through
    /// 1 - cos(angle) = 2 / (2 beta + 1 + sqrt(4 beta^2 + 1)) to avoid
    /// cancellation at large beta.
    template <typename Scalar>
    Scalar critical_angle(Scalar beta)
    {
        if (!(beta > Scalar(0)))
        {
            throw std::invalid_argument("critical_angle: beta must be positive");
        }
        const Scalar one_minus_cos = Scalar(2) / (Scalar(2) * beta + Scalar(1) + std::sqrt(Scalar(4) * beta * beta + Scalar(1)));
        return Scalar(2) * std::asin(std::sqrt(one_minus_cos / Scalar(2)));
    }

    /// Frozen-token regime: N = n + sum a_j tokens-with-weights, separation
    /// c in units of beta^{-1/2}, capture radius epsilon beta^{-1/2}.
    struct RegimeParams
    {
        double N = 0.0;
        double c = 0.0;
        double epsilon = 0.0;
        double beta = 0.0;
    };

    struct RegimeCheck
    {
        bool ok = false;
        bool separation_ok = false;      // c > 2 + 2 epsilon
        double far_interaction = 0.0;    // N h((c - 1 - 2 eps) b)
        double near_interaction = 0.0;   // h(eps b)
        double far_derivative = 0.0;     // -N g((c - 2 eps) b)
        double near_derivative = 0.0;    // g(eps b)
        std::string diagnostic;
    };

    /// Evaluates the two separation inequalities of the frozen-token
    /// clustering theorem directly through h and g, with b = beta^{-1/2}:
    ///   N h((c - 1 - 2 eps) b) < h(eps b)   and   -N g((c - 2 eps) b) < g(eps b).
    RegimeCheck check_regime(const RegimeParams& params);

    /// Largest horizon T with T s h(c b) <= eps c b (b = beta^{-1/2}), during
    /// which a separated strong center with 1-based token index s moves less
    /// than eps c b. Throws std::domain_error if c b does not exceed the
    /// critical angle.
    double metastability_horizon(long token_index, double c, double epsilon, double beta);

    /// Closed-form sufficient horizon exp(c^2/2 - c^4/(24 beta)) eps / s, never
    /// larger than metastability_horizon().
    double metastability_horizon_sufficient(long token_index, double c, double epsilon, double beta);
}
