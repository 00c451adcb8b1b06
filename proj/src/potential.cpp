#include "attnflow/potential.hpp"

#include <sstream>

namespace attnflow
{
    RegimeCheck check_regime(const RegimeParams& params)
    {
        RegimeCheck out;
        std::ostringstream msg;
        if (!(params.N > 0 && params.c > 0 && params.epsilon > 0 && params.beta > 0))
        {
            out.diagnostic = "all regime parameters must be positive";
            return out;
        }

        const double b = 1.0 / std::sqrt(params.beta);
        out.separation_ok = params.c > 2.0 + 2.0 * params.epsilon;
        out.far_interaction = params.N * interaction((params.c - 1.0 - 2.0 * params.epsilon) * b, params.beta);
        out.near_interaction = interaction(params.epsilon * b, params.beta);
        out.far_derivative = -params.N * interaction_derivative((params.c - 2.0 * params.epsilon) * b, params.beta);
        out.near_derivative = interaction_derivative(params.epsilon * b, params.beta);

        const bool first = out.far_interaction < out.near_interaction;
        const bool second = out.far_derivative < out.near_derivative;
        out.ok = out.separation_ok && first && second;

        msg.precision(6);
        if (!out.separation_ok)
        {
            msg << "separation c=" << params.c << " must exceed 2+2eps=" << 2.0 + 2.0 * params.epsilon << "; ";
        }
        msg << "N h((c-1-2eps)b)=" << out.far_interaction << (first ? " < " : " >= ") << "h(eps b)="
            << out.near_interaction << "; -N g((c-2eps)b)=" << out.far_derivative << (second ? " < " : " >= ")
            << "g(eps b)=" << out.near_derivative;
        out.diagnostic = msg.str();
        return out;
    }

    double metastability_horizon(long token_index, double c, double epsilon, double beta)
    {
        if (token_index < 1)
        {
            throw std::invalid_argument("metastability_horizon: token index is 1-based and must be >= 1");
        }
        if (!(c > 0 && epsilon > 0 && beta > 0))
        {
            throw std::invalid_argument("metastability_horizon: c, epsilon and beta must be positive");
        }
        const double b = 1.0 / std::sqrt(beta);
        const double separation = c * b;
        const double critical = critical_angle(beta);
        if (!(separation > critical))
        {
            std::ostringstream msg;
            msg << "metastability_horizon: separation c beta^-1/2 = " << separation
                << " is not above the critical angle " << critical;
            throw std::domain_error(msg.str());
        }
        return epsilon * separation / (static_cast<double>(token_index) * interaction(separation, beta));
    }

    double metastability_horizon_sufficient(long token_index, double c, double epsilon, double beta)
    {
        if (token_index < 1)
        {
            throw std::invalid_argument("metastability_horizon_sufficient: token index must be >= 1");
        }
        return std::exp(c * c / 2.0 - c * c * c * c / (24.0 * beta)) * epsilon / static_cast<double>(token_index);
    }
}
