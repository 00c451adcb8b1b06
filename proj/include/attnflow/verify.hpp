#pragma once

// Verification suites, one per acceptance criterion. Shared by
// `attn-flow verify` and the acceptance test binary.

#include "attnflow/io.hpp"

#include <string>
#include <vector>

namespace attnflow
{
    struct Check
    {
        std::string name;
        bool passed = false;
        std::string detail;
        bool informational = false;  // reported, never fails the suite
    };

    struct SuiteReport
    {
        std::string suite;
        int criterion = 0;
        std::vector<Check> checks;
        double seconds = 0.0;
        double budget_seconds = 0.0;

        bool passed() const;
        /// First failing (non-informational) check, or nullptr.
        const Check* first_failure() const;
        json to_json() const;
    };

    struct VerifyOptions
    {
        int jobs = 1;
    };

    /// oracle, rates, collapse, potential, meta, frozen, renyi, atlas,
    /// consumption: criteria 1 through 9 in order.
    const std::vector<std::string>& suite_names();

    bool is_suite(const std::string& name);

    /// Throws std::invalid_argument for an unknown suite.
    SuiteReport run_suite(const std::string& name, const VerifyOptions& options = {});
}
