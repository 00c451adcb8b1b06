// One acceptance criterion per invocation: `acceptance <1-9 | suite name>`.
// Prints the suite's checks and a single PASS/FAIL line; exit 0 iff it passed.

#include "attnflow/parallel.hpp"
#include "attnflow/verify.hpp"

#include <iostream>
#include <string>

int main(int argc, char** argv)
{
    using namespace attnflow;
    if (argc != 2)
    {
        std::cerr << "usage: acceptance <criterion 1-9 | suite>\n";
        return 2;
    }
    std::string name = argv[1];
    const auto& names = suite_names();
    if (name.size() == 1 && name[0] >= '1' && name[0] <= '9')
    {
        name = names.at(static_cast<std::size_t>(name[0] - '1'));
    }
    if (!is_suite(name))
    {
        std::cerr << "unknown criterion '" << argv[1] << "'\n";
        return 2;
    }
    try
    {
        const SuiteReport r = run_suite(name, {.jobs = default_jobs()});
        for (const auto& c : r.checks)
        {
            std::cout << "  " << (c.informational ? "info" : (c.passed ? "ok  " : "FAIL")) << ' ' << c.name << " -- "
                      << c.detail << '\n';
        }
        std::cout << "criterion " << r.criterion << " (" << r.suite << "): " << (r.passed() ? "PASS" : "FAIL")
                  << " [" << r.seconds << " s]\n";
        return r.passed() ? 0 : 1;
    }
    catch (const std::exception& e)
    {
        std::cout << "criterion " << name << ": FAIL (error: " << e.what() << ")\n";
        return 1;
    }
}
