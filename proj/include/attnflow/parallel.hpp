#pragma once

// Fixed-size worker pool over an index range. Results are written by index,
// so output never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace attnflow
{
    /// ATTN_FLOW_JOBS if set, else the hardware concurrency (at least 1).
    inline int default_jobs()
    {
        if (const char* env = std::getenv("ATTN_FLOW_JOBS"); env != nullptr && *env != '\0')
        {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (*end != '\0' || v < 1)
            {
                throw std::invalid_argument("ATTN_FLOW_JOBS must be a positive integer, got '" + std::string(env) + "'");
            }
            return static_cast<int>(v);
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }

    /// Calls fn(i) for i in [0, count) on up to `jobs` threads. The exception
    /// from the lowest failing index is rethrown after all workers finish.
    template <typename Fn>
    void parallel_for(std::size_t count, int jobs, Fn&& fn)
    {
        const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < count; ++i)
            {
                fn(i);
            }
            return;
        }
        std::atomic<std::size_t> next{0};
        std::mutex mutex;
        std::size_t failed_index = count;
        std::exception_ptr failure;
        auto work = [&]() {
            for (std::size_t i = next++; i < count; i = next++)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    const std::lock_guard lock(mutex);
                    if (i < failed_index)
                    {
                        failed_index = i;
                        failure = std::current_exception();
                    }
                }
            }
        };
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w)
        {
            threads.emplace_back(work);
        }
        for (auto& t : threads)
        {
            t.join();
        }
        if (failure)
        {
            std::rethrow_exception(failure);
        }
    }
}
