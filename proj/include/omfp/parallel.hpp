#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace omfp {

/// Run f(i) for i in [0, n) on up to `jobs` threads. Work items are claimed
/// atomically; callers store results by index, so output is deterministic
/// regardless of scheduling.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(std::size_t(jobs), n);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace omfp
