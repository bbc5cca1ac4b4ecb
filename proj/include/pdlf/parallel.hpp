#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace pdlf {

/// Worker cap: PDLF_THREADS env var if set, else hardware concurrency.
inline int thread_budget() {
    if (const char* env = std::getenv("PDLF_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [0, n). Results must be written to per-index slots so
/// that the outcome is independent of scheduling.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    int workers = std::min(thread_budget(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace pdlf
