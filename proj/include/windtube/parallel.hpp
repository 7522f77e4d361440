#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace windtube {

/// Resolve a worker count: explicit value wins, then WINDTUBE_THREADS, then
/// hardware concurrency.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("WINDTUBE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [0, n).  Each index is processed exactly once and any
/// result must be written to a caller-owned slot for index i, so the output
/// is identical for every worker count.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nworkers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (std::size_t w = 0; w < nworkers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += nworkers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace windtube
