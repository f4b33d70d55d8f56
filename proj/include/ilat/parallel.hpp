#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ilat {

/// Worker count: the LATTICE_THREADS environment variable wins, then the
/// explicit argument, then 1. Results must not depend on the count: tasks
/// draw from per-index child streams and write to per-index slots.
inline int resolve_threads(int requested) {
    if (const char* env = std::getenv("LATTICE_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    if (requested > 0) return requested;
    return 1;
}

template <typename F>
void parallel_for(std::size_t n, F&& fn, int threads = 0) {
    int t = resolve_threads(threads);
    if (t <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(t), n);
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(error);
}

}  // namespace ilat
