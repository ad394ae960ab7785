#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sgsq {

// Worker count used by ensemble loops; set once from the CLI --threads flag.
inline int& worker_threads() {
    static int n = 1;
    return n;
}

// Runs body(i) for i in [0, count). With one worker this is a plain loop.
// Results must be written to caller-owned, index-addressed slots so the
// outcome is identical for every thread count.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const int workers = worker_threads();
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<std::size_t>(workers, count);
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace sgsq
