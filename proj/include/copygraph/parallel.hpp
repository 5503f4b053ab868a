#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace copygraph {

inline int default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Run body(i) for i in [0, n) on up to `workers` threads. Each index is
/// processed exactly once; callers must make body(i) write only to slot i so
/// the result is independent of the worker count.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    const std::size_t nthreads =
        std::min<std::size_t>(workers < 1 ? 1 : static_cast<std::size_t>(workers), n);
    if (nthreads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t]() {
            const std::size_t lo = t * n / nthreads;
            const std::size_t hi = (t + 1) * n / nthreads;
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace copygraph
