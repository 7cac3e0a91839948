#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace accel::par {

// Runs fn(i) for i in [0, n) across up to n_threads workers in contiguous
// chunks. Callers make results order-independent by writing into slot i of a
// preallocated buffer and reducing serially afterwards; that keeps every
// output bit-identical for any pool size. The first exception thrown by any
// worker is rethrown on the calling thread.
inline void parallel_for(std::int64_t n, int n_threads, const std::function<void(std::int64_t)>& fn) {
    if (n <= 0) return;
    if (n_threads <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = static_cast<int>(std::min<std::int64_t>(n_threads, n));
    const std::int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t begin = w * chunk;
        const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::int64_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace accel::par
