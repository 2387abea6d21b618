#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace tamrl {

/// Worker cap from TAMRL_THREADS, else the hardware concurrency.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("TAMRL_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1) return static_cast<std::size_t>(n);
        } catch (...) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls f(i) for i in [0, n). Results must be written to per-index slots;
/// callers reduce them afterwards in index order, which keeps the outcome
/// independent of the worker count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// accumulate(compute(i)) for i = 0..n-1 in index order. The compute calls
/// may run concurrently; the accumulation sequence is always the same.
template <class Compute, class Accumulate>
void ordered_reduce(std::size_t n, Compute&& compute, Accumulate&& accumulate) {
    if (n <= 1 || worker_count() <= 1) {
        for (std::size_t i = 0; i < n; ++i) accumulate(compute(i));
        return;
    }
    using T = std::decay_t<decltype(compute(std::size_t{0}))>;
    std::vector<T> parts(n);
    parallel_for(n, [&](std::size_t i) { parts[i] = compute(i); });
    for (auto& p : parts) accumulate(std::move(p));
}

}  // namespace tamrl
