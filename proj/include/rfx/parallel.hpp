#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rfx {

/// Process-wide worker cap. 0 means "use hardware concurrency".
inline std::atomic<int>& max_threads() {
    static std::atomic<int> value{0};
    return value;
}

inline void set_max_threads(int n) { max_threads().store(n < 0 ? 0 : n); }

inline int effective_threads() {
    int n = max_threads().load();
    if (n <= 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
    }
    return n > 0 ? n : 1;
}

namespace detail {

inline bool& inside_parallel_worker() {
    thread_local bool flag = false;
    return flag;
}

} // namespace detail

/// Runs fn(i) for i in [0, n) over contiguous stripes. Callers write results
/// into pre-sized slots indexed by i and reduce afterwards in a fixed order;
/// output is then independent of the thread count. Nested calls run serially
/// on the calling worker. The first worker exception is rethrown on the
/// calling thread after all workers join.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int workers = effective_threads();
    if (n == 0) {
        return;
    }
    if (workers <= 1 || n == 1 || detail::inside_parallel_worker()) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(w);
    const std::size_t chunk = (n + w - 1) / w;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) {
            break;
        }
        pool.emplace_back([lo, hi, &fn, &first_error, &error_mutex]() {
            detail::inside_parallel_worker() = true;
            try {
                for (std::size_t i = lo; i < hi; ++i) {
                    fn(i);
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace rfx
