#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace msdarcy {

/// Runs fn(i) for i in [0, n) on up to n_threads threads. Work items write
/// to index-addressed slots, so results are identical for any thread count;
/// the first exception thrown by a worker is rethrown on the caller.
template <typename Fn>
void parallel_for(int n, int n_threads, Fn&& fn) {
    if (n <= 0) return;
    n_threads = std::max(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(n_threads);
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const int begin = t * chunk;
        const int end = std::min(n, begin + chunk);
        workers.emplace_back([&, t, begin, end] {
            try {
                for (int i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (std::thread& w : workers) w.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace msdarcy
