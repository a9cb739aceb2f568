#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lest {

/// Runs fn(begin, end) over a static contiguous partition of [0, n) across
/// `workers` threads. Workers own disjoint output ranges and every range is
/// computed by the same sequential code, so results are bit-identical for any
/// worker count. workers <= 1 runs inline. The first exception thrown by a
/// worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) {
        return;
    }
    if (workers <= 1 || n == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    const std::size_t chunk = (n + w - 1) / w;
    std::vector<std::thread> threads;
    threads.reserve(w);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        threads.emplace_back([begin, end, &fn, &first_error, &error_mutex] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) {
        th.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace lest
