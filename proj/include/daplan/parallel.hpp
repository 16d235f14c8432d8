#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace daplan {

inline int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(i) for i in [0, n). With threads <= 1 (or tiny n) the loop runs
/// inline. Work is split into contiguous blocks, so results written to
/// per-index slots are deterministic regardless of the thread count.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
    if (threads <= 0) threads = hardware_threads();
    threads = static_cast<int>(
        std::min<size_t>(static_cast<size_t>(threads), n));
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    const size_t chunk = (n + static_cast<size_t>(threads) - 1) /
                         static_cast<size_t>(threads);
    for (int t = 0; t < threads; ++t) {
        const size_t lo = static_cast<size_t>(t) * chunk;
        const size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace daplan
