#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace rvisc {

// Number of worker threads used by sample sweeps and solver sweeps.
// 1 (the default) runs everything inline.
void set_thread_count(int n);
int thread_count();

// Calls fn(i) for i in [0, n). Each index must write only its own output
// slot; results are therefore independent of the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, thread_count()));
    if (workers == 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace rvisc
