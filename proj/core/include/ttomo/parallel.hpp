#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ttomo {

// Global worker count for fan-parallel loops; 0 means hardware concurrency.
// The CLI sets this from --threads. Outputs of parallel sections must not
// depend on the worker count, so every loop writes disjoint slots or reduces
// per-thread buffers in thread order.
int worker_count();
void set_worker_count(int n);

// Static-chunked parallel loop over [0, n). fn(begin, end, thread_index).
inline void parallel_for_chunks(std::size_t n,
                                const std::function<void(std::size_t, std::size_t, int)>& fn)
{
    const int workers = std::max(1, std::min<int>(worker_count(), int(n ? n : 1)));
    if (workers == 1 || n < 2) {
        fn(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        const std::size_t b = std::min(n, std::size_t(t) * chunk);
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e, t] { fn(b, e, t); });
    }
    for (auto& th : pool) th.join();
}

// Element-wise convenience wrapper.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn)
{
    parallel_for_chunks(n, [&](std::size_t b, std::size_t e, int) {
        for (std::size_t i = b; i < e; ++i) fn(i);
    });
}

} // namespace ttomo
