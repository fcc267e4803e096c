#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace rdslab {

/// Split [0, n) into contiguous chunks, one worker thread per chunk. Work for
/// index i must depend only on i (one RNG stream per index), so the result is
/// identical for any thread count; callers merge per-chunk results in chunk
/// order when the merge is order-sensitive.
inline void parallel_for(long n, int threads,
                         const std::function<void(long, long, int)>& chunk_fn) {
    if (threads < 1) threads = 1;
    if (n <= 0) return;
    threads = static_cast<int>(std::min<long>(threads, n));
    if (threads == 1) {
        chunk_fn(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    long chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        long lo = w * chunk;
        long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([=, &chunk_fn] { chunk_fn(lo, hi, w); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace rdslab
