#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace raritynet {

// Process-wide cap on worker threads (1 = serial). Work items must be
// independent so results are identical for any thread count.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [begin, end), split into contiguous chunks.
inline void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    extern int detail_max_threads;
    int n = end - begin;
    int workers = detail_max_threads;
    if (workers > n) workers = n;
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int lo = begin + w * chunk;
        int hi = lo + chunk < end ? lo + chunk : end;
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace raritynet
