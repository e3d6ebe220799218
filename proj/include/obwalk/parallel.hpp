#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace obwalk {

/**
 * Runs fn(block, lo, hi) over [0,total) split into fixed-size blocks.
 * The block layout depends only on total and block_size, never on the worker
 * count, so per-block partial results reduced in block order give identical
 * output for any --jobs value.
 */
inline void run_blocks(int total, int block_size, int jobs,
                       const std::function<void(int, int, int)>& fn) {
    if (total <= 0) return;
    const int n_blocks = (total + block_size - 1) / block_size;
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    if (jobs == 1 || n_blocks == 1) {
        for (int b = 0; b < n_blocks; ++b)
            fn(b, b * block_size, std::min(total, (b + 1) * block_size));
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(b, b * block_size, std::min(total, (b + 1) * block_size));
        }
    };
    std::vector<std::thread> pool;
    const int spawn = std::min(jobs, n_blocks);
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

inline int walk_block_size() { return 256; }

}  // namespace obwalk
