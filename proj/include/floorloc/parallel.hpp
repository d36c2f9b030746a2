#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace floorloc {

// Data-parallel helper with thread-count-independent results: work is split
// into blocks whose count depends only on the problem size, each block is
// processed by exactly one thread, and reductions combine per-block values in
// block order. Runs inline when one thread is configured.

namespace detail {
inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};  // 0 = auto
    return n;
}
}  // namespace detail

inline void set_thread_count(int n) { detail::thread_setting().store(n < 0 ? 0 : n); }

inline int thread_count() {
    int n = detail::thread_setting().load();
    if (n == 0) {
        if (const char* env = std::getenv("FLOORLOC_THREADS")) n = std::atoi(env);
    }
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return n > 0 ? n : 1;
}

/// Number of blocks [0, n) is split into; a function of n alone.
inline std::size_t block_count(std::size_t n) {
    const std::size_t by_size = n / 1024;
    return std::min<std::size_t>(256, std::max<std::size_t>(1, by_size));
}

/// Runs fn(block, lo, hi) over a fixed decomposition of [0, n).
template <typename Fn>
void parallel_blocks_indexed(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    const std::size_t blocks = block_count(n);
    const std::size_t per = (n + blocks - 1) / blocks;
    const int threads = static_cast<int>(std::min<std::size_t>(thread_count(), blocks));

    auto run_block = [&](std::size_t b) {
        const std::size_t lo = b * per;
        const std::size_t hi = std::min(n, lo + per);
        if (lo < hi) fn(b, lo, hi);
    };

    if (threads <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) run_block(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) run_block(b);
        });
    for (auto& th : pool) th.join();
}

template <typename Fn>
void parallel_blocks(std::size_t n, Fn&& fn) {
    parallel_blocks_indexed(n, [&](std::size_t, std::size_t lo, std::size_t hi) { fn(lo, hi); });
}

/// Runs fn(i) for i in [0, n) with one unit per index; used for coarse loops
/// such as per-orientation-bin work.
template <typename Fn>
void parallel_units(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    const int threads = static_cast<int>(std::min<std::size_t>(thread_count(), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

/// Parallel sum of fn(lo, hi) over the fixed decomposition, combined in block
/// order so the result does not depend on the thread count.
template <typename Fn>
double parallel_sum(std::size_t n, Fn&& fn) {
    if (n == 0) return 0.0;
    std::vector<double> partial(block_count(n), 0.0);
    parallel_blocks_indexed(n, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        partial[b] = fn(lo, hi);
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace floorloc
