#include "saw/threading.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace saw {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = use hardware concurrency

int resolve_threads() {
    int n = g_max_threads.load(std::memory_order_relaxed);
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}
}  // namespace

void set_max_threads(int n) { g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed); }

int max_threads() { return resolve_threads(); }

void parallel_chunks(std::int64_t n, int num_chunks,
                     const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
    if (n <= 0 || num_chunks <= 0) return;
    num_chunks = static_cast<int>(std::min<std::int64_t>(num_chunks, n));
    const std::int64_t base = n / num_chunks;
    const std::int64_t rem = n % num_chunks;
    // Chunk c covers [starts[c], starts[c+1]); first `rem` chunks get one extra.
    std::vector<std::int64_t> starts(num_chunks + 1);
    starts[0] = 0;
    for (int c = 0; c < num_chunks; ++c)
        starts[c + 1] = starts[c] + base + (c < rem ? 1 : 0);

    const int workers = std::min(resolve_threads(), num_chunks);
    if (workers <= 1) {
        for (int c = 0; c < num_chunks; ++c) fn(c, starts[c], starts[c + 1]);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            int c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= num_chunks) return;
            fn(c, starts[c], starts[c + 1]);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    const int workers = resolve_threads();
    if (n <= 0) return;
    if (workers <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    parallel_chunks(n, workers, [&](int, std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
    });
}

}  // namespace saw
