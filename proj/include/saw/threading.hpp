#pragma once

#include <cstdint>
#include <functional>

namespace saw {

/// Global worker-thread cap. Defaults to hardware concurrency; the CLI
/// --threads flag (or SAW_RECON_THREADS) lowers it.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [0, n) on up to max_threads() workers.
/// Work is split into contiguous static chunks, so per-index outputs must be
/// disjoint; result is then independent of the thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

/// Splits [0, n) into exactly num_chunks contiguous ranges and runs
/// fn(chunk_index, begin, end) for each, in parallel. Chunk boundaries do not
/// depend on the thread count, so chunk-ordered reductions are deterministic.
void parallel_chunks(std::int64_t n, int num_chunks,
                     const std::function<void(int, std::int64_t, std::int64_t)>& fn);

}  // namespace saw
