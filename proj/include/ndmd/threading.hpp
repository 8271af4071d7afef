#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ndmd {

// Deterministic work partitioning: the chunk boundaries depend only on the
// problem size, never on the worker count, and any reduction over chunk
// results happens sequentially in chunk order. A run with 4 workers is
// bit-identical to a single-threaded run.
struct ChunkRange {
    std::size_t begin, end;
};

inline std::vector<ChunkRange> fixed_chunks(std::size_t n, std::size_t chunk_size) {
    std::vector<ChunkRange> out;
    for (std::size_t b = 0; b < n; b += chunk_size)
        out.push_back({b, std::min(n, b + chunk_size)});
    if (out.empty()) out.push_back({0, 0});
    return out;
}

// Runs fn(chunk_index, begin, end) over fixed chunks. Chunks write to
// disjoint or per-chunk storage; fn must not touch shared mutable state.
inline void parallel_chunks(std::size_t n, std::size_t chunk_size, int workers,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    auto chunks = fixed_chunks(n, chunk_size);
    if (workers <= 1 || chunks.size() <= 1) {
        for (std::size_t c = 0; c < chunks.size(); ++c) fn(c, chunks[c].begin, chunks[c].end);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= chunks.size()) return;
            fn(c, chunks[c].begin, chunks[c].end);
        }
    };
    std::vector<std::thread> pool;
    int nthreads = std::min<int>(workers, int(chunks.size()));
    pool.reserve(std::size_t(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace ndmd
