#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <thread>
#include <vector>

namespace photonlab {

// Resolves a requested thread count: explicit value wins, then the
// PHOTONLAB_THREADS environment variable, then hardware concurrency.
int resolve_thread_count(int requested);

// Runs `work(index)` for index in [0, n) on up to `threads` workers and hands
// each result to `consume(index, result)` in index order on the calling
// thread. Work items must not share mutable state; the ordered consumption is
// what keeps downstream accumulation deterministic for any thread count.
template <typename Result>
void ordered_parallel(std::uint64_t n, int threads,
                      const std::function<Result(std::uint64_t)>& work,
                      const std::function<void(std::uint64_t, Result&&)>& consume) {
    if (threads < 1) threads = 1;
    if (n == 0) return;
    if (threads == 1) {
        for (std::uint64_t i = 0; i < n; ++i) consume(i, work(i));
        return;
    }
    const std::uint64_t wave = static_cast<std::uint64_t>(threads);
    for (std::uint64_t base = 0; base < n; base += wave) {
        const std::uint64_t count = std::min(wave, n - base);
        std::vector<std::future<Result>> futs;
        futs.reserve(count);
        for (std::uint64_t k = 0; k < count; ++k) {
            futs.push_back(std::async(std::launch::async, work, base + k));
        }
        for (std::uint64_t k = 0; k < count; ++k) {
            consume(base + k, futs[k].get());
        }
    }
}

}  // namespace photonlab
