#ifndef POISSEQ_PARALLEL_HPP
#define POISSEQ_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace poisseq {

/// Worker count used when a caller passes 0: $POISSEQ_THREADS if set, else
/// the hardware concurrency.
inline std::size_t default_thread_count() {
    if (const char* env = std::getenv("POISSEQ_THREADS")) {
        try {
            const long value = std::stol(env);
            if (value > 0) return static_cast<std::size_t>(value);
        } catch (const std::exception&) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/**
 * Calls fn(i) for every i in [0, count) on up to `threads` workers
 * (0 = default_thread_count()). Work is handed out in contiguous blocks;
 * callers write results into per-index slots so the output does not depend
 * on scheduling. The first exception thrown by any call is rethrown on the
 * calling thread after all workers stop.
 */
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = default_thread_count();
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const std::size_t block = std::max<std::size_t>(1, count / (threads * 8));

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t start = next.fetch_add(block);
            if (start >= count) return;
            const std::size_t stop = std::min(count, start + block);
            try {
                for (std::size_t i = start; i < stop; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace poisseq

#endif
