#include "fairrec/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fairrec {

std::size_t thread_budget() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FAIRREC_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
        } catch (const std::exception&) {
            // ignore unparsable values
        }
    }
    return n;
}

void parallel_chunks(std::size_t n, std::size_t chunk_count,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    chunk_count = std::clamp<std::size_t>(chunk_count, 1, n);
    const std::size_t base = n / chunk_count;
    const std::size_t extra = n % chunk_count;
    auto bounds = [&](std::size_t c) {
        const std::size_t begin = c * base + std::min(c, extra);
        return std::pair{begin, begin + base + (c < extra ? 1 : 0)};
    };

    const std::size_t workers = std::min(thread_budget(), chunk_count);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunk_count; ++c) {
            auto [b, e] = bounds(c);
            body(c, b, e);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t c = next++; c < chunk_count; c = next++) {
            try {
                auto [b, e] = bounds(c);
                body(c, b, e);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    parallel_chunks(n, n, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) body(i);
    });
}

}  // namespace fairrec
