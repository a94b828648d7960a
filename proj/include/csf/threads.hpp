#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace csf {

/// Worker cap for pair-field computation, from CSF_THREADS (0 or unset means
/// hardware concurrency).
inline std::size_t worker_count() {
    std::size_t requested = 0;
    if (const char* env = std::getenv("CSF_THREADS")) {
        try {
            requested = static_cast<std::size_t>(std::stoul(env));
        } catch (...) {
            requested = 0;
        }
    }
    if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
    return requested;
}

/// Runs `body(begin, end)` over contiguous chunks of [0, count). Each index is
/// visited by exactly one worker.
template <class Body>
void parallel_rows(std::size_t count, std::size_t workers, Body&& body) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = count * w / workers;
        const std::size_t end = count * (w + 1) / workers;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace csf
