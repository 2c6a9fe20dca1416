#include "mcflab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mcflab {

int worker_count() {
    int requested = 0;
    if (const char* env = std::getenv("MCFLAB_THREADS")) {
        try {
            requested = std::stoi(env);
        } catch (...) {
            requested = 0;
        }
    }
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
    // small ranges are not worth a thread launch
    constexpr std::size_t kMinChunk = 4096;
    const auto workers = static_cast<std::size_t>(
        std::min<std::size_t>(static_cast<std::size_t>(worker_count()), std::max<std::size_t>(1, count / kMinChunk)));
    if (workers <= 1) {
        body(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = std::min(count, w * chunk);
        const std::size_t e = std::min(count, b + chunk);
        pool.emplace_back([&body, b, e] { body(b, e); });
    }
    body(0, std::min(count, chunk));
    for (auto& t : pool) t.join();
}

} // namespace mcflab
