#include "dld/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dld {

int worker_count(int requested, std::size_t tasks) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DLD_FORGE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    n = std::max(n, 1);
    if (tasks > 0) n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), tasks));
    return n;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    if (workers <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex guard;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(guard);
                if (!first) first = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::thread> pool;
    const int extra = std::min<int>(workers, static_cast<int>(count)) - 1;
    for (int w = 0; w < extra; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace dld
