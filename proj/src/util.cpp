#include "fracmin/util.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace fracmin {

namespace {
int g_threads = 0;
}

void set_thread_count(int threads) { g_threads = threads; }

int thread_count() {
    if (g_threads > 0) return g_threads;
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body) {
    std::size_t total = end > begin ? end - begin : 0;
    int workers = thread_count();
    if (workers <= 1 || total < 2) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next(begin);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= end) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace fracmin
