#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace curvlab {

// worker count: CURVLAB_THREADS when set, hardware concurrency otherwise
inline int thread_count() {
    if (const char* s = std::getenv("CURVLAB_THREADS")) {
        const int n = std::atoi(s);
        if (n >= 1)
            return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Runs body(i) for i in [0, n). Each index writes only its own slot of any
// output, so results cannot depend on the worker count. Bodies must not throw.
template <class F>
void parallel_for(int n, F&& body) {
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                body(i);
        });
    for (auto& th : pool)
        th.join();
}

} // namespace curvlab
