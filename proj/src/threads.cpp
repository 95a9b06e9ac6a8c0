#include "evodiff/threads.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace evodiff {

int thread_cap() {
    static const int cap = [] {
        const char* env = std::getenv("EVODIFF_THREADS");
        if (!env) return 1;
        const long v = std::strtol(env, nullptr, 10);
        const long hw = std::max(1u, std::thread::hardware_concurrency());
        return static_cast<int>(std::clamp(v, 1l, hw));
    }();
    return cap;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const int cap = thread_cap();
    if (cap <= 1 || n < 8192) {
        fn(0, n);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(cap, n);
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace evodiff
