// Chunked parallel-for over an index range.  Work items must be independent;
// all scan loops in this project write disjoint outputs or reduce via max,
// so results do not depend on the thread count.
#ifndef DEGLAP_PARALLEL_HPP
#define DEGLAP_PARALLEL_HPP

#include <thread>
#include <vector>

namespace deglap {

template <typename Fn>
void parallel_for(int n, int threads, Fn&& body) {
    if (threads <= 1 || n < 2 * threads) {
        for (int k = 0; k < n; ++k) body(k);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int k = lo; k < hi; ++k) body(k);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace deglap

#endif
