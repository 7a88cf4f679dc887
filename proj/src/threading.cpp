#include "nonlocal_dp/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace nldp {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NONLOCAL_DP_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(long n, const std::function<void(long)>& fn, int threads) {
    const int workers = std::min<long>(resolve_threads(threads), n);
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long begin = w * chunk;
        const long end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] {
            for (long i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace nldp
