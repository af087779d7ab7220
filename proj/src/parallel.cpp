#include "cnet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

namespace cnet {
namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) {
    if (n < 1) throw std::invalid_argument("set_num_threads: n must be >= 1");
    g_threads.store(n);
}

int num_threads() { return g_threads.load(); }

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
    const int nt = std::min<int64_t>(num_threads(), n);
    if (nt <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(nt));
    for (int t = 0; t < nt; ++t) {
        workers.emplace_back([&, t] {
            for (int64_t i = t; i < n; i += nt) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace cnet
