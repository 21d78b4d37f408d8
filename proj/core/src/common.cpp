#include "heatperim/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace heatperim {

IndexSet normalized(IndexSet set) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
}

Vector indicator(const IndexSet& set, Index n) {
    Vector v = Vector::Zero(n);
    for (Index i : set) {
        require(i >= 0 && i < n, "indicator: index " + std::to_string(i) + " out of range");
        v[i] = 1.0;
    }
    return v;
}

IndexSet complementOf(const IndexSet& set, Index n) {
    const auto mask = membershipMask(set, n);
    IndexSet out;
    out.reserve(n - std::min<Index>(n, static_cast<Index>(set.size())));
    for (Index i = 0; i < n; ++i)
        if (!mask[i]) out.push_back(i);
    return out;
}

std::vector<char> membershipMask(const IndexSet& set, Index n) {
    std::vector<char> mask(n, 0);
    for (Index i : set) {
        require(i >= 0 && i < n, "index " + std::to_string(i) + " out of range");
        mask[i] = 1;
    }
    return mask;
}

unsigned defaultWorkers() {
    if (const char* env = std::getenv("HEATPERIM_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallelFor(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body) {
    if (workers == 0) workers = defaultWorkers();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr firstError;
    std::mutex errorMutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(errorMutex);
                    if (!firstError) firstError = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (firstError) std::rethrow_exception(firstError);
}

}  // namespace heatperim
