#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace kcol {

inline unsigned default_threads()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

// f(i) for i in [0,n). Work is handed out in chunks; f must only write to
// slots owned by i, so results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F &&f)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n / 64, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto work = [&]() {
        constexpr std::size_t chunk = 64;
        while (!failed) {
            std::size_t b = next.fetch_add(chunk);
            if (b >= n) return;
            try {
                for (std::size_t i = b; i < std::min(n, b + chunk); ++i) f(i);
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto &th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

} // namespace kcol
