#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace steinclt {

namespace detail {
inline std::atomic<int>& thread_override() {
    static std::atomic<int> value{0};
    return value;
}

/// Set on pool workers so that nested loops run inline instead of oversubscribing.
inline bool& inside_parallel_region() {
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

inline constexpr const char* kThreadsEnvVar = "STEINCLT_THREADS";

/// Force the worker count used by every parallel loop (0 restores the default).
inline void set_thread_count(int n) { detail::thread_override().store(std::max(n, 0)); }

/// Worker count: explicit override, then $STEINCLT_THREADS, then hardware concurrency.
inline int thread_count() {
    if (int forced = detail::thread_override().load(); forced > 0) return forced;
    if (const char* env = std::getenv(kThreadsEnvVar)) {
        try {
            int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, count). Work is handed out dynamically, so body must
/// write its result into a slot owned by i; the caller reduces in index order.
/// A parallel_for issued from inside another one runs serially on its caller.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
    const auto workers = detail::inside_parallel_region()
                             ? std::size_t{1}
                             : std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        const bool outer = detail::inside_parallel_region();
        detail::inside_parallel_region() = true;
        struct Restore {
            bool value;
            ~Restore() { detail::inside_parallel_region() = value; }
        } restore{outer};
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace steinclt
