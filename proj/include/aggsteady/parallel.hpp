#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace aggsteady {

// Worker count used when a caller passes jobs = 0.
inline std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs f(i) for i in [0, count) on up to `jobs` threads. Results must be written
// to per-index slots; the first exception is rethrown after all workers join.
template <class F>
void parallel_for(std::size_t count, F&& f, std::size_t jobs = 0) {
    if (jobs == 0) jobs = default_jobs();
    jobs = std::min(jobs, count);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace aggsteady
