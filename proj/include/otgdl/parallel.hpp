#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace otgdl {

// Runs fn(i) for i in [0, n) across n_threads workers. Each index writes only
// its own output slot, so results are independent of scheduling. The first
// exception is rethrown on the calling thread.
template <typename Fn>
void parallel_for(int n, int n_threads, Fn fn) {
    if (n_threads == 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const int workers = std::min(n_threads, n);
    threads.reserve(workers);
    for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace otgdl
