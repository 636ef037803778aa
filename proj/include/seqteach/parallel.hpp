#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace seqteach {

/// Runs independent indexed tasks on a fixed number of workers.
///
/// Tasks must write their result into a slot owned by their index; callers
/// reduce in index order afterwards, which keeps every result independent of
/// scheduling.
class Executor {
public:
    explicit Executor(unsigned workers = 1) : workers_(std::max(1u, workers)) {}

    unsigned workers() const noexcept { return workers_; }

    template <class Fn>
    void for_each_index(std::size_t count, Fn&& fn) const {
        if (count == 0) return;
        const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(workers_, count));
        if (threads <= 1) {
            for (std::size_t i = 0; i < count; ++i) fn(i);
            return;
        }

        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        std::size_t first_error_index = count;

        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (i < first_error_index) {
                        first_error_index = i;
                        first_error = std::current_exception();
                    }
                }
            }
        };

        {
            std::vector<std::jthread> pool;
            pool.reserve(threads - 1);
            for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
            worker();
        }
        if (first_error) std::rethrow_exception(first_error);
    }

private:
    unsigned workers_;
};

}  // namespace seqteach
