#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sheetid::detail {

[[nodiscard]] inline std::size_t resolve_threads(std::size_t requested)
{
    if (requested == 0) {
        requested = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    return requested;
}

/// Calls fn(shard, begin, end) for `threads` contiguous shards of [0, count).
/// Shard boundaries depend only on (count, threads). The first exception
/// thrown by any shard is rethrown after all shards finish.
template <typename Fn>
void for_each_shard(std::size_t count, std::size_t threads, Fn&& fn)
{
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    if (threads == 1) {
        fn(std::size_t{0}, std::size_t{0}, count);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (std::size_t shard = 0; shard < threads; ++shard) {
        const std::size_t begin = count * shard / threads;
        const std::size_t end = count * (shard + 1) / threads;
        workers.emplace_back([&, shard, begin, end] {
            try {
                fn(shard, begin, end);
            } catch (...) {
                errors[shard] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace sheetid::detail
