#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "softtopk/types.hpp"

namespace softtopk {

// SOFTTOPK_THREADS always wins; a zero/absent request falls back to the
// hardware count.  Returns at least 1.
inline std::size_t resolve_worker_count(std::size_t requested) {
    if (const char* env = std::getenv("SOFTTOPK_THREADS")) {
        try {
            const long long parsed = std::stoll(env);
            if (parsed < 1)
                throw ConfigError("SOFTTOPK_THREADS must be >= 1 (got '" + std::string(env) + "')");
            return static_cast<std::size_t>(parsed);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("SOFTTOPK_THREADS must be an integer (got '" + std::string(env) +
                              "')");
        }
    }
    if (requested >= 1) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<std::size_t>(hw);
}

// Runs body(i) for i in [0, count) across `workers` threads.  Work is handed
// out one index at a time; the first exception wins and is rethrown on the
// calling thread after everything joins.
inline void parallel_for(std::size_t count, std::size_t workers,
                         const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace softtopk
