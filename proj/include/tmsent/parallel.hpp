// Copyright 2026 The tmsent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tmsent {

inline int default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for every i in [0, count) on up to `workers` threads.
/// Work is handed out in index order; callers write results by index so the
/// outcome does not depend on scheduling. The first exception is rethrown.
template <typename Fn>
void parallel_for(long count, int workers, Fn &&fn, const std::function<void(long, long)> &progress = {}) {
    if (count <= 0) {
        return;
    }
    workers = std::max(1, std::min<int>(workers <= 0 ? default_workers() : workers, static_cast<int>(count)));
    std::atomic<long> next{0};
    std::atomic<long> done{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mutex;
    auto body = [&]() {
        while (!failed.load()) {
            long i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed = true;
                return;
            }
            long d = done.fetch_add(1) + 1;
            if (progress) {
                std::lock_guard<std::mutex> lock(mutex);
                progress(d, count);
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            threads.emplace_back(body);
        }
        for (auto &t : threads) {
            t.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace tmsent
