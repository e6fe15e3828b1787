// Copyright 2026 The clotpath Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace clotpath {

/// Resolves a requested worker count: values < 1 mean "all hardware
/// threads".
inline int ResolveWorkers(int requested) {
  if (requested >= 1) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Computes `map(i)` for i in [0, count) on `workers` threads and hands each
/// result to `consume(i, result)` on the calling thread in index order. At
/// most `window` results are buffered, so memory stays bounded while the
/// consumer sees a deterministic sequence. The first exception thrown by
/// either callback stops the run and is rethrown.
template <typename Result, typename MapFn, typename ConsumeFn>
void ParallelMapOrdered(std::size_t count, int workers, MapFn&& map,
                        ConsumeFn&& consume, std::size_t window = 0) {
  workers = std::max(1, workers);
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) consume(i, map(i));
    return;
  }
  if (window == 0) window = static_cast<std::size_t>(workers) * 4;

  std::vector<std::optional<Result>> slots(window);
  std::mutex mutex;
  std::condition_variable slot_free;
  std::condition_variable result_ready;
  std::size_t next_index = 0;     // next index to hand to a worker
  std::size_t next_consumed = 0;  // next index the consumer needs
  bool failed = false;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      std::size_t index = 0;
      {
        std::unique_lock lock(mutex);
        slot_free.wait(lock, [&] {
          return failed || next_index >= count ||
                 next_index < next_consumed + window;
        });
        if (failed || next_index >= count) return;
        index = next_index++;
      }
      try {
        Result value = map(index);
        std::lock_guard lock(mutex);
        slots[index % window].emplace(std::move(value));
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failed) {
          failed = true;
          error = std::current_exception();
        }
      }
      result_ready.notify_all();
      slot_free.notify_all();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) threads.emplace_back(worker);

  while (true) {
    std::optional<Result> value;
    std::size_t index = 0;
    {
      std::unique_lock lock(mutex);
      if (next_consumed >= count) break;
      result_ready.wait(lock, [&] {
        return failed || slots[next_consumed % window].has_value();
      });
      if (failed) break;
      index = next_consumed;
      value = std::move(slots[index % window]);
      slots[index % window].reset();
    }
    bool consumer_failed = false;
    try {
      consume(index, std::move(*value));
    } catch (...) {
      std::lock_guard lock(mutex);
      if (!failed) error = std::current_exception();
      failed = true;
      consumer_failed = true;
    }
    {
      std::lock_guard lock(mutex);
      ++next_consumed;
    }
    slot_free.notify_all();
    if (consumer_failed) break;
  }
  slot_free.notify_all();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

/// Runs `fn(i)` for i in [0, count) on `workers` threads. Order of
/// execution is unspecified; results must be written to disjoint storage.
template <typename Fn>
void ParallelFor(std::size_t count, int workers, Fn&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const int n = static_cast<int>(std::min<std::size_t>(workers, count));
  for (int t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace clotpath
