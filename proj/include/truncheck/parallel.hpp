// Copyright 2026 The Truncheck Authors.
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
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace truncheck {

/// Process-wide worker count used by parallel loops. 0 means hardware
/// concurrency. Results never depend on this value: work is indexed and
/// outputs are written to per-index slots.
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> threads{0};
  return threads;
}

inline void set_threads(unsigned n) { thread_setting().store(n); }

inline unsigned worker_count() {
  unsigned n = thread_setting().load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

inline bool& inside_parallel_region() {
  thread_local bool inside = false;
  return inside;
}

/// Calls fn(i) for i in [0, count). Exceptions are rethrown on the caller.
/// Nested calls run sequentially on the calling worker.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(worker_count(), count));
  if (workers <= 1 || inside_parallel_region()) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    const bool was_inside = inside_parallel_region();
    inside_parallel_region() = true;
    struct Restore {
      bool prev;
      ~Restore() { inside_parallel_region() = prev; }
    } restore{was_inside};
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace truncheck
