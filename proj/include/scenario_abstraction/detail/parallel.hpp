// Copyright 2026 The scenario_abstraction Authors
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

#ifndef SCENARIO_ABSTRACTION__DETAIL__PARALLEL_HPP_
#define SCENARIO_ABSTRACTION__DETAIL__PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <future>
#include <type_traits>
#include <vector>

namespace scenario_abstraction::detail
{

/// Maps `fn` over `items` on up to `workers` threads. Output order follows input order;
/// a worker exception propagates to the caller.
template <class T, class Fn>
auto parallel_map(const std::vector<T> & items, Fn fn, std::size_t workers)
  -> std::vector<std::invoke_result_t<Fn, const T &>>
{
  using R = std::invoke_result_t<Fn, const T &>;
  std::vector<R> out;
  out.reserve(items.size());
  if (workers <= 1 || items.size() <= 1) {
    for (const auto & item : items) {
      out.push_back(fn(item));
    }
    return out;
  }
  const std::size_t n_threads = std::min(workers, items.size());
  std::vector<std::future<std::vector<R>>> futures;
  for (std::size_t w = 0; w < n_threads; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w] {
      std::vector<R> chunk;
      for (std::size_t i = w; i < items.size(); i += n_threads) {
        chunk.push_back(fn(items[i]));
      }
      return chunk;
    }));
  }
  std::vector<std::vector<R>> chunks;
  for (auto & f : futures) {
    chunks.push_back(f.get());
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.push_back(std::move(chunks[i % n_threads][i / n_threads]));
  }
  return out;
}

}  // namespace scenario_abstraction::detail

#endif  // SCENARIO_ABSTRACTION__DETAIL__PARALLEL_HPP_
