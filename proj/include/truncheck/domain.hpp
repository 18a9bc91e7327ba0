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

// Exhaustive enumeration of finite product domains.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "truncheck/distribution.hpp"
#include "truncheck/error.hpp"
#include "truncheck/parallel.hpp"

namespace truncheck {

inline constexpr std::uint64_t kEnumerationCap = std::uint64_t{1} << 24;

/// Point count of an enumerable domain; fails loudly past the cap.
inline std::uint64_t checked_domain_size(const ProductSpace& space,
                                         std::uint64_t cap = kEnumerationCap) {
  if (!space.base.is_finite())
    fail(ErrorKind::kDomainTooLarge, "continuous base distribution cannot be enumerated");
  auto size = space.domain_size();
  if (!size || *size > cap)
    fail(ErrorKind::kDomainTooLarge, "product domain exceeds 2^24 points");
  return *size;
}

/// Point `index` of the domain in mixed-radix order (coordinate 0 varies
/// fastest). Writes the point to x and returns its probability.
inline double decode_point(const std::vector<Atom>& atoms, std::uint64_t index,
                           std::span<double> x) {
  const auto s = atoms.size();
  double w = 1.0;
  for (auto& xi : x) {
    const auto& a = atoms[index % s];
    xi = a.value;
    w *= a.prob;
    index /= s;
  }
  return w;
}

inline constexpr std::uint64_t kEnumerationBlock = std::uint64_t{1} << 13;

/// Calls fn(block, x, weight, index) for every point; blocks of
/// kEnumerationBlock points run in parallel, points within a block run in
/// order. Callers accumulate per block and reduce blocks in index order.
template <class Fn>
void for_each_point_blocked(const ProductSpace& space, Fn&& fn) {
  const std::uint64_t total = checked_domain_size(space);
  const auto atoms = space.base.atoms();
  const std::uint64_t blocks = (total + kEnumerationBlock - 1) / kEnumerationBlock;
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> x(static_cast<std::size_t>(space.n));
    const std::uint64_t lo = b * kEnumerationBlock;
    const std::uint64_t hi = std::min(total, lo + kEnumerationBlock);
    for (std::uint64_t i = lo; i < hi; ++i) {
      const double w = decode_point(atoms, i, x);
      fn(b, std::span<const double>(x), w, i);
    }
  });
}

inline std::size_t block_count(const ProductSpace& space) {
  const std::uint64_t total = checked_domain_size(space);
  return static_cast<std::size_t>((total + kEnumerationBlock - 1) / kEnumerationBlock);
}

/// Sequential enumeration.
template <class Fn>
void for_each_point(const ProductSpace& space, Fn&& fn) {
  const std::uint64_t total = checked_domain_size(space);
  const auto atoms = space.base.atoms();
  std::vector<double> x(static_cast<std::size_t>(space.n));
  for (std::uint64_t i = 0; i < total; ++i) {
    const double w = decode_point(atoms, i, x);
    fn(std::span<const double>(x), w, i);
  }
}

}  // namespace truncheck
