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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "truncheck/distribution.hpp"
#include "truncheck/error.hpp"
#include "truncheck/parallel.hpp"
#include "truncheck/ptf.hpp"
#include "truncheck/rng.hpp"

namespace truncheck {

struct ProductSource {};
struct TruncatedSource {
  Ptf f;
};
using SampleSource = std::variant<ProductSource, TruncatedSource>;

/// T x n points, row-major.
struct SampleBatch {
  int n = 0;
  std::int64_t T = 0;
  std::vector<double> points;
  SampleSource source = ProductSource{};
  std::uint64_t seed = 0;
  std::optional<double> acceptance_rate;

  std::span<const double> row(std::int64_t i) const {
    return {points.data() + i * n, static_cast<std::size_t>(n)};
  }
};

inline constexpr std::int64_t kDefaultMaxAttempts = 1'000'000;
inline constexpr std::int64_t kRowChunk = 256;

namespace detail {
inline constexpr std::uint64_t kProductTag = 0x50524F44ULL;
inline constexpr std::uint64_t kTruncatedTag = 0x5452554EULL;
}  // namespace detail

/// T i.i.d. rows from mu^{(x) n}. Row r draws from substream r of `seed`.
inline SampleBatch sample_product(const ProductSpace& space, std::int64_t T, std::uint64_t seed) {
  if (T < 1) fail(ErrorKind::kInvalidArgument, "T must be >= 1");
  SampleBatch batch{space.n, T, std::vector<double>(static_cast<std::size_t>(T * space.n)),
                    ProductSource{}, seed, std::nullopt};
  const auto chunks = static_cast<std::size_t>((T + kRowChunk - 1) / kRowChunk);
  parallel_for(chunks, [&](std::size_t c) {
    const std::int64_t lo = static_cast<std::int64_t>(c) * kRowChunk;
    const std::int64_t hi = std::min(T, lo + kRowChunk);
    for (std::int64_t r = lo; r < hi; ++r) {
      Rng rng(seed, derive_stream({detail::kProductTag, static_cast<std::uint64_t>(r)}));
      double* row = batch.points.data() + r * space.n;
      for (int i = 0; i < space.n; ++i) row[i] = sample_base(space.base, rng);
    }
  });
  return batch;
}

/// T rows from mu^{(x) n} conditioned on f = 1, by rejection. Fails with
/// "volume too small" when a row needs more than max_attempts proposals.
inline SampleBatch sample_truncated(const ProductSpace& space, const Ptf& f,
                                   const UnivariateBasis& basis, std::int64_t T,
                                   std::uint64_t seed,
                                   std::int64_t max_attempts = kDefaultMaxAttempts) {
  if (T < 1) fail(ErrorKind::kInvalidArgument, "T must be >= 1");
  if (max_attempts < 1) fail(ErrorKind::kInvalidArgument, "max_attempts_per_point must be >= 1");
  SampleBatch batch{space.n, T, std::vector<double>(static_cast<std::size_t>(T * space.n)),
                    TruncatedSource{f}, seed, std::nullopt};
  std::vector<std::int64_t> proposals(static_cast<std::size_t>(T), 0);
  const auto chunks = static_cast<std::size_t>((T + kRowChunk - 1) / kRowChunk);
  parallel_for(chunks, [&](std::size_t c) {
    PolyEvaluator pe(f.p, basis, space.n);
    const std::int64_t lo = static_cast<std::int64_t>(c) * kRowChunk;
    const std::int64_t hi = std::min(T, lo + kRowChunk);
    for (std::int64_t r = lo; r < hi; ++r) {
      Rng rng(seed, derive_stream({detail::kTruncatedTag, static_cast<std::uint64_t>(r)}));
      std::span<double> row(batch.points.data() + r * space.n, static_cast<std::size_t>(space.n));
      std::int64_t attempts = 0;
      for (;;) {
        if (attempts == max_attempts)
          fail(ErrorKind::kVolumeTooSmall,
               "no accepted point after " + std::to_string(max_attempts) + " proposals");
        ++attempts;
        for (auto& xi : row) xi = sample_base(space.base, rng);
        if (pe(row) >= f.theta) break;
      }
      proposals[static_cast<std::size_t>(r)] = attempts;
    }
  });
  std::int64_t total = 0;
  for (auto p : proposals) total += p;
  batch.acceptance_rate = static_cast<double>(T) / static_cast<double>(total);
  return batch;
}

// Persistence: <path>.bin holds little-endian float64 row-major data;
// <path>.json holds {n, T, seed, source}.

inline void write_batch(const SampleBatch& batch, const std::string& path) {
  std::ofstream bin(path + ".bin", std::ios::binary);
  if (!bin) fail(ErrorKind::kInvalidArgument, "cannot open " + path + ".bin");
  for (double v : batch.points) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
    bin.write(reinterpret_cast<const char*>(bytes), 8);
  }
  nlohmann::json meta;
  meta["n"] = batch.n;
  meta["T"] = batch.T;
  meta["seed"] = batch.seed;
  if (auto* t = std::get_if<TruncatedSource>(&batch.source)) {
    meta["source"] = {{"kind", "truncated"}, {"ptf", to_json(t->f)}};
  } else {
    meta["source"] = {{"kind", "product"}};
  }
  if (batch.acceptance_rate) meta["acceptance_rate"] = *batch.acceptance_rate;
  std::ofstream(path + ".json") << meta.dump() << "\n";
}

inline SampleBatch read_batch(const std::string& path, const UnivariateBasis& basis) {
  std::ifstream meta_in(path + ".json");
  if (!meta_in) fail(ErrorKind::kInvalidArgument, "cannot open " + path + ".json");
  const auto meta = nlohmann::json::parse(meta_in);
  SampleBatch batch;
  batch.n = meta.at("n").get<int>();
  batch.T = meta.at("T").get<std::int64_t>();
  batch.seed = meta.at("seed").get<std::uint64_t>();
  if (meta.at("source").at("kind") == "truncated")
    batch.source = TruncatedSource{ptf_from_json(meta.at("source").at("ptf"), basis)};
  if (meta.contains("acceptance_rate")) batch.acceptance_rate = meta["acceptance_rate"].get<double>();
  batch.points.resize(static_cast<std::size_t>(batch.T * batch.n));
  std::ifstream bin(path + ".bin", std::ios::binary);
  for (auto& v : batch.points) {
    unsigned char bytes[8];
    if (!bin.read(reinterpret_cast<char*>(bytes), 8))
      fail(ErrorKind::kInvalidArgument, "batch file shorter than T*n values");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t{bytes[k]} << (8 * k);
    v = std::bit_cast<double>(bits);
  }
  return batch;
}

}  // namespace truncheck
