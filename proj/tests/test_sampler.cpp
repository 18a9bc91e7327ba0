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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "truncheck/sampler.hpp"

using namespace truncheck;

namespace {

const UnivariateBasis& rad1() {
  static const auto b = gram_schmidt(BaseDistribution::rademacher(), 1);
  return b;
}

Ptf first_coordinate() {
  SparsePolynomial p(1);
  p.set(MultiIndex::set({0}), 1.0);
  return {p, 0.0};
}

std::uint64_t index_of(std::span<const double> x) {
  std::uint64_t i = 0;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] > 0) i |= std::uint64_t{1} << k;
  return i;
}

}  // namespace

TEST(SampleProduct, RademacherEntries) {
  const auto b = sample_product(ProductSpace(BaseDistribution::rademacher(), 3), 4, 1);
  ASSERT_EQ(b.points.size(), 12u);
  for (double v : b.points) EXPECT_TRUE(v == 1.0 || v == -1.0);
  EXPECT_FALSE(b.acceptance_rate.has_value());
}

TEST(SampleProduct, Deterministic) {
  const ProductSpace s(BaseDistribution::gaussian(), 5);
  const auto a = sample_product(s, 1000, 99);
  EXPECT_EQ(a.points, sample_product(s, 1000, 99).points);
  EXPECT_NE(a.points, sample_product(s, 1000, 100).points);
}

TEST(SampleProduct, IndependentOfThreadCount) {
  const ProductSpace s(BaseDistribution::gaussian(), 4);
  set_threads(1);
  const auto a = sample_product(s, 3000, 5);
  set_threads(4);
  const auto b = sample_product(s, 3000, 5);
  set_threads(0);
  EXPECT_EQ(a.points, b.points);
}

TEST(SampleProduct, GaussianCoordinateMeans) {
  const int n = 3;
  const std::int64_t T = 100'000;
  const auto b = sample_product(ProductSpace(BaseDistribution::gaussian(), n), T, 3);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t r = 0; r < T; ++r) s += b.row(r)[static_cast<std::size_t>(i)];
    EXPECT_LT(std::abs(s / T), 4.0 / std::sqrt(static_cast<double>(T)));
  }
}

TEST(SampleProduct, RejectsEmpty) { EXPECT_THROW(sample_product(ProductSpace(BaseDistribution::rademacher(), 2), 0, 1), Error); }

TEST(SampleTruncated, HalfCube) {
  const ProductSpace s(BaseDistribution::rademacher(), 6);
  const auto b = sample_truncated(s, first_coordinate(), rad1(), 500, 8);
  for (std::int64_t r = 0; r < b.T; ++r) EXPECT_EQ(b.row(r)[0], 1.0);
  ASSERT_TRUE(b.acceptance_rate.has_value());
}

TEST(SampleTruncated, AcceptanceRateTracksVolume) {
  const ProductSpace s(BaseDistribution::rademacher(), 12);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed, 21);
    const auto f = random_dense_ptf(s, 2, rng);
    const double v = volume(f, s, rad1(), Exact{}).mean;
    if (v < 0.01) continue;
    const auto b = sample_truncated(s, f, rad1(), 20'000, seed);
    const double proposed = static_cast<double>(b.T) / *b.acceptance_rate;
    EXPECT_LE(std::abs(*b.acceptance_rate - v), 4 * std::sqrt(v * (1 - v) / proposed)) << seed;
  }
}

TEST(SampleTruncated, NeverAcceptingFails) {
  SparsePolynomial p(1);
  p.set(MultiIndex{}, -1.0);
  try {
    sample_truncated(ProductSpace(BaseDistribution::rademacher(), 4), Ptf{p, 0.0}, rad1(), 3, 1, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kVolumeTooSmall);
  }
  EXPECT_THROW(sample_truncated(ProductSpace(BaseDistribution::rademacher(), 4), first_coordinate(), rad1(), 3, 1, 0),
               Error);
}

TEST(SampleTruncated, ConditionalLawMatchesEnumeration) {
  const int n = 8;
  const ProductSpace s(BaseDistribution::rademacher(), n);
  Rng rng(17);
  const auto f = random_dense_ptf(s, 2, rng);
  // Exact target: uniform on the accepted points.
  const auto mask = accept_mask(f, s, rad1());
  double accepted = 0;
  for (char c : mask) accepted += c;
  ASSERT_GT(accepted, 0);
  const std::int64_t T = 1'000'000;
  const auto b = sample_truncated(s, f, rad1(), T, 2);
  std::vector<double> freq(mask.size(), 0.0);
  for (std::int64_t r = 0; r < T; ++r) freq[index_of(b.row(r))] += 1.0 / static_cast<double>(T);
  double tv = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) tv += std::abs(freq[i] - (mask[i] ? 1.0 / accepted : 0.0));
  EXPECT_LE(0.5 * tv, 0.01);
}

TEST(Batch, PersistenceRoundTrip) {
  const ProductSpace s(BaseDistribution::rademacher(), 5);
  const auto b = sample_truncated(s, first_coordinate(), rad1(), 50, 4);
  const auto path = (std::filesystem::temp_directory_path() / "truncheck_batch_test").string();
  write_batch(b, path);
  const auto back = read_batch(path, rad1());
  EXPECT_EQ(back.points, b.points);
  EXPECT_EQ(back.T, 50);
  EXPECT_EQ(back.seed, 4u);
  EXPECT_TRUE(std::holds_alternative<TruncatedSource>(back.source));
  EXPECT_EQ(std::filesystem::file_size(path + ".bin"), 50u * 5u * 8u);
  std::filesystem::remove(path + ".bin");
  std::filesystem::remove(path + ".json");
}
