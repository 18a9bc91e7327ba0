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

#include "oracles.hpp"
#include "truncheck/fourier.hpp"
#include "truncheck/lower_bound.hpp"
#include "truncheck/ptf.hpp"

using namespace truncheck;

namespace {

const UnivariateBasis& rad1() {
  static const auto b = gram_schmidt(BaseDistribution::rademacher(), 1);
  return b;
}

Ptf single(std::vector<int> coords, double c = 1.0, double theta = 0.0) {
  SparsePolynomial p(static_cast<int>(coords.size()));
  p.set(MultiIndex::set(std::move(coords)), c);
  return {p, theta};
}

}  // namespace

TEST(Eval, Examples) {
  const auto f = single({0});
  EXPECT_TRUE(eval(f, rad1(), std::vector<double>{1, 1, 1}));
  EXPECT_FALSE(eval(f, rad1(), std::vector<double>{-1, 1, 1}));
  EXPECT_TRUE(eval(single({0, 1}), rad1(), std::vector<double>{-1, -1}));
}

TEST(Eval, TiesAccept) {
  // p(x) = x1 + x2 is zero on half the cube; those points accept.
  SparsePolynomial p(1);
  p.set(MultiIndex::set({0}), 1.0);
  p.set(MultiIndex::set({1}), 1.0);
  const Ptf f{p, 0.0};
  EXPECT_TRUE(eval(f, rad1(), std::vector<double>{1, -1}));
  EXPECT_FALSE(eval(f, rad1(), std::vector<double>{-1, -1}));
  const ProductSpace s(BaseDistribution::rademacher(), 2);
  EXPECT_EQ(volume(f, s, rad1(), Exact{}).mean, 0.75);
}

TEST(Normalize, FoldsConstantAndScales) {
  SparsePolynomial p(1);
  p.set(MultiIndex::set({0}), 2.0);
  p.set(MultiIndex{}, 1.0);
  const auto g = normalize(Ptf{p, 0.0});
  EXPECT_EQ(g.p.size(), 1u);
  EXPECT_NEAR(g.p.coeff(MultiIndex::set({0})), 1.0, 1e-15);
  EXPECT_NEAR(g.theta, -0.5, 1e-15);
  const auto h = normalize(single({0, 1}));
  EXPECT_EQ(h.p.coeff(MultiIndex::set({0, 1})), 1.0);
  EXPECT_EQ(h.theta, 0.0);
}

TEST(Normalize, ConstantPolynomialRejected) {
  SparsePolynomial p(2);
  p.set(MultiIndex{}, 3.0);
  try {
    normalize(Ptf{p, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConstantPolynomial);
  }
}

TEST(Normalize, RandomDenseUnitVarianceAndSameAcceptRegion) {
  const ProductSpace s(BaseDistribution::uniform_on({-1, 0, 1}), 5);
  const auto b = basis_for(s, 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto f = random_dense_ptf(s, 2, rng);
    const auto g = normalize(f);
    // Variance recomputed from the values, not from the coefficients.
    const auto vals = poly_values(g.p, s, b);
    double m1 = 0, m2 = 0;
    for_each_point(s, [&](std::span<const double>, double w, std::uint64_t i) {
      m1 += w * vals[i];
      m2 += w * vals[i] * vals[i];
    });
    EXPECT_NEAR(m2 - m1 * m1, 1.0, 1e-9);
    EXPECT_NEAR(m1, 0.0, 1e-9);
    EXPECT_EQ(accept_mask(f, s, b), accept_mask(g, s, b));
  }
}

TEST(RandomHomogeneous, SupportSize) {
  Rng rng(1);
  const auto f = random_homogeneous_ptf(5, 2, rng);
  EXPECT_EQ(f.p.size(), 10u);
  for (const auto& [a, c] : f.p.coeffs()) {
    EXPECT_EQ(a.total_degree(), 2);
    EXPECT_EQ(a.support_size(), 2);
  }
  EXPECT_EQ(f.theta, 0.0);
  EXPECT_THROW(random_homogeneous_ptf(3, 4, rng), Error);
}

TEST(RandomHomogeneous, OddDegreeExactlyBalanced) {
  for (int n : {5, 9, 12, 14}) {
    for (int d : {1, 3}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(seed, static_cast<std::uint64_t>(n * 10 + d));
        const auto f = random_homogeneous_ptf(n, d, rng);
        const ProductSpace s(BaseDistribution::rademacher(), n);
        EXPECT_EQ(volume(f, s, rad1(), Exact{}).mean, 0.5) << n << " " << d;
      }
    }
  }
}

TEST(RandomHomogeneous, BalancedBandAtSixteen) {
  LbConfig cfg;
  cfg.n = 16;
  cfg.d = 2;
  cfg.trials = 200;
  cfg.seed = 5;
  const auto r = balancedness_experiment(cfg);
  EXPECT_GE(r.in_band_fraction, 0.95);
}

TEST(Volume, Examples) {
  const ProductSpace s(BaseDistribution::rademacher(), 10);
  SparsePolynomial p(1);
  for (int i = 0; i < 10; ++i) p.set(MultiIndex::set({i}), 1.0);
  EXPECT_EQ(volume(Ptf{p, 10.0}, s, rad1(), Exact{}).mean, 1.0 / 1024.0);
  const auto v = volume(single({0}), s, rad1(), Exact{});
  EXPECT_EQ(v.mean, 0.5);
  EXPECT_EQ(v.std_error, 0.0);
}

TEST(Volume, MonteCarloAgreesWithExact) {
  const ProductSpace s(BaseDistribution::rademacher(), 12);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed, 77);
    const auto f = random_dense_ptf(s, 2, rng);
    const double exact = volume(f, s, rad1(), Exact{}).mean;
    const auto mc = volume(f, s, rad1(), MonteCarlo{1'000'000, seed});
    EXPECT_LE(std::abs(mc.mean - exact), 4 * mc.std_error + 1e-12);
  }
}

TEST(Volume, ExactAgreesWithIndependentEnumeration) {
  const int n = 8;
  const ProductSpace s(BaseDistribution::rademacher(), n);
  Rng rng(3);
  const auto f = random_dense_ptf(s, 2, rng);
  double count = 0;
  for (const auto& x : oracle::cube(n)) {
    double v = f.p.coeff(MultiIndex{});
    for (const auto& sub : oracle::subsets(n, 1, 2)) v += f.p.coeff(MultiIndex::set(sub)) * oracle::parity(x, sub);
    if (v >= f.theta) ++count;
  }
  EXPECT_NEAR(volume(f, s, rad1(), Exact{}).mean, count / 256.0, 1e-15);
}

TEST(Volume, DomainTooLarge) {
  const ProductSpace s(BaseDistribution::rademacher(), 25);
  try {
    volume(single({0}), s, rad1(), Exact{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomainTooLarge);
  }
  EXPECT_THROW(volume(single({0}), ProductSpace(BaseDistribution::gaussian(), 2), rad1(), Exact{}), Error);
}

TEST(Complement, VolumeIdentityWithoutTies) {
  const ProductSpace s(BaseDistribution::rademacher(), 9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed, 5);
    const auto f = random_dense_ptf(s, 2, rng);  // Gaussian coefficients: no ties
    const auto g = complement(f, 1e-12);
    EXPECT_NEAR(volume(g, s, rad1(), Exact{}).mean, 1.0 - volume(f, s, rad1(), Exact{}).mean, 1e-12);
  }
  // With ties the shift decides where the tie points go.
  const auto par = single({0, 1});
  EXPECT_EQ(volume(complement(par), ProductSpace(BaseDistribution::rademacher(), 2), rad1(), Exact{}).mean, 0.5);
}

TEST(Json, RoundTripChiAndMonomial) {
  const ProductSpace s(BaseDistribution::gaussian(), 3);
  const auto b = basis_for(s, 2);
  Rng rng(4);
  auto f = random_dense_ptf(s, 2, rng);
  f.theta = 0.3;
  const auto back = ptf_from_json(to_json(f), b);
  EXPECT_EQ(back.theta, f.theta);
  for (const auto& [a, c] : f.p.coeffs()) EXPECT_EQ(back.p.coeff(a), c);
  // Monomial input x_0^2 equals 1 + sqrt(2) chi_2.
  const auto j = nlohmann::json::parse(R"({"basis":"monomial","theta":0,"coeffs":[[[[0,2]],1.0]]})");
  const auto m = ptf_from_json(j, b);
  EXPECT_NEAR(m.p.coeff(MultiIndex{}), 1.0, 1e-12);
  EXPECT_NEAR(m.p.coeff(MultiIndex({{0, 2}})), std::sqrt(2.0), 1e-12);
}

TEST(SparsePolynomial, Invariants) {
  SparsePolynomial p(2);
  p.set(MultiIndex::set({0}), 0.0);
  EXPECT_EQ(p.size(), 0u);
  EXPECT_THROW(p.set(MultiIndex::set({0, 1, 2}), 1.0), Error);
  p.set(MultiIndex::set({0}), 1.0);
  p.add(MultiIndex::set({0}), -1.0);
  EXPECT_EQ(p.size(), 0u);
}
