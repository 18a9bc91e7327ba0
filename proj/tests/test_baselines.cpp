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
#include "truncheck/baselines.hpp"
#include "truncheck/experiments.hpp"
#include "truncheck/lp.hpp"

using namespace truncheck;

namespace {

std::vector<std::vector<double>> all_points(int n) {
  std::vector<std::vector<double>> out;
  for (const auto& x : oracle::cube(n)) out.emplace_back(x.begin(), x.end());
  return out;
}

}  // namespace

TEST(Lp, OptimalInfeasibleUnbounded) {
  InequalityLp lp;
  lp.num_vars = 2;
  lp.add({1, 0}, 1);
  lp.add({0, 1}, 2);
  lp.add({1, 1}, 4);
  lp.objective = {1, 1};
  auto r = solve_inequality_lp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 4.0, 1e-9);
  EXPECT_GE(r.x[0], 1 - 1e-9);
  EXPECT_GE(r.x[1], 2 - 1e-9);

  InequalityLp bad;
  bad.num_vars = 1;
  bad.add({1}, 1);
  bad.add({-1}, 0);
  EXPECT_EQ(solve_inequality_lp(bad).status, LpStatus::kInfeasible);

  InequalityLp open;
  open.num_vars = 1;
  open.add({1}, 0);
  open.objective = {-1};
  EXPECT_EQ(solve_inequality_lp(open).status, LpStatus::kUnbounded);
}

TEST(Lp, FeasibilityOnlyAndFreeVariables) {
  InequalityLp lp;
  lp.num_vars = 2;
  lp.add({1, 0}, -5);   // x >= -5
  lp.add({-1, 0}, 3);   // x <= -3
  lp.add({1, -1}, 0);   // x >= y
  const auto r = solve_inequality_lp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_LE(r.x[0], -3 + 1e-9);
  EXPECT_GE(r.x[0], -5 - 1e-9);
  EXPECT_GE(r.x[0] - r.x[1], -1e-9);
}

TEST(Lp, RandomFeasibleSystems) {
  // Systems built around a known point are feasible; the answer satisfies all rows.
  std::mt19937_64 eng(3);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    const int k = 6;
    std::vector<double> x0(k);
    for (auto& v : x0) v = nd(eng);
    InequalityLp lp;
    lp.num_vars = k;
    for (int i = 0; i < 40; ++i) {
      std::vector<double> a(k);
      double ax = 0;
      for (int j = 0; j < k; ++j) {
        a[static_cast<std::size_t>(j)] = nd(eng);
        ax += a[static_cast<std::size_t>(j)] * x0[static_cast<std::size_t>(j)];
      }
      lp.add(a, ax - std::abs(nd(eng)));
    }
    const auto r = solve_inequality_lp(lp);
    ASSERT_EQ(r.status, LpStatus::kOptimal);
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
      double ax = 0;
      for (int j = 0; j < k; ++j) ax += lp.rows[i][static_cast<std::size_t>(j)] * r.x[static_cast<std::size_t>(j)];
      EXPECT_GE(ax, lp.rhs[i] - 1e-7);
    }
  }
}

TEST(VcSampleCount, Examples) {
  EXPECT_EQ(vc_sample_count(10, 1, 1.0, 1.0), 11);
  EXPECT_EQ(vc_sample_count(20, 2, 1.0, 1.0), 211);
  EXPECT_EQ(vc_sample_count(20, 2, 0.5, 1.0), 4 * 211);
  EXPECT_EQ(vc_sample_count(10, 1, 0.25, 1.0), 4 * vc_sample_count(10, 1, 0.5, 1.0));
  EXPECT_THROW(vc_sample_count(10, 1, 0.0, 1.0), Error);
}

TEST(Consistency, HalfCubeIsTruncated) {
  const ProductSpace s(BaseDistribution::rademacher(), 6);
  std::vector<std::vector<double>> samples;
  for (auto& x : all_points(6))
    if (x[0] > 0) samples.push_back(x);
  const auto r = consistency_test(samples, 1, 0.5, s);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(*r.witness_volume, 0.5, 1e-12);
  EXPECT_EQ(r.decision, Decision::kTruncated);
  // Witness invariant: margin 1 on every sample.
  const auto b = basis_for(s, 1);
  for (const auto& x : samples) {
    double v = 0;
    for (const auto& [a, c] : r.witness->p.coeffs()) v += c * eval_chi(b, a, x);
    EXPECT_GE(v, 1.0 - 1e-6);
  }
}

TEST(Consistency, FullCubeIsUntruncated) {
  for (int d : {1, 2}) {
    const ProductSpace s(BaseDistribution::rademacher(), 5);
    const auto r = consistency_test(all_points(5), d, 0.1, s);
    ASSERT_TRUE(r.feasible);
    EXPECT_EQ(*r.witness_volume, 1.0);
    EXPECT_EQ(r.decision, Decision::kUnTruncated);
  }
}

TEST(Consistency, NullRateAtVcCounts) {
  // n = 6, d = 1, eps = 1/2 with c_vc = 20: T = 560.
  const int n = 6, d = 1;
  const double eps = 0.5;
  const ProductSpace s(BaseDistribution::rademacher(), n);
  const auto T = vc_sample_count(n, d, eps, 20.0);
  EXPECT_EQ(T, 560);
  int untruncated = 0;
  for (std::uint64_t t = 0; t < 100; ++t)
    untruncated += consistency_test(sample_product(s, T, t), d, eps, s).decision == Decision::kUnTruncated;
  EXPECT_GE(untruncated, 67);
}

TEST(Consistency, OneSidedOnConstructedInstances) {
  // Targets representable with margin inside the box: every run says truncated.
  for (int d : {1, 2}) {
    const int n = 8;
    const ProductSpace s(BaseDistribution::rademacher(), n);
    const auto target = standard_target(n, d);
    const auto b = basis_for(s, d);
    const double eps = 1.0 - volume(target, s, b, Exact{}).mean;
    ASSERT_GT(eps, 0.0);
    for (std::uint64_t t = 0; t < 20; ++t) {
      const auto batch = sample_truncated(s, target, b, vc_sample_count(n, d, 0.5, 1.0), t);
      const auto r = consistency_test(batch, d, eps, s);
      ASSERT_TRUE(r.feasible);
      EXPECT_EQ(r.decision, Decision::kTruncated) << d << " " << t;
    }
  }
}

TEST(Consistency, Errors) {
  EXPECT_THROW(consistency_test(std::vector<std::vector<double>>{{0.1}}, 1, 0.5,
                                ProductSpace(BaseDistribution::gaussian(), 1)),
               Error);
  try {
    consistency_test(std::vector<std::vector<double>>{}, 1, 0.5, ProductSpace(BaseDistribution::rademacher(), 24));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomainTooLarge);
  }
}

TEST(LowVolume, Capacity) {
  EXPECT_EQ(low_volume_capacity(4, 2), 5.0);
  EXPECT_EQ(low_volume_capacity(10, 4), 1 + 10 + 45);
  EXPECT_EQ(low_volume_capacity(10, 3), 11.0);
}

TEST(LowVolume, Examples) {
  const std::vector<std::vector<double>> ones{{1, 1, 1, 1}};
  const auto f = fit_low_volume_ptf(ones, 2, 4);
  EXPECT_TRUE(accepts_exactly(f, ones, 4));
  const auto none = fit_low_volume_ptf(std::vector<std::vector<double>>{}, 2, 4);
  EXPECT_TRUE(accepts_exactly(none, std::vector<std::vector<double>>{}, 4));
  std::vector<std::vector<double>> five;
  for (auto& x : all_points(4))
    if (five.size() < 5) five.push_back(x);
  try {
    fit_low_volume_ptf(five, 2, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPrecondition);
  }
  try {
    fit_low_volume_ptf(ones, 2, 17);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomainTooLarge);
  }
}

TEST(LowVolume, RandomSupportsFitExactly) {
  for (int n : {6, 8, 10}) {
    const int d = 2;
    const auto cap = static_cast<std::int64_t>(low_volume_capacity(n, d));
    for (std::uint64_t t = 0; t < 4; ++t) {
      Rng rng(t, static_cast<std::uint64_t>(n));
      const auto S = random_support(n, std::min<std::int64_t>(cap - 1, 5), rng);
      const auto f = fit_low_volume_ptf(S, d, n);
      EXPECT_TRUE(accepts_exactly(f, S, n)) << n << " " << t;
      EXPECT_LE(f.p.degree_bound(), d);
    }
  }
}

TEST(LowVolume, SupportWithNoExactFit) {
  // n = 6, d = 2, |S| = 6 < 7 = capacity, yet no degree-2 PTF accepts
  // exactly S. Certificate: the 3-dim affine subcube {0,6,8,14,32,38,40,46}
  // splits into S-points {6,8,32,46} and outside points {0,14,38,40} with
  // equal degree-<=2 moments, so sum p over one half equals the other.
  const int n = 6;
  const std::vector<std::uint64_t> S_idx{6, 8, 23, 32, 35, 46};
  const std::vector<std::uint64_t> in{6, 8, 32, 46}, out{0, 14, 38, 40};
  auto point = [&](std::uint64_t i) {
    oracle::Point x(n);
    for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = (i >> k) & 1 ? 1.0 : -1.0;
    return x;
  };
  for (const auto& s : oracle::subsets(n, 0, 2)) {
    double a = 0, b = 0;
    for (auto i : in) a += oracle::parity(point(i), s);
    for (auto i : out) b += oracle::parity(point(i), s);
    EXPECT_EQ(a, b);
  }
  std::vector<std::vector<double>> S;
  for (auto i : S_idx) S.push_back(point(i));
  EXPECT_LT(static_cast<double>(S.size()), low_volume_capacity(n, 2));
  EXPECT_FALSE(exact_fit_exists(S, 2, n));
  try {
    fit_low_volume_ptf(S, 2, n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFeasibilityFailed);
  }
  // Degree 3 can separate the parity split.
  EXPECT_TRUE(exact_fit_exists(S, 3, n));
}

TEST(LowVolume, ExistenceAgreesWithFit) {
  for (std::uint64_t t = 0; t < 10; ++t) {
    Rng rng(t, 99);
    const auto S = random_support(8, 6, rng);
    bool fitted = true;
    try {
      EXPECT_TRUE(accepts_exactly(fit_low_volume_ptf(S, 2, 8), S, 8));
    } catch (const Error&) {
      fitted = false;
    }
    if (fitted) EXPECT_TRUE(exact_fit_exists(S, 2, 8)) << t;
  }
  const std::vector<std::vector<double>> none;
  EXPECT_TRUE(exact_fit_exists(none, 2, 4));
}

TEST(LowVolume, AcceptsExactlyRejectsWrongWitness) {
  const std::vector<std::vector<double>> S{{1, 1, 1}};
  SparsePolynomial p(1);
  p.set(MultiIndex::set({0}), 1.0);
  EXPECT_FALSE(accepts_exactly(Ptf{p, 0.0}, S, 3));
}

TEST(RandomSupport, DistinctPoints) {
  Rng rng(5);
  const auto S = random_support(4, 16, rng);
  std::set<std::uint64_t> idx;
  for (const auto& x : S) idx.insert(cube_index(x));
  EXPECT_EQ(idx.size(), 16u);
  EXPECT_THROW(random_support(3, 9, rng), Error);
  EXPECT_EQ(cube_index(std::vector<double>{1, -1, 1}), 5u);
}

TEST(Birthday, SingleDrawNeverCollides) {
  BirthdayConfig c;
  c.m = 1;
  c.trials = 200;
  const auto r = birthday_experiment(c);
  EXPECT_EQ(r.collision_frequency, 0.0);
  EXPECT_EQ(r.exact_collision_probability, 0.0);
}

TEST(Birthday, HundredSupportTenDraws) {
  BirthdayConfig c;
  c.support = 100;
  c.m = 10;
  c.trials = 20000;
  c.seed = 4;
  const auto r = birthday_experiment(c);
  EXPECT_NEAR(r.expected_pair_collisions, 0.45, 1e-12);
  // Exact: 1 - prod_{i<10} (1 - i/100).
  double none = 1;
  for (int i = 1; i < 10; ++i) none *= 1 - i / 100.0;
  EXPECT_NEAR(r.exact_collision_probability, 1 - none, 1e-12);
  EXPECT_LE(std::abs(r.collision_frequency - r.exact_collision_probability), 4 * r.collision_sigma);
  EXPECT_LE(std::abs(r.mean_pair_collisions - 0.45), 4 * r.pair_sigma);
  EXPECT_NEAR(r.birthday_bound, 0.5, 1e-12);
}

TEST(Birthday, ThroughFittedPtf) {
  BirthdayConfig c;
  c.n = 10;
  c.d = 4;
  c.support = 40;
  c.m = 6;
  c.trials = 3000;
  c.fit_ptf = true;
  const auto r = birthday_experiment(c);
  EXPECT_LE(std::abs(r.collision_frequency - r.exact_collision_probability), 4 * r.collision_sigma);
}

TEST(Birthday, SmallMBelowTolerance) {
  // m = 0.1 sqrt(|S|): collision probability about c^2 / 2 = 0.005.
  BirthdayConfig c;
  c.support = 10000;
  c.n = 16;
  c.m = 10;
  c.trials = 5000;
  const auto r = birthday_experiment(c);
  const double eps_collision = 0.02;
  EXPECT_LT(r.exact_collision_probability, eps_collision);
  EXPECT_LT(r.collision_frequency, eps_collision);
}
