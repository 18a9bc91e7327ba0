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

// Comparison testers: the VC-style consistency tester and the low-volume
// exact-fit PTFs with their birthday-collision behaviour.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "truncheck/basis.hpp"
#include "truncheck/detector.hpp"
#include "truncheck/distribution.hpp"
#include "truncheck/domain.hpp"
#include "truncheck/error.hpp"
#include "truncheck/lp.hpp"
#include "truncheck/parallel.hpp"
#include "truncheck/ptf.hpp"
#include "truncheck/rng.hpp"
#include "truncheck/sampler.hpp"

namespace truncheck {

inline constexpr double kCoefficientBox = 1e3;
inline constexpr double kL1Weight = 1e-3;

/// ceil(c_vc * sum_{k<=d} C(n,k) / eps^2).
inline std::int64_t vc_sample_count(int n, int d, double epsilon, double c_vc) {
  if (n < 1 || d < 0 || !(epsilon > 0.0) || !(c_vc > 0.0))
    fail(ErrorKind::kInvalidArgument, "vc_sample_count needs n >= 1, d >= 0, eps > 0, c_vc > 0");
  double dim = 0.0;
  for (int k = 0; k <= std::min(d, n); ++k) dim += binomial(n, k);
  return static_cast<std::int64_t>(std::ceil(c_vc * dim / (epsilon * epsilon) - 1e-9));
}

struct ConsistencyResult {
  bool feasible = false;
  std::optional<Ptf> witness;
  std::optional<double> witness_volume;
  Decision decision = Decision::kUnTruncated;
};

namespace detail {

// Indices 0 .. d (including the empty index) for the space's basis.
inline std::vector<MultiIndex> indices_with_constant(const ProductSpace& space, int d) {
  std::vector<MultiIndex> out{MultiIndex{}};
  for (auto& a : enumerate_indices(space, d)) out.push_back(std::move(a));
  return out;
}

inline std::vector<double> chi_row(const std::vector<MultiIndex>& idx, const UnivariateBasis& basis,
                                   std::span<const double> x) {
  std::vector<double> row(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) row[k] = eval_chi(basis, idx[k], x);
  return row;
}

// A v >= b over `k` coefficients plus `extra` auxiliary variables, with
// the box |v_j| <= B on the coefficients.
inline InequalityLp boxed_lp(std::size_t k, std::size_t extra = 0) {
  InequalityLp lp;
  lp.num_vars = static_cast<int>(k + extra);
  for (std::size_t j = 0; j < k; ++j) {
    for (double s : {1.0, -1.0}) {
      std::vector<double> r(k + extra, 0.0);
      r[j] = s;
      lp.add(std::move(r), -kCoefficientBox);
    }
  }
  return lp;
}

inline std::vector<double> padded(std::vector<double> a, std::size_t width) {
  a.resize(width, 0.0);
  return a;
}

inline SparsePolynomial polynomial_from(const std::vector<MultiIndex>& idx, const std::vector<double>& v,
                                        int d) {
  SparsePolynomial p(d);
  for (std::size_t j = 0; j < idx.size(); ++j)
    if (std::abs(v[j]) > 1e-12) p.set(idx[j], v[j]);
  return p;
}

}  // namespace detail

/// Searches for p of degree <= d with p(x) >= 1 on every sample (box
/// [-B, B], objective: mean of p plus a small L1 penalty on the
/// non-constant part). If found, "truncated" iff vol{p >= 0} <= 1 - eps.
inline ConsistencyResult consistency_test(std::span<const std::vector<double>> samples, int d,
                                          double epsilon, const ProductSpace& space) {
  if (!space.base.is_finite()) fail(ErrorKind::kDomainTooLarge, "consistency test needs a finite base");
  checked_domain_size(space, std::uint64_t{1} << 20);
  if (d < 1) fail(ErrorKind::kInvalidArgument, "degree must be >= 1");
  const auto basis = basis_for(space, d);
  const auto idx = detail::indices_with_constant(space, d);
  // Variables: v (k coefficients) then t_j >= |v_j| for the non-constant j.
  const std::size_t k = idx.size();
  const std::size_t width = 2 * k - 1;
  auto lp = detail::boxed_lp(k, k - 1);
  for (std::size_t j = 1; j < k; ++j) {
    for (double s : {1.0, -1.0}) {
      std::vector<double> r(width, 0.0);
      r[j] = s;
      r[k + j - 1] = 1.0;
      lp.add(std::move(r), 0.0);
    }
  }
  std::set<std::vector<double>> seen;
  for (const auto& x : samples) {
    if (static_cast<int>(x.size()) != space.n) fail(ErrorKind::kDimensionMismatch, "sample length != n");
    if (seen.insert(x).second) lp.add(detail::padded(detail::chi_row(idx, basis, x), width), 1.0);
  }
  lp.objective.assign(width, kL1Weight);
  lp.objective[0] = 1.0;
  for (std::size_t j = 1; j < k; ++j) lp.objective[j] = 0.0;
  const auto res = solve_inequality_lp(lp);
  ConsistencyResult out;
  if (res.status == LpStatus::kIterationLimit || res.status == LpStatus::kUnbounded)
    fail(ErrorKind::kFeasibilityFailed, "simplex did not converge");
  if (res.status == LpStatus::kInfeasible) return out;
  out.feasible = true;
  Ptf w{detail::polynomial_from(idx, {res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(k)}, d), 0.0};
  out.witness_volume = volume(w, space, basis, Exact{}).mean;
  out.witness = std::move(w);
  out.decision = *out.witness_volume <= 1.0 - epsilon ? Decision::kTruncated : Decision::kUnTruncated;
  return out;
}

inline ConsistencyResult consistency_test(const SampleBatch& batch, int d, double epsilon,
                                          const ProductSpace& space) {
  std::vector<std::vector<double>> rows;
  for (std::int64_t i = 0; i < batch.T; ++i) {
    auto r = batch.row(i);
    rows.emplace_back(r.begin(), r.end());
  }
  return consistency_test(rows, d, epsilon, space);
}

/// sum_{i <= floor(d/2)} C(n, i): the size bound below which exact-fit
/// degree-d PTFs exist.
inline double low_volume_capacity(int n, int d) {
  double s = 0.0;
  for (int i = 0; i <= d / 2; ++i) s += binomial(n, i);
  return s;
}

inline constexpr int kMaxFitDimension = 16;

/// Index of a +-1 point in hypercube enumeration order (bit i set iff
/// x_i = +1).
inline std::uint64_t cube_index(std::span<const double> x) {
  std::uint64_t i = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] == 1.0) i |= std::uint64_t{1} << k;
    else if (x[k] != -1.0) fail(ErrorKind::kInvalidArgument, "point is not in {-1,1}^n");
  }
  return i;
}

namespace detail {

// Constraint generation over {-1,1}^n for p >= in_margin on `members`,
// p <= -out_margin elsewhere.
//   kFit:    in = out = 1, |coeff| <= B, generic objective.
//   kMargin: in = 0, out = t with t maximized, |coeff| <= 1, t <= 1.
// Returns the polynomial and t (1 for kFit), or nullopt when infeasible.
enum class SeparationMode { kFit, kMargin };

struct Separation {
  Ptf f;
  double margin = 0.0;
};

inline std::optional<Separation> separate(const std::set<std::uint64_t>& members, int d, int n,
                                          SeparationMode mode) {
  const bool fit = mode == SeparationMode::kFit;
  const ProductSpace space(BaseDistribution::rademacher(), n);
  const auto basis = basis_for(space, d);
  const auto idx = indices_with_constant(space, d);
  const std::size_t k = idx.size();
  const std::size_t width = fit ? k : k + 1;  // t is the last variable
  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<double> x(static_cast<std::size_t>(n));
  auto point = [&](std::uint64_t i) {
    for (int c = 0; c < n; ++c) x[static_cast<std::size_t>(c)] = (i >> c) & 1 ? 1.0 : -1.0;
    return std::span<const double>(x);
  };
  InequalityLp lp;
  lp.num_vars = static_cast<int>(width);
  for (std::size_t j = 0; j < k; ++j) {
    for (double sgn : {1.0, -1.0}) {
      std::vector<double> r(width, 0.0);
      r[j] = sgn;
      lp.add(std::move(r), fit ? -kCoefficientBox : -1.0);
    }
  }
  lp.objective.assign(width, 0.0);
  if (fit) {
    // A generic objective keeps the dual away from the all-degenerate cone a
    // zero objective produces.
    for (std::size_t j = 0; j < k; ++j) lp.objective[j] = 1.0 + 1e-3 * static_cast<double>(j);
  } else {
    std::vector<double> r(width, 0.0);
    r[k] = -1.0;
    lp.add(std::move(r), -1.0);
    lp.objective[k] = -1.0;
  }
  std::vector<char> active(total, 0);
  auto add_point = [&](std::uint64_t i) {
    auto row = padded(chi_row(idx, basis, point(i)), width);
    if (members.count(i)) {
      lp.add(std::move(row), fit ? 1.0 : 0.0);
    } else {
      for (std::size_t j = 0; j < k; ++j) row[j] = -row[j];
      if (!fit) row[k] = -1.0;
      lp.add(std::move(row), fit ? 1.0 : 0.0);
    }
    active[i] = 1;
  };
  for (auto i : members) add_point(i);
  // Seed with an even spread of outside points.
  const std::uint64_t seeds = std::min<std::uint64_t>(total, 2 * k);
  for (std::uint64_t j = 0; j < seeds; ++j) {
    const std::uint64_t i = j * total / seeds;
    if (!active[i]) add_point(i);
  }
  constexpr int kMaxRounds = 100;
  constexpr std::size_t kBatch = 128;
  for (int round = 0; round < kMaxRounds; ++round) {
    const auto res = solve_inequality_lp(lp);
    if (res.status == LpStatus::kInfeasible) return std::nullopt;
    if (res.status != LpStatus::kOptimal) fail(ErrorKind::kFeasibilityFailed, "simplex did not converge");
    const double t = fit ? 1.0 : res.x[k];
    // t* only shrinks as constraints are added, so a vanishing margin on a
    // subset already settles the question.
    if (!fit && t <= kLpTolerance) return std::nullopt;
    Separation out{{polynomial_from(idx, {res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(k)}, d), 0.0}, t};
    const auto values = poly_values(out.f.p, space, basis);
    const double in_margin = fit ? 1.0 : 0.0;
    std::vector<std::pair<double, std::uint64_t>> violated;
    for (std::uint64_t i = 0; i < total; ++i) {
      const double slack = members.count(i) ? values[i] - in_margin : -t - values[i];
      if (slack < -kLpTolerance * 10 && !active[i]) violated.push_back({slack, i});
    }
    if (violated.empty()) return out;
    std::sort(violated.begin(), violated.end());
    for (std::size_t c = 0; c < std::min(kBatch, violated.size()); ++c) add_point(violated[c].second);
  }
  fail(ErrorKind::kFeasibilityFailed, "constraint generation did not converge");
}

}  // namespace detail

/// Degree-d PTF over {-1,1}^n accepting exactly S: linear feasibility with
/// p >= 1 on S and p <= -1 off S, by constraint generation over all 2^n
/// points, then verified by enumeration.
inline Ptf fit_low_volume_ptf(std::span<const std::vector<double>> S, int d, int n) {
  if (n < 1 || n > kMaxFitDimension) fail(ErrorKind::kDomainTooLarge, "exact fit needs 1 <= n <= 16");
  if (d < 1) fail(ErrorKind::kInvalidArgument, "degree must be >= 1");
  std::set<std::uint64_t> members;
  for (const auto& x : S) {
    if (static_cast<int>(x.size()) != n) fail(ErrorKind::kDimensionMismatch, "point length != n");
    members.insert(cube_index(x));
  }
  if (!(static_cast<double>(members.size()) < low_volume_capacity(n, d)))
    fail(ErrorKind::kPrecondition, "|S| must be < sum_{i<=d/2} C(n,i)");
  if (members.empty()) {
    SparsePolynomial p(d);
    p.set(MultiIndex{}, -1.0);
    return {p, 0.0};
  }
  auto sep = detail::separate(members, d, n, detail::SeparationMode::kFit);
  if (!sep) fail(ErrorKind::kFeasibilityFailed, "margin-1 relaxation infeasible");
  const Ptf& f = sep->f;
  const ProductSpace space(BaseDistribution::rademacher(), n);
  const auto values = poly_values(f.p, space, basis_for(space, d));
  for (std::uint64_t i = 0; i < values.size(); ++i)
    if ((values[i] >= 0.0) != (members.count(i) > 0))
      fail(ErrorKind::kFeasibilityFailed, "witness does not accept exactly S");
  return f;
}

/// Whether any degree-d PTF accepts exactly S (ties accepted), via the
/// largest t with p >= 0 on S, p <= -t off S, |coeff| <= 1. By scale
/// invariance a PTF exists iff t > 0, so false means none exists at all,
/// not merely none within the fitting box.
inline bool exact_fit_exists(std::span<const std::vector<double>> S, int d, int n) {
  if (n < 1 || n > kMaxFitDimension) fail(ErrorKind::kDomainTooLarge, "exact fit needs 1 <= n <= 16");
  std::set<std::uint64_t> members;
  for (const auto& x : S) {
    if (static_cast<int>(x.size()) != n) fail(ErrorKind::kDimensionMismatch, "point length != n");
    members.insert(cube_index(x));
  }
  return detail::separate(members, d, n, detail::SeparationMode::kMargin).has_value();
}

/// Exact accept-set check of a witness: f(x) = 1 iff x in S.
inline bool accepts_exactly(const Ptf& f, std::span<const std::vector<double>> S, int n) {
  const ProductSpace space(BaseDistribution::rademacher(), n);
  const auto basis = basis_for(space, std::max(1, f.p.degree_bound()));
  std::set<std::uint64_t> members;
  for (const auto& x : S) members.insert(cube_index(x));
  const auto mask = accept_mask(f, space, basis);
  for (std::uint64_t i = 0; i < mask.size(); ++i)
    if (static_cast<bool>(mask[i]) != (members.count(i) > 0)) return false;
  return true;
}

/// `size` distinct uniformly random points of {-1,1}^n.
inline std::vector<std::vector<double>> random_support(int n, std::int64_t size, Rng& rng) {
  if (n > 62 || static_cast<double>(size) > std::ldexp(1.0, n))
    fail(ErrorKind::kInvalidArgument, "support larger than the cube");
  std::set<std::uint64_t> chosen;
  std::vector<std::vector<double>> out;
  while (static_cast<std::int64_t>(out.size()) < size) {
    const std::uint64_t i = n == 64 ? rng.next_u64() : rng.next_u64() & ((std::uint64_t{1} << n) - 1);
    if (!chosen.insert(i).second) continue;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = (i >> k) & 1 ? 1.0 : -1.0;
    out.push_back(std::move(x));
  }
  return out;
}

struct BirthdayConfig {
  int n = 12;
  int d = 4;
  std::int64_t support = 100;
  int m = 10;
  int trials = 1000;
  std::uint64_t seed = 0;
  // Fit and verify the exact-fit PTF, then draw through the rejection
  // sampler; otherwise draw uniformly from S, which is the same law.
  bool fit_ptf = false;
};

struct BirthdayResult {
  double collision_frequency = 0.0;  // trials with at least one repeat
  double exact_collision_probability = 0.0;
  double collision_sigma = 0.0;
  double mean_pair_collisions = 0.0;
  double expected_pair_collisions = 0.0;  // C(m,2)/|S|
  double pair_sigma = 0.0;
  double birthday_bound = 0.0;  // m^2 / (2|S|)
};

inline BirthdayResult birthday_experiment(const BirthdayConfig& cfg) {
  if (cfg.m < 1 || cfg.trials < 1 || cfg.support < 1)
    fail(ErrorKind::kInvalidArgument, "birthday experiment needs m, trials, support >= 1");
  Rng srng(cfg.seed, derive_stream({0x53555050ULL}));
  const auto S = random_support(cfg.n, cfg.support, srng);
  const double s = static_cast<double>(cfg.support);
  std::optional<Ptf> f;
  std::optional<UnivariateBasis> basis;
  const ProductSpace space(BaseDistribution::rademacher(), cfg.n);
  if (cfg.fit_ptf) {
    f = fit_low_volume_ptf(S, cfg.d, cfg.n);
    basis = basis_for(space, cfg.d);
  }
  std::vector<char> any(static_cast<std::size_t>(cfg.trials), 0);
  std::vector<std::int64_t> pairs(static_cast<std::size_t>(cfg.trials), 0);
  parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t t) {
    std::vector<std::uint64_t> draws;
    if (f) {
      const auto batch = sample_truncated(space, *f, *basis, cfg.m, derive_stream({cfg.seed, 0x42444159ULL, t}));
      for (int i = 0; i < cfg.m; ++i) draws.push_back(cube_index(batch.row(i)));
    } else {
      Rng rng(cfg.seed, derive_stream({0x42444159ULL, t}));
      for (int i = 0; i < cfg.m; ++i) draws.push_back(rng.below(static_cast<std::uint64_t>(cfg.support)));
    }
    std::map<std::uint64_t, std::int64_t> counts;
    for (auto v : draws) ++counts[v];
    std::int64_t p = 0;
    for (const auto& [v, c] : counts) p += c * (c - 1) / 2;
    pairs[t] = p;
    any[t] = p > 0;
  });
  BirthdayResult r;
  std::int64_t hits = 0, pair_total = 0;
  for (std::size_t t = 0; t < any.size(); ++t) {
    hits += any[t];
    pair_total += pairs[t];
  }
  r.collision_frequency = static_cast<double>(hits) / cfg.trials;
  r.mean_pair_collisions = static_cast<double>(pair_total) / cfg.trials;
  double none = 1.0;
  for (int i = 1; i < cfg.m; ++i) none *= std::max(0.0, 1.0 - i / s);
  r.exact_collision_probability = 1.0 - none;
  r.collision_sigma = std::sqrt(r.exact_collision_probability * none / cfg.trials);
  const double npairs = binomial(cfg.m, 2);
  r.expected_pair_collisions = npairs / s;
  // Pair-collision indicators are pairwise independent under uniform draws.
  r.pair_sigma = std::sqrt(npairs * (1.0 / s) * (1.0 - 1.0 / s) / cfg.trials);
  r.birthday_bound = static_cast<double>(cfg.m) * cfg.m / (2.0 * s);
  return r;
}

}  // namespace truncheck
