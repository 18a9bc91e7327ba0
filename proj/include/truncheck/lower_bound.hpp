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

// Simulation of the random homogeneous PTF ensemble behind the
// n^{d/2} sample lower bound.
//
// A draw p_hat ~ N(0,1)^{C(n,d)} evaluated at hypercube points u(1..M) gives
// the Gaussian vector (p_hat . Phi'(u(i)))_i with covariance Sigma_2, the Gram
// matrix of the normalized feature vectors Phi'(u) = Phi(u) / sqrt(C(n,d)).
// Comparing with N(0, I) through the covariance TV bound
// 1.5 min{1, sqrt(tr(A^2))}, A = Sigma_2 - I, is what makes the truncated
// and untruncated bit patterns hard to tell apart.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "truncheck/distribution.hpp"
#include "truncheck/error.hpp"
#include "truncheck/parallel.hpp"
#include "truncheck/ptf.hpp"
#include "truncheck/rng.hpp"

namespace truncheck {

using PointSet = std::vector<std::vector<double>>;

inline constexpr double kGoodTraceBound = 1.0 / 90000.0;

/// Unnormalized Phi(u) = (u_S)_{|S| = d}, subsets in lexicographic order.
inline std::vector<double> phi_unnormalized(std::span<const double> u, int d) {
  const int n = static_cast<int>(u.size());
  for (double v : u)
    if (v != 1.0 && v != -1.0) fail(ErrorKind::kInvalidArgument, "phi needs a +-1 vector");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(binomial(n, d)));
  for_each_subset(n, d, [&](std::span<const int> s) {
    double prod = 1.0;
    for (int i : s) prod *= u[static_cast<std::size_t>(i)];
    out.push_back(prod);
  });
  return out;
}

/// Phi'(u) = Phi(u) / sqrt(C(n,d)), a unit vector.
inline std::vector<double> phi(std::span<const double> u, int d) {
  auto v = phi_unnormalized(u, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
  for (auto& x : v) x *= scale;
  return v;
}

struct GramSummary {
  int M = 0;
  Eigen::MatrixXd sigma2;
  double trace_A2 = 0.0;
  double dmr_bound = 0.0;
  bool is_good = false;
};

inline GramSummary gram_summary(const PointSet& points, int d) {
  if (points.size() < 2) fail(ErrorKind::kInvalidArgument, "gram summary needs >= 2 points");
  const auto M = static_cast<Eigen::Index>(points.size());
  const auto dim = static_cast<Eigen::Index>(binomial(static_cast<int>(points[0].size()), d));
  Eigen::MatrixXd features(dim, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    const auto f = phi(points[static_cast<std::size_t>(i)], d);
    if (static_cast<Eigen::Index>(f.size()) != dim) fail(ErrorKind::kDimensionMismatch, "points differ in n");
    features.col(i) = Eigen::Map<const Eigen::VectorXd>(f.data(), dim);
  }
  GramSummary g;
  g.M = static_cast<int>(M);
  g.sigma2 = features.transpose() * features;
  CompensatedSum tr;
  for (Eigen::Index i = 0; i < M; ++i) {
    g.sigma2(i, i) = 1.0;
    for (Eigen::Index j = 0; j < M; ++j)
      if (i != j) tr.add(g.sigma2(i, j) * g.sigma2(i, j));
  }
  g.trace_A2 = tr.value();
  g.dmr_bound = 1.5 * std::min(1.0, std::sqrt(g.trace_A2));
  g.is_good = g.trace_A2 < kGoodTraceBound;
  return g;
}

/// Sum of squared eigenvalues of A = Sigma_2 - I (symmetric eigensolver);
/// equals trace_A2.
inline double trace_A2_from_eigenvalues(const GramSummary& g) {
  const Eigen::MatrixXd A = g.sigma2 - Eigen::MatrixXd::Identity(g.M, g.M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().squaredNorm();
}

/// 1.5 min{1, sqrt(sum lambda_i^2)}, lambda the eigenvalues of
/// Sigma_1^{-1} Sigma_2 - I.
inline double dmr_tv_bound(const Eigen::MatrixXd& sigma1, const Eigen::MatrixXd& sigma2) {
  if (sigma1.rows() != sigma1.cols() || sigma2.rows() != sigma2.cols() || sigma1.rows() != sigma2.rows())
    fail(ErrorKind::kDimensionMismatch, "covariances must be square and equal-sized");
  const auto k = sigma1.rows();
  Eigen::LLT<Eigen::MatrixXd> l1(sigma1);
  if (l1.info() != Eigen::Success) fail(ErrorKind::kNotPositiveDefinite, "sigma1");
  Eigen::LLT<Eigen::MatrixXd> l2(sigma2);
  if (l2.info() != Eigen::Success) fail(ErrorKind::kNotPositiveDefinite, "sigma2");
  double sum_sq;
  if (sigma1.isIdentity(0.0)) {
    const Eigen::MatrixXd A = sigma2 - Eigen::MatrixXd::Identity(k, k);
    sum_sq = A.squaredNorm();  // tr(A^2) for symmetric A
  } else {
    // L^{-1} Sigma_2 L^{-T} is similar to Sigma_1^{-1} Sigma_2 and symmetric.
    const Eigen::MatrixXd L = l1.matrixL();
    Eigen::MatrixXd B = L.triangularView<Eigen::Lower>().solve(sigma2);
    B = L.triangularView<Eigen::Lower>().solve(B.transpose()).transpose();
    B = 0.5 * (B + B.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B - Eigen::MatrixXd::Identity(k, k),
                                                      Eigen::EigenvaluesOnly);
    sum_sq = es.eigenvalues().squaredNorm();
  }
  return 1.5 * std::min(1.0, std::sqrt(sum_sq));
}

/// Pr[g.u >= 0 and g.v >= 0] for g ~ N(0, I).
inline double sheppard(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) fail(ErrorKind::kDimensionMismatch, "sheppard vectors differ in length");
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  if (std::abs(uu - 1.0) > 1e-9 || std::abs(vv - 1.0) > 1e-9)
    fail(ErrorKind::kInvalidArgument, "sheppard needs unit vectors");
  return 0.5 - std::acos(std::clamp(uv, -1.0, 1.0)) / (2.0 * std::numbers::pi);
}

inline std::vector<double> random_cube_point(int n, Rng& rng) {
  std::vector<double> u(static_cast<std::size_t>(n));
  for (auto& x : u) x = rng.coin() ? 1.0 : -1.0;
  return u;
}

inline PointSet random_cube_points(int n, int count, Rng& rng) {
  PointSet pts;
  for (int i = 0; i < count; ++i) pts.push_back(random_cube_point(n, rng));
  return pts;
}

/// vol(f) for a multilinear PTF over the uniform hypercube. Exact by direct
/// evaluation when 2^n * |terms| <= 2^28, exact by Gray-code updates for
/// degree <= 2 up to n = 24, Monte Carlo otherwise.
inline VolumeEstimate hypercube_volume(const Ptf& f, int n, std::uint64_t mc_seed = 0,
                                       std::int64_t mc_samples = 200'000) {
  const ProductSpace space(BaseDistribution::rademacher(), n);
  const auto basis = gram_schmidt(space.base, 1);
  const double work = std::ldexp(static_cast<double>(std::max<std::size_t>(f.p.size(), 1)), n);
  if (n <= 24 && work <= std::ldexp(1.0, 28)) return volume(f, space, basis, Exact{});
  if (n <= 24 && actual_degree(f.p) <= 2) {
    // Gray-code walk. grad[k] = dp/dx_k excluding the x_k factor.
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd lin = Eigen::VectorXd::Zero(n);
    double value = 0.0;
    for (const auto& [a, c] : f.p.coeffs()) {
      const auto& e = a.entries();
      if (e.size() == 0) value += c;
      if (e.size() == 1) lin[e[0].coord] += c;
      if (e.size() == 2) {
        Q(e[0].coord, e[1].coord) += c;
        Q(e[1].coord, e[0].coord) += c;
      }
    }
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    // p(1) = const + sum lin + sum_{i<j} Q_ij
    value += lin.sum() + 0.5 * Q.sum();
    Eigen::VectorXd grad = lin + Q * x;
    std::uint64_t hits = value >= f.theta ? 1 : 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t i = 1; i < total; ++i) {
      const int k = std::countr_zero(i);
      const double xk = x[k];
      value -= 2.0 * xk * grad[k];
      x[k] = -xk;
      grad -= 2.0 * xk * Q.col(k);
      if (value >= f.theta) ++hits;
    }
    return {static_cast<double>(hits) / static_cast<double>(total), 0.0, Exact{}};
  }
  return volume(f, space, basis, MonteCarlo{mc_samples, mc_seed});
}

struct LbConfig {
  int n = 16;
  int d = 2;
  double c = 1.0;
  int trials = 200;
  std::uint64_t seed = 0;

  /// m = ceil(c C(n,d)^{1/2}), at least 1.
  int m() const { return std::max(1, static_cast<int>(std::ceil(c * std::sqrt(binomial(n, d))))); }
  /// Condition 9c^2 <= 1/180000 under which the good-tuple probability bound holds.
  bool paper_faithful() const { return 9.0 * c * c <= 1.0 / 180000.0; }
};

/// 3m(3m-1)/C(n,d): E[tr(A^2)] for 3m uniform points.
inline double expected_trace_A2(int n, int d, int points) {
  return static_cast<double>(points) * (points - 1) / binomial(n, d);
}

struct BalanceResult {
  std::vector<double> volumes;
  double band = 0.0;  // C(n,d)^{-1/12}
  double in_band_fraction = 0.0;
  double variance = 0.0;
  double implied_variance_constant = 0.0;  // variance / C(n,d)^{-1/3}
};

inline BalanceResult balancedness_experiment(const LbConfig& cfg) {
  BalanceResult r;
  r.volumes.resize(static_cast<std::size_t>(cfg.trials));
  parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t t) {
    Rng rng(cfg.seed, derive_stream({0x42414CULL, t}));
    const Ptf f = random_homogeneous_ptf(cfg.n, cfg.d, rng);
    r.volumes[t] = hypercube_volume(f, cfg.n, derive_stream({cfg.seed, 0x4D43ULL, t})).mean;
  });
  const double C = binomial(cfg.n, cfg.d);
  r.band = std::pow(C, -1.0 / 12.0);
  int inside = 0;
  CompensatedSum sum;
  for (double v : r.volumes) {
    if (std::abs(v - 0.5) <= r.band) ++inside;
    sum.add(v);
  }
  r.in_band_fraction = static_cast<double>(inside) / cfg.trials;
  const double mean = sum.value() / cfg.trials;
  CompensatedSum sq;
  for (double v : r.volumes) sq.add((v - mean) * (v - mean));
  r.variance = cfg.trials > 1 ? sq.value() / (cfg.trials - 1) : 0.0;
  r.implied_variance_constant = r.variance / std::pow(C, -1.0 / 3.0);
  return r;
}

enum class ShadowMode { kNull, kTruncated };

/// The padded 3m-point sequence: point i is b_i * u(i), with b_i a fair coin
/// (null) or f(u(i)) (truncated). Zero rows stand for 0^n.
struct ShadowSequence {
  PointSet points;
  std::vector<bool> bits;
};

inline ShadowSequence shadow_pad(const PointSet& base, ShadowMode mode, Rng& rng,
                                 const Ptf* f = nullptr) {
  if (mode == ShadowMode::kTruncated && f == nullptr)
    fail(ErrorKind::kInvalidArgument, "truncated shadow needs a PTF");
  std::optional<UnivariateBasis> basis;
  if (f) basis = gram_schmidt(BaseDistribution::rademacher(), 1);
  ShadowSequence s;
  for (const auto& u : base) {
    const bool b = mode == ShadowMode::kNull ? rng.coin() : eval(*f, *basis, u);
    s.bits.push_back(b);
    s.points.push_back(b ? u : std::vector<double>(u.size(), 0.0));
  }
  return s;
}

/// First m non-zero points of a shadow sequence, or nullopt (the
/// reduction's failure event) when fewer than m survive.
inline std::optional<PointSet> try_extract(const ShadowSequence& s, int m) {
  PointSet out;
  for (std::size_t i = 0; i < s.points.size() && static_cast<int>(out.size()) < m; ++i)
    if (s.bits[i]) out.push_back(s.points[i]);
  if (static_cast<int>(out.size()) < m) return std::nullopt;
  return out;
}

inline PointSet extract_first_nonzero(const ShadowSequence& s, int m) {
  auto r = try_extract(s, m);
  if (!r) fail(ErrorKind::kInsufficientPoints, "fewer than m non-zero points");
  return *r;
}

inline constexpr int kMaxBitTvPoints = 12;

struct BitTvEstimate {
  double tv = 0.0;
  double error_bar = 0.0;  // 2 sqrt(2^m / trials)
  std::vector<double> pattern_probabilities;
};

/// Monte Carlo law of the pattern (1{p_hat . Phi(u(i)) >= 0})_i over
/// p_hat ~ N(0,1)^{C(n,d)}, compared with the uniform law on m bits.
inline BitTvEstimate empirical_bit_tv(const PointSet& points, int d, std::int64_t trials,
                                      std::uint64_t seed) {
  const int m = static_cast<int>(points.size());
  if (m < 1 || m > kMaxBitTvPoints) fail(ErrorKind::kInvalidArgument, "bit TV needs 1 <= m <= 12 points");
  if (trials < 1) fail(ErrorKind::kInvalidArgument, "trials must be >= 1");
  std::vector<std::vector<double>> feats;
  for (const auto& u : points) feats.push_back(phi_unnormalized(u, d));
  const std::size_t dim = feats[0].size();
  const std::size_t outcomes = std::size_t{1} << m;
  constexpr std::int64_t kChunk = 2048;
  const auto chunks = static_cast<std::size_t>((trials + kChunk - 1) / kChunk);
  std::vector<std::vector<std::int64_t>> counts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    auto& cnt = counts[c];
    cnt.assign(outcomes, 0);
    Rng rng(seed, derive_stream({0x42495454ULL, c}));
    std::vector<double> g(dim);
    const std::int64_t lo = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t hi = std::min(trials, lo + kChunk);
    for (std::int64_t t = lo; t < hi; ++t) {
      for (auto& v : g) v = rng.normal();
      std::size_t pattern = 0;
      for (int i = 0; i < m; ++i) {
        double s = 0.0;
        const auto& f = feats[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < dim; ++k) s += g[k] * f[k];
        if (s >= 0.0) pattern |= std::size_t{1} << i;
      }
      ++cnt[pattern];
    }
  });
  BitTvEstimate out;
  out.pattern_probabilities.assign(outcomes, 0.0);
  for (const auto& cnt : counts)
    for (std::size_t o = 0; o < outcomes; ++o) out.pattern_probabilities[o] += static_cast<double>(cnt[o]);
  const double uniform = 1.0 / static_cast<double>(outcomes);
  double tv = 0.0;
  for (auto& p : out.pattern_probabilities) {
    p /= static_cast<double>(trials);
    tv += std::abs(p - uniform);
  }
  out.tv = 0.5 * tv;
  out.error_bar = 2.0 * std::sqrt(static_cast<double>(outcomes) / static_cast<double>(trials));
  return out;
}

/// Randomized greedy search for `count` hypercube points whose Gram summary
/// is good: a candidate is kept when the running tr(A^2) stays below the
/// bound. Returns nullopt after max_tries rejected candidates in a row.
inline std::optional<PointSet> find_good_tuple(int n, int d, int count, std::uint64_t seed,
                                               std::int64_t max_tries = 5'000'000) {
  Rng rng(seed, 0x474F4F44ULL);
  PointSet pts;
  std::vector<std::vector<double>> feats;
  double trace = 0.0;
  std::int64_t misses = 0;
  while (static_cast<int>(pts.size()) < count) {
    auto u = random_cube_point(n, rng);
    auto f = phi(u, d);
    double add = 0.0;
    for (const auto& g : feats) {
      double s = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
      add += 2.0 * s * s;
      if (trace + add >= kGoodTraceBound) break;
    }
    if (trace + add < kGoodTraceBound) {
      trace += add;
      pts.push_back(std::move(u));
      feats.push_back(std::move(f));
      misses = 0;
    } else if (++misses >= max_tries) {
      return std::nullopt;
    }
  }
  return pts;
}

}  // namespace truncheck
