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

// Reference computations written independently of the library: plain
// enumeration, closed forms and std:: random engines.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Point = std::vector<double>;

/// All of {-1,1}^n, coordinate 0 varying fastest.
inline std::vector<Point> cube(int n) {
  std::vector<Point> out;
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << n); ++i) {
    Point x(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = (i >> k) & 1 ? 1.0 : -1.0;
    out.push_back(std::move(x));
  }
  return out;
}

inline double parity(const Point& x, const std::vector<int>& s) {
  double r = 1.0;
  for (int i : s) r *= x[static_cast<std::size_t>(i)];
  return r;
}

/// All subsets of {0..n-1} with lo <= |S| <= hi.
inline std::vector<std::vector<int>> subsets(int n, int lo, int hi) {
  std::vector<std::vector<int>> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const int c = std::popcount(mask);
    if (c < lo || c > hi) continue;
    std::vector<int> s;
    for (int k = 0; k < n; ++k)
      if ((mask >> k) & 1) s.push_back(k);
    out.push_back(std::move(s));
  }
  return out;
}

/// E_uniform[f(x) x_S] by enumeration.
inline double walsh_coefficient(const std::function<bool(const Point&)>& f, int n, const std::vector<int>& s) {
  double acc = 0.0;
  for (const auto& x : cube(n))
    if (f(x)) acc += parity(x, s);
  return acc / std::ldexp(1.0, n);
}

/// E[M] under truncation by f, straight from the definition: both batches
/// are independent, so E[M] = ||E_trunc[x~]||^2, and each component is a
/// conditional average over the accepted points.
inline double truncated_mean_bruteforce(const std::function<bool(const Point&)>& f, int n, int d) {
  const auto pts = cube(n);
  std::vector<const Point*> acc;
  for (const auto& x : pts)
    if (f(x)) acc.push_back(&x);
  double total = 0.0;
  for (const auto& s : subsets(n, 1, d)) {
    double m = 0.0;
    for (const auto* x : acc) m += parity(*x, s);
    m /= static_cast<double>(acc.size());
    total += m * m;
  }
  return total;
}

/// Probabilists' Hermite He_k(x) / sqrt(k!).
inline double hermite_normalized(int k, double x) {
  double prev = 1.0, cur = x;
  if (k == 0) return 1.0;
  for (int j = 1; j < k; ++j) {
    const double next = x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  return cur / std::sqrt(std::tgamma(k + 1.0));
}

/// Composite Simpson rule.
inline double simpson(const std::function<double(double)>& g, double a, double b, int intervals = 2000) {
  const double h = (b - a) / intervals;
  double s = g(a) + g(b);
  for (int i = 1; i < intervals; ++i) s += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Pr[g.u >= 0 and g.v >= 0] for g ~ N(0, I), by Monte Carlo.
inline double orthant_mc(const Point& u, const Point& v, int draws, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> g(u.size());
  int hits = 0;
  for (int t = 0; t < draws; ++t) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double z = nd(eng);
      a += z * u[k];
      b += z * v[k];
    }
    if (a >= 0.0 && b >= 0.0) ++hits;
  }
  return static_cast<double>(hits) / draws;
}

/// TV between the two-bit sign pattern with correlation rho and the uniform
/// law: P11 = P00 = 1/2 - arccos(rho)/(2 pi), P10 = P01 = 1/2 - P11.
inline double two_bit_tv(double rho) {
  const double p11 = 0.5 - std::acos(rho) / (2.0 * std::numbers::pi);
  return 2.0 * std::abs(p11 - 0.25);
}

/// #{(beta, gamma): 1 <= |beta|,|gamma| <= d, beta xor gamma = alpha} over
/// subsets of [n].
inline std::uint64_t parity_pair_count(const std::vector<int>& alpha, int d, int n) {
  std::uint64_t a = 0;
  for (int i : alpha) a |= std::uint64_t{1} << i;
  std::vector<std::uint64_t> masks;
  for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m)
    if (std::popcount(m) <= d) masks.push_back(m);
  std::uint64_t count = 0;
  for (auto b : masks) {
    const std::uint64_t g = b ^ a;
    if (g != 0 && std::popcount(g) <= d) ++count;
  }
  return count;
}

/// Mean and variance of h(x,y) = Phi'(x).Phi'(y) over uniform x, y, exactly.
/// h depends only on w = x*y, which is uniform on the cube.
inline std::pair<double, double> h_moments(int n, int d) {
  const auto sets = subsets(n, d, d);
  const double C = static_cast<double>(sets.size());
  double s1 = 0.0, s2 = 0.0;
  for (const auto& w : cube(n)) {
    double h = 0.0;
    for (const auto& s : sets) h += parity(w, s);
    h /= C;
    s1 += h;
    s2 += h * h;
  }
  const double N = std::ldexp(1.0, n);
  const double mean = s1 / N;
  return {mean, s2 / N - mean * mean};
}

}  // namespace oracle
