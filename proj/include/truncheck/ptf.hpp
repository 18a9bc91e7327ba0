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

// Polynomial threshold functions f(x) = 1{p(x) >= theta}, with p stored by
// its coefficients in the orthonormal chi basis.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "truncheck/basis.hpp"
#include "truncheck/domain.hpp"
#include "truncheck/error.hpp"
#include "truncheck/rng.hpp"

namespace truncheck {

class SparsePolynomial {
 public:
  using Coeffs = std::map<MultiIndex, double>;

  explicit SparsePolynomial(int degree_bound) : degree_bound_(degree_bound) {}
  SparsePolynomial(int degree_bound, const Coeffs& coeffs) : degree_bound_(degree_bound) {
    for (const auto& [a, c] : coeffs) set(a, c);
  }

  int degree_bound() const { return degree_bound_; }
  const Coeffs& coeffs() const { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }

  double coeff(const MultiIndex& a) const {
    auto it = coeffs_.find(a);
    return it == coeffs_.end() ? 0.0 : it->second;
  }

  /// Sets p_hat(alpha); zero removes the entry.
  void set(const MultiIndex& a, double c) {
    if (a.total_degree() > degree_bound_)
      fail(ErrorKind::kDegreeOutOfRange, "index " + a.to_string() + " exceeds degree bound");
    if (c == 0.0) {
      coeffs_.erase(a);
    } else {
      coeffs_[a] = c;
    }
  }

  void add(const MultiIndex& a, double c) { set(a, coeff(a) + c); }

  double constant() const { return coeff(MultiIndex{}); }

  /// Sum of squared non-constant coefficients, i.e. Var[p] under mu^{(x) n}.
  double variance() const {
    CompensatedSum s;
    for (const auto& [a, c] : coeffs_)
      if (!a.empty()) s.add(c * c);
    return s.value();
  }

  int max_coord() const {
    int m = -1;
    for (const auto& [a, c] : coeffs_) m = std::max(m, a.max_coord());
    return m;
  }

  double eval(const UnivariateBasis& basis, std::span<const double> x) const {
    CompensatedSum s;
    for (const auto& [a, c] : coeffs_) s.add(c * eval_chi(basis, a, x));
    return s.value();
  }

 private:
  int degree_bound_;
  Coeffs coeffs_;
};

/// Flattened evaluator for repeated evaluation of one polynomial.
class PolyEvaluator {
 public:
  PolyEvaluator(const SparsePolynomial& p, const UnivariateBasis& basis, int n)
      : basis_(basis), n_(n), cap_(basis.max_degree()) {
    if (p.max_coord() >= n) fail(ErrorKind::kDimensionMismatch, "polynomial uses coordinate >= n");
    offsets_.push_back(0);
    for (const auto& [a, c] : p.coeffs()) {
      for (const auto& e : a.entries()) {
        if (e.exp > cap_) fail(ErrorKind::kDegreeOutOfRange, "exponent exceeds basis degree");
        slots_.push_back(e.coord * (cap_ + 1) + e.exp);
      }
      coeffs_.push_back(c);
      offsets_.push_back(static_cast<int>(slots_.size()));
    }
    scratch_.resize(static_cast<std::size_t>(n_ * (cap_ + 1)));
  }

  /// Not thread-safe: uses internal scratch. Copy per thread.
  double operator()(std::span<const double> x) {
    if (static_cast<int>(x.size()) != n_) fail(ErrorKind::kDimensionMismatch, "point dimension");
    const auto stride = static_cast<std::size_t>(cap_ + 1);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j <= cap_; ++j)
        scratch_[static_cast<std::size_t>(i) * stride + static_cast<std::size_t>(j)] =
            horner(basis_.poly(j), x[static_cast<std::size_t>(i)]);
    double s = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      double t = coeffs_[k];
      for (int q = offsets_[k]; q < offsets_[k + 1]; ++q)
        t *= scratch_[static_cast<std::size_t>(slots_[static_cast<std::size_t>(q)])];
      s += t;
    }
    return s;
  }

 private:
  const UnivariateBasis& basis_;
  int n_;
  int cap_;
  std::vector<double> coeffs_;
  std::vector<int> offsets_;
  std::vector<int> slots_;
  std::vector<double> scratch_;
};

/// f(x) = 1{p(x) >= theta}; ties accept.
struct Ptf {
  SparsePolynomial p;
  double theta = 0.0;
};

inline bool eval(const Ptf& f, const UnivariateBasis& basis, std::span<const double> x) {
  return f.p.eval(basis, x) >= f.theta;
}

/// Same accept region, zero-mean unit-variance polynomial.
inline Ptf normalize(const Ptf& f) {
  const double var = f.p.variance();
  if (var < 1e-14) fail(ErrorKind::kConstantPolynomial, "non-constant Fourier weight below 1e-14");
  const double scale = 1.0 / std::sqrt(var);
  Ptf out{SparsePolynomial(f.p.degree_bound()), (f.theta - f.p.constant()) * scale};
  for (const auto& [a, c] : f.p.coeffs())
    if (!a.empty()) out.p.set(a, c * scale);
  return out;
}

/// (p, theta) -> (-p, -theta + tie_shift). With tie_shift = 0 points where
/// p(x) = theta are accepted by both f and its complement.
inline Ptf complement(const Ptf& f, double tie_shift = 0.0) {
  Ptf out{SparsePolynomial(f.p.degree_bound()), -f.theta + tie_shift};
  for (const auto& [a, c] : f.p.coeffs()) out.p.set(a, -c);
  return out;
}

/// Visits all d-subsets of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(int n, int d, Fn&& fn) {
  if (d < 0 || d > n) return;
  std::vector<int> s(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) s[static_cast<std::size_t>(i)] = i;
  for (;;) {
    fn(std::span<const int>(s));
    int i = d - 1;
    while (i >= 0 && s[static_cast<std::size_t>(i)] == n - d + i) --i;
    if (i < 0) return;
    ++s[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline int actual_degree(const SparsePolynomial& p) {
  int d = 0;
  for (const auto& [a, c] : p.coeffs()) d = std::max(d, a.total_degree());
  return d;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

/// Homogeneous multilinear degree-d polynomial with i.i.d. N(0,1)
/// coefficients on every d-subset, theta = 0.
inline Ptf random_homogeneous_ptf(int n, int d, Rng& rng) {
  if (d < 1 || d > n) fail(ErrorKind::kInvalidArgument, "need 1 <= d <= n");
  for (;;) {
    Ptf f{SparsePolynomial(d), 0.0};
    for_each_subset(n, d, [&](std::span<const int> s) {
      f.p.set(MultiIndex::set({s.begin(), s.end()}), rng.normal());
    });
    if (f.p.variance() >= 1e-14) return f;
  }
}

/// Dense random polynomial on every index with |alpha| <= d (constant
/// included), coefficients N(0,1); theta = 0.
inline Ptf random_dense_ptf(const ProductSpace& space, int d, Rng& rng) {
  Ptf f{SparsePolynomial(d), 0.0};
  f.p.set(MultiIndex{}, rng.normal());
  for (const auto& a : enumerate_indices(space, d)) f.p.set(a, rng.normal());
  return f;
}

/// p(x) at every point of an enumerable domain, in enumeration order.
inline std::vector<double> poly_values(const SparsePolynomial& p, const ProductSpace& space,
                                       const UnivariateBasis& basis) {
  const std::uint64_t total = checked_domain_size(space);
  std::vector<double> out(static_cast<std::size_t>(total));
  const auto atoms = space.base.atoms();
  parallel_for(block_count(space), [&](std::size_t b) {
    PolyEvaluator pe(p, basis, space.n);
    std::vector<double> x(static_cast<std::size_t>(space.n));
    const std::uint64_t lo = b * kEnumerationBlock;
    const std::uint64_t hi = std::min(total, lo + kEnumerationBlock);
    for (std::uint64_t i = lo; i < hi; ++i) {
      decode_point(atoms, i, x);
      out[static_cast<std::size_t>(i)] = pe(x);
    }
  });
  return out;
}

/// f(x) at every point of an enumerable domain, in enumeration order.
inline std::vector<char> accept_mask(const Ptf& f, const ProductSpace& space,
                                     const UnivariateBasis& basis) {
  const auto values = poly_values(f.p, space, basis);
  std::vector<char> mask(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) mask[i] = values[i] >= f.theta ? 1 : 0;
  return mask;
}

struct Exact {};
struct MonteCarlo {
  std::int64_t samples;
  std::uint64_t seed = 0;
};
using VolumeMode = std::variant<Exact, MonteCarlo>;

struct VolumeEstimate {
  double mean;
  double std_error;
  VolumeMode method;
};

inline VolumeEstimate volume(const Ptf& f, const ProductSpace& space,
                             const UnivariateBasis& basis, const VolumeMode& mode) {
  if (std::holds_alternative<Exact>(mode)) {
    const auto accept = accept_mask(f, space, basis);
    std::vector<CompensatedSum> partial(block_count(space));
    for_each_point_blocked(space, [&](std::size_t b, std::span<const double>, double w,
                                      std::uint64_t i) {
      if (accept[i]) partial[b].add(w);
    });
    CompensatedSum total;
    for (const auto& p : partial) total.add(p);
    return {std::clamp(total.value(), 0.0, 1.0), 0.0, Exact{}};
  }
  const auto& mc = std::get<MonteCarlo>(mode);
  if (mc.samples < 1) fail(ErrorKind::kInvalidArgument, "Monte Carlo needs samples >= 1");
  constexpr std::int64_t kChunk = 4096;
  const auto chunks = static_cast<std::size_t>((mc.samples + kChunk - 1) / kChunk);
  std::vector<std::int64_t> hits(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(mc.seed, derive_stream({0x766F6CULL, c}));
    PolyEvaluator pe(f.p, basis, space.n);
    std::vector<double> x(static_cast<std::size_t>(space.n));
    const std::int64_t lo = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t hi = std::min(mc.samples, lo + kChunk);
    for (std::int64_t i = lo; i < hi; ++i) {
      for (auto& xi : x) xi = sample_base(space.base, rng);
      if (pe(x) >= f.theta) ++hits[c];
    }
  });
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  const double v = static_cast<double>(total) / static_cast<double>(mc.samples);
  return {v, std::sqrt(v * (1.0 - v) / static_cast<double>(mc.samples)), mc};
}

// Conversion to/from the monomial basis (multi-indices read as exponents).

inline SparsePolynomial to_monomial(const SparsePolynomial& p, const UnivariateBasis& basis) {
  SparsePolynomial out(p.degree_bound());
  std::map<MultiIndex, double> acc;
  for (const auto& [a, c] : p.coeffs()) {
    // Expand prod_i chi_{a_i}(x_i) coordinate by coordinate.
    std::vector<std::pair<std::vector<MultiIndex::Entry>, double>> terms{{{}, c}};
    for (const auto& e : a.entries()) {
      const auto& poly = basis.poly(e.exp);
      std::vector<std::pair<std::vector<MultiIndex::Entry>, double>> next;
      for (const auto& [ent, v] : terms)
        for (std::size_t k = 0; k < poly.size(); ++k) {
          if (poly[k] == 0.0) continue;
          auto ent2 = ent;
          if (k > 0) ent2.push_back({e.coord, static_cast<int>(k)});
          next.emplace_back(std::move(ent2), v * poly[k]);
        }
      terms = std::move(next);
    }
    for (auto& [ent, v] : terms) acc[MultiIndex(ent)] += v;
  }
  for (const auto& [a, v] : acc)
    if (std::abs(v) > 1e-15) out.set(a, v);
  return out;
}

inline SparsePolynomial from_monomial(const SparsePolynomial& mono, const UnivariateBasis& basis) {
  const int D = basis.max_degree();
  std::vector<double> moments(static_cast<std::size_t>(4 * D + 2));
  for (std::size_t k = 0; k < moments.size(); ++k) moments[k] = moment(basis.mu(), static_cast<int>(k));
  // x^k = sum_j <x^k, chi_j> chi_j, exact when k <= D.
  auto power_in_chi = [&](int k) {
    if (k > D) fail(ErrorKind::kDegreeOutOfRange, "monomial exponent exceeds basis degree");
    MonomialPoly xk(static_cast<std::size_t>(k + 1), 0.0);
    xk[static_cast<std::size_t>(k)] = 1.0;
    std::vector<double> r(static_cast<std::size_t>(k + 1));
    for (int j = 0; j <= k; ++j) r[static_cast<std::size_t>(j)] = moment_inner(xk, basis.poly(j), moments);
    return r;
  };
  std::map<MultiIndex, double> acc;
  for (const auto& [a, c] : mono.coeffs()) {
    std::vector<std::pair<std::vector<MultiIndex::Entry>, double>> terms{{{}, c}};
    for (const auto& e : a.entries()) {
      const auto r = power_in_chi(e.exp);
      std::vector<std::pair<std::vector<MultiIndex::Entry>, double>> next;
      for (const auto& [ent, v] : terms)
        for (std::size_t j = 0; j < r.size(); ++j) {
          if (std::abs(r[j]) < 1e-15) continue;
          auto ent2 = ent;
          if (j > 0) ent2.push_back({e.coord, static_cast<int>(j)});
          next.emplace_back(std::move(ent2), v * r[j]);
        }
      terms = std::move(next);
    }
    for (auto& [ent, v] : terms) acc[MultiIndex(ent)] += v;
  }
  SparsePolynomial out(mono.degree_bound());
  for (const auto& [a, v] : acc)
    if (std::abs(v) > 1e-15) out.set(a, v);
  return out;
}

// JSON: {"basis":"chi","theta":t,"degree":d,"coeffs":[[[[i,e],...], c], ...]}.
// "basis":"monomial" is accepted on input and converted.

inline nlohmann::json to_json(const Ptf& f) {
  nlohmann::json j;
  j["basis"] = "chi";
  j["theta"] = f.theta;
  j["degree"] = f.p.degree_bound();
  j["coeffs"] = nlohmann::json::array();
  for (const auto& [a, c] : f.p.coeffs()) j["coeffs"].push_back({to_json(a), c});
  return j;
}

inline Ptf ptf_from_json(const nlohmann::json& j, const UnivariateBasis& basis) {
  const auto kind = j.value("basis", std::string("chi"));
  int degree = 0;
  for (const auto& t : j.at("coeffs"))
    degree = std::max(degree, multi_index_from_json(t.at(0)).total_degree());
  degree = j.value("degree", degree);
  SparsePolynomial p(degree);
  for (const auto& t : j.at("coeffs")) p.add(multi_index_from_json(t.at(0)), t.at(1).get<double>());
  if (kind == "monomial") {
    p = from_monomial(p, basis);
  } else if (kind != "chi") {
    fail(ErrorKind::kInvalidArgument, "unknown polynomial basis '" + kind + "'");
  }
  return Ptf{std::move(p), j.value("theta", 0.0)};
}

}  // namespace truncheck
