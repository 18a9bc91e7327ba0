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

// Orthonormal polynomial basis chi_alpha of L^2(R^n, mu^{(x) n}) and the
// degree-<=d feature map x -> (chi_alpha(x))_{1 <= |alpha| <= d}.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "truncheck/distribution.hpp"
#include "truncheck/error.hpp"

namespace truncheck {

/// Sparse multi-index: sorted (coordinate, exponent) pairs with exponent > 0.
/// Coordinates are 0-based.
class MultiIndex {
 public:
  struct Entry {
    int coord;
    int exp;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  MultiIndex() = default;

  /// Builds from arbitrary (coord, exp) pairs; zero exponents are dropped and
  /// repeated coordinates rejected.
  explicit MultiIndex(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::erase_if(entries_, [](const Entry& e) { return e.exp == 0; });
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& l, const Entry& r) { return l.coord < r.coord; });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].exp < 0 || entries_[i].coord < 0)
        fail(ErrorKind::kInvalidArgument, "multi-index entries must be non-negative");
      if (i > 0 && entries_[i].coord == entries_[i - 1].coord)
        fail(ErrorKind::kInvalidArgument, "multi-index repeats a coordinate");
      total_ += entries_[i].exp;
    }
  }

  /// Multilinear index with exponent 1 on every listed coordinate.
  static MultiIndex set(std::vector<int> coords) {
    std::vector<Entry> e;
    for (int c : coords) e.push_back({c, 1});
    return MultiIndex(std::move(e));
  }

  const std::vector<Entry>& entries() const { return entries_; }
  int total_degree() const { return total_; }
  int support_size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }

  int exponent(int coord) const {
    for (const auto& e : entries_)
      if (e.coord == coord) return e.exp;
    return 0;
  }

  int max_coord() const { return entries_.empty() ? -1 : entries_.back().coord; }

  /// Symmetric difference of supports (exponents treated as 0/1).
  MultiIndex symmetric_difference(const MultiIndex& other) const {
    std::vector<Entry> out;
    std::size_t i = 0, j = 0;
    while (i < entries_.size() || j < other.entries_.size()) {
      if (j == other.entries_.size() ||
          (i < entries_.size() && entries_[i].coord < other.entries_[j].coord)) {
        out.push_back({entries_[i++].coord, 1});
      } else if (i == entries_.size() || other.entries_[j].coord < entries_[i].coord) {
        out.push_back({other.entries_[j++].coord, 1});
      } else {
        ++i;
        ++j;
      }
    }
    return MultiIndex(std::move(out));
  }

  friend bool operator==(const MultiIndex& l, const MultiIndex& r) {
    return l.entries_ == r.entries_;
  }

  /// Canonical order: total degree, support size, coordinates, exponents.
  friend bool operator<(const MultiIndex& l, const MultiIndex& r) {
    if (l.total_ != r.total_) return l.total_ < r.total_;
    if (l.entries_.size() != r.entries_.size()) return l.entries_.size() < r.entries_.size();
    for (std::size_t i = 0; i < l.entries_.size(); ++i)
      if (l.entries_[i].coord != r.entries_[i].coord)
        return l.entries_[i].coord < r.entries_[i].coord;
    for (std::size_t i = 0; i < l.entries_.size(); ++i)
      if (l.entries_[i].exp != r.entries_[i].exp) return l.entries_[i].exp < r.entries_[i].exp;
    return false;
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(entries_[i].coord) + ":" + std::to_string(entries_[i].exp);
    }
    return s + "}";
  }

 private:
  std::vector<Entry> entries_;
  int total_ = 0;
};

inline nlohmann::json to_json(const MultiIndex& a) {
  auto j = nlohmann::json::array();
  for (const auto& e : a.entries()) j.push_back({e.coord, e.exp});
  return j;
}

inline MultiIndex multi_index_from_json(const nlohmann::json& j) {
  std::vector<MultiIndex::Entry> e;
  for (const auto& p : j) e.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  return MultiIndex(std::move(e));
}

/// Univariate polynomial in the monomial basis, coefficient of x^j at [j].
using MonomialPoly = std::vector<double>;

inline double horner(const MonomialPoly& p, double x) {
  double r = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * x + *it;
  return r;
}

/// <p, q>_mu computed from exact moments.
inline double moment_inner(const MonomialPoly& p, const MonomialPoly& q,
                           const std::vector<double>& moments) {
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      if (p[i] != 0.0 && q[j] != 0.0) s.add(p[i] * q[j] * moments.at(i + j));
  return s.value();
}

inline MonomialPoly poly_multiply(const MonomialPoly& p, const MonomialPoly& q) {
  if (p.empty() || q.empty()) return {};
  MonomialPoly r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

/// Orthonormal polynomials chi_0..chi_D for one coordinate.
class UnivariateBasis {
 public:
  UnivariateBasis(BaseDistribution mu, std::vector<MonomialPoly> polys)
      : mu_(std::move(mu)), polys_(std::move(polys)) {}

  const BaseDistribution& mu() const { return mu_; }
  int max_degree() const { return static_cast<int>(polys_.size()) - 1; }
  const std::vector<MonomialPoly>& polys() const { return polys_; }
  const MonomialPoly& poly(int j) const { return polys_.at(static_cast<std::size_t>(j)); }

  double eval(int j, double x) const {
    if (j < 0 || j > max_degree())
      fail(ErrorKind::kDegreeOutOfRange, "univariate degree " + std::to_string(j));
    return horner(polys_[static_cast<std::size_t>(j)], x);
  }

  /// Writes chi_0(x)..chi_D(x) to out.
  void eval_all(double x, std::span<double> out) const {
    for (std::size_t j = 0; j < polys_.size(); ++j) out[j] = horner(polys_[j], x);
  }

 private:
  BaseDistribution mu_;
  std::vector<MonomialPoly> polys_;
};

/// Gram-Schmidt on 1, x, ..., x^d under the moment inner product, two passes
/// per vector. Leading coefficients come out positive.
inline UnivariateBasis gram_schmidt(const BaseDistribution& mu, int d) {
  if (d < 0) fail(ErrorKind::kInvalidArgument, "degree must be >= 0");
  std::vector<double> moments(static_cast<std::size_t>(2 * d + 1));
  for (int k = 0; k <= 2 * d; ++k) moments[static_cast<std::size_t>(k)] = moment(mu, k);

  std::vector<MonomialPoly> polys;
  for (int j = 0; j <= d; ++j) {
    MonomialPoly v(static_cast<std::size_t>(j + 1), 0.0);
    v[static_cast<std::size_t>(j)] = 1.0;
    const double raw = moments[static_cast<std::size_t>(2 * j)];
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : polys) {
        const double c = moment_inner(v, q, moments);
        for (std::size_t i = 0; i < q.size(); ++i) v[i] -= c * q[i];
      }
    }
    const double norm2 = moment_inner(v, v, moments);
    if (!(norm2 > 1e-10 * std::max(1.0, raw)))
      fail(ErrorKind::kDegenerateMeasure,
           "moment Gram matrix singular at degree " + std::to_string(j));
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : v) c *= inv;
    polys.push_back(std::move(v));
  }
  return UnivariateBasis(mu, std::move(polys));
}

/// Largest per-coordinate degree usable under mu when the total degree is
/// capped at d.
inline int univariate_degree_cap(const BaseDistribution& mu, int d) {
  if (auto s = mu.support_size()) return std::min<int>(d, static_cast<int>(*s) - 1);
  return d;
}

/// chi_alpha(x) = prod_i chi_{alpha_i}(x_i).
inline double eval_chi(const UnivariateBasis& basis, const MultiIndex& alpha,
                       std::span<const double> x) {
  double r = 1.0;
  for (const auto& e : alpha.entries()) {
    if (e.exp > basis.max_degree())
      fail(ErrorKind::kDegreeOutOfRange, "exponent " + std::to_string(e.exp) + " exceeds basis");
    if (e.coord >= static_cast<int>(x.size()))
      fail(ErrorKind::kDimensionMismatch, "index coordinate beyond point dimension");
    r *= basis.eval(e.exp, x[static_cast<std::size_t>(e.coord)]);
  }
  return r;
}

/// All alpha with lo <= |alpha| <= hi over n coordinates and alpha_i <= cap,
/// in canonical order.
inline std::vector<MultiIndex> enumerate_multi_indices(int n, int lo, int hi, int cap) {
  std::vector<MultiIndex> out;
  std::vector<MultiIndex::Entry> cur;
  // Depth-first over coordinates; each step picks the next coordinate with a
  // positive exponent.
  auto rec = [&](auto&& self, int next_coord, int degree) -> void {
    if (degree >= lo && degree <= hi && !(degree == 0 && lo > 0)) out.emplace_back(cur);
    if (degree == hi) return;
    for (int c = next_coord; c < n; ++c) {
      for (int e = 1; e <= cap && degree + e <= hi; ++e) {
        cur.push_back({c, e});
        self(self, c + 1, degree + e);
        cur.pop_back();
      }
    }
  };
  rec(rec, 0, 0);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<MultiIndex> enumerate_indices(const ProductSpace& space, int d) {
  if (d < 1) fail(ErrorKind::kInvalidArgument, "degree must be >= 1");
  return enumerate_multi_indices(space.n, 1, d, univariate_degree_cap(space.base, d));
}

/// x -> (chi_alpha(x))_{1 <= |alpha| <= d} in canonical index order.
class FeatureMap {
 public:
  FeatureMap(const ProductSpace& space, int d)
      : n_(space.n), d_(d), cap_(univariate_degree_cap(space.base, d)),
        indices_(enumerate_indices(space, d)) {
    offsets_.reserve(indices_.size() + 1);
    offsets_.push_back(0);
    for (const auto& a : indices_) {
      for (const auto& e : a.entries()) slots_.push_back(e.coord * (cap_ + 1) + e.exp);
      offsets_.push_back(static_cast<int>(slots_.size()));
    }
  }

  int n() const { return n_; }
  int degree() const { return d_; }
  int univariate_cap() const { return cap_; }
  std::size_t size() const { return indices_.size(); }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  /// Scratch size needed by evaluate().
  std::size_t scratch_size() const { return static_cast<std::size_t>(n_ * (cap_ + 1)); }

  /// Writes the m features of x into out. `scratch` holds scratch_size() values.
  void evaluate(const UnivariateBasis& basis, std::span<const double> x, std::span<double> out,
                std::span<double> scratch) const {
    if (static_cast<int>(x.size()) != n_)
      fail(ErrorKind::kDimensionMismatch,
           "point has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(n_));
    if (basis.max_degree() < cap_)
      fail(ErrorKind::kDegreeOutOfRange, "basis degree below feature map requirement");
    const auto stride = static_cast<std::size_t>(cap_ + 1);
    for (int i = 0; i < n_; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      for (int j = 0; j <= cap_; ++j)
        scratch[static_cast<std::size_t>(i) * stride + static_cast<std::size_t>(j)] =
            horner(basis.poly(j), xi);
    }
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      double r = 1.0;
      for (int s = offsets_[k]; s < offsets_[k + 1]; ++s)
        r *= scratch[static_cast<std::size_t>(slots_[static_cast<std::size_t>(s)])];
      out[k] = r;
    }
  }

 private:
  int n_;
  int d_;
  int cap_;
  std::vector<MultiIndex> indices_;
  std::vector<int> offsets_;
  std::vector<int> slots_;
};

inline std::vector<double> feature_vector(const FeatureMap& fm, const UnivariateBasis& basis,
                                          std::span<const double> x) {
  std::vector<double> out(fm.size());
  std::vector<double> scratch(fm.scratch_size());
  fm.evaluate(basis, x, out, scratch);
  return out;
}

/// Basis for a feature map of degree d over `space`.
inline UnivariateBasis basis_for(const ProductSpace& space, int d) {
  return gram_schmidt(space.base, univariate_degree_cap(space.base, d));
}

inline nlohmann::json basis_to_json(const UnivariateBasis& basis) {
  nlohmann::json j;
  j["distribution"] = to_json(basis.mu());
  j["max_degree"] = basis.max_degree();
  j["polys"] = basis.polys();
  return j;
}

}  // namespace truncheck
