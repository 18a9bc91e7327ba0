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

// Exact harmonic analysis on small enumerable product domains.
//
// Everything here is computed by exhaustive enumeration with closed-form
// moments; nothing is sampled. Domains above 2^24 points are rejected.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "truncheck/basis.hpp"
#include "truncheck/distribution.hpp"
#include "truncheck/domain.hpp"
#include "truncheck/error.hpp"
#include "truncheck/ptf.hpp"

namespace truncheck {

/// Complete coefficient table f_hat(alpha) for every alpha with
/// alpha_i <= s - 1, stored densely in mixed radix (coordinate 0 fastest).
class FourierTable {
 public:
  FourierTable(int n, int s, std::vector<double> coeffs)
      : n_(n), s_(s), coeffs_(std::move(coeffs)) {}

  int n() const { return n_; }
  int radix() const { return s_; }
  std::uint64_t domain_size() const { return coeffs_.size(); }
  const std::vector<double>& dense() const { return coeffs_; }

  /// f_hat(0^n); the volume when f is Boolean.
  double vol() const { return coeffs_.front(); }

  double coeff(const MultiIndex& a) const {
    std::uint64_t idx = 0;
    for (const auto& e : a.entries()) {
      if (e.coord >= n_) fail(ErrorKind::kDimensionMismatch, "index coordinate beyond n");
      if (e.exp >= s_) fail(ErrorKind::kDegreeOutOfRange, "exponent beyond support size");
      std::uint64_t stride = 1;
      for (int c = 0; c < e.coord; ++c) stride *= static_cast<std::uint64_t>(s_);
      idx += static_cast<std::uint64_t>(e.exp) * stride;
    }
    return coeffs_[idx];
  }

  MultiIndex index_at(std::uint64_t idx) const {
    std::vector<MultiIndex::Entry> e;
    for (int c = 0; c < n_; ++c) {
      const int digit = static_cast<int>(idx % static_cast<std::uint64_t>(s_));
      if (digit) e.push_back({c, digit});
      idx /= static_cast<std::uint64_t>(s_);
    }
    return MultiIndex(std::move(e));
  }

  int level_at(std::uint64_t idx) const {
    int level = 0;
    for (int c = 0; c < n_; ++c) {
      level += static_cast<int>(idx % static_cast<std::uint64_t>(s_));
      idx /= static_cast<std::uint64_t>(s_);
    }
    return level;
  }

  int max_level() const { return n_ * (s_ - 1); }

  /// Sum of f_hat(alpha)^2 over lo <= |alpha| <= hi.
  double weight(int lo, int hi) const {
    CompensatedSum s;
    for (std::uint64_t i = 0; i < coeffs_.size(); ++i) {
      const int l = level_at(i);
      if (l >= lo && l <= hi) s.add(coeffs_[i] * coeffs_[i]);
    }
    return s.value();
  }

 private:
  int n_;
  int s_;
  std::vector<double> coeffs_;
};

/// Full-degree basis for a finitely supported law (degree s - 1).
inline UnivariateBasis full_basis(const BaseDistribution& mu) {
  const auto s = mu.support_size();
  if (!s) fail(ErrorKind::kDomainTooLarge, "continuous base distribution cannot be enumerated");
  return gram_schmidt(mu, static_cast<int>(*s) - 1);
}

/// Transform of real values given in domain enumeration order:
/// f_hat(alpha) = sum_x mu(x) f(x) chi_alpha(x), computed axis by axis.
inline FourierTable fourier_transform_values(std::vector<double> values, const ProductSpace& space) {
  const std::uint64_t total = checked_domain_size(space);
  if (values.size() != total) fail(ErrorKind::kDimensionMismatch, "value table size");
  const auto atoms = space.base.atoms();
  const auto basis = full_basis(space.base);
  const std::size_t s = atoms.size();
  // kernel[j*s + a] = p_a * chi_j(v_a)
  std::vector<double> kernel(s * s);
  for (std::size_t j = 0; j < s; ++j)
    for (std::size_t a = 0; a < s; ++a)
      kernel[j * s + a] = atoms[a].prob * basis.eval(static_cast<int>(j), atoms[a].value);

  std::vector<double> fiber(s);
  std::uint64_t stride = 1;
  for (int axis = 0; axis < space.n; ++axis) {
    const std::uint64_t block = stride * s;
    for (std::uint64_t start = 0; start < total; start += block) {
      for (std::uint64_t off = 0; off < stride; ++off) {
        const std::uint64_t base = start + off;
        for (std::size_t a = 0; a < s; ++a) fiber[a] = values[base + a * stride];
        for (std::size_t j = 0; j < s; ++j) {
          double acc = 0.0;
          for (std::size_t a = 0; a < s; ++a) acc += kernel[j * s + a] * fiber[a];
          values[base + j * stride] = acc;
        }
      }
    }
    stride = block;
  }
  return FourierTable(space.n, static_cast<int>(s), std::move(values));
}

/// Transform of an arbitrary Boolean function.
inline FourierTable fourier_transform(const std::function<bool(std::span<const double>)>& f,
                                      const ProductSpace& space) {
  std::vector<double> values(static_cast<std::size_t>(checked_domain_size(space)));
  for_each_point(space, [&](std::span<const double> x, double, std::uint64_t i) {
    values[static_cast<std::size_t>(i)] = f(x) ? 1.0 : 0.0;
  });
  return fourier_transform_values(std::move(values), space);
}

inline FourierTable fourier_transform(const Ptf& f, const ProductSpace& space,
                                      const UnivariateBasis& basis) {
  const auto mask = accept_mask(f, space, basis);
  std::vector<double> values(mask.begin(), mask.end());
  return fourier_transform_values(std::move(values), space);
}

struct LevelWeights {
  std::vector<double> exact;       // W^{=k}
  std::vector<double> cumulative;  // W^{<=k}
};

inline LevelWeights level_weights(const FourierTable& tbl) {
  const int levels = tbl.max_level() + 1;
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(levels));
  const auto& c = tbl.dense();
  for (std::uint64_t i = 0; i < c.size(); ++i)
    acc[static_cast<std::size_t>(tbl.level_at(i))].add(c[i] * c[i]);
  LevelWeights w;
  double running = 0.0;
  for (const auto& a : acc) {
    w.exact.push_back(a.value());
    running += a.value();
    w.cumulative.push_back(running);
  }
  return w;
}

/// Largest k admitted by the level-k inequality: 2 ln(1/vol).
inline double level_k_upper(double vol) { return 2.0 * std::log(1.0 / vol); }

/// Implied constant K = (W^{<=k} / (vol^2 ln^k(1/vol)))^{1/k}.
inline double verify_level_k(const FourierTable& tbl, int k) {
  const double vol = tbl.vol();
  if (!(vol > 0.0 && vol < 1.0)) fail(ErrorKind::kDegenerate, "volume must lie in (0, 1)");
  if (k < 1 || static_cast<double>(k) > level_k_upper(vol))
    fail(ErrorKind::kKOutOfRange,
         "k = " + std::to_string(k) + " exceeds 2 ln(1/vol) = " + std::to_string(level_k_upper(vol)));
  const double w = tbl.weight(0, k);
  const double l = std::log(1.0 / vol);
  return std::pow(w / (vol * vol * std::pow(l, k)), 1.0 / k);
}

struct AnticoncentrationCheck {
  double probability;
  double floor;
  bool holds() const { return probability >= floor; }
};

/// Exact Pr[|p(x)| >= 1/2] against the 0.5625 c^d floor. p must be centered
/// with unit variance.
inline AnticoncentrationCheck verify_anticoncentration(const SparsePolynomial& p,
                                                       const ProductSpace& space,
                                                       const UnivariateBasis& basis) {
  if (std::abs(p.constant()) > 1e-9 || std::abs(p.variance() - 1.0) > 1e-9)
    fail(ErrorKind::kPrecondition, "polynomial must be centered with unit variance");
  const auto values = poly_values(p, space, basis);
  const auto atoms = space.base.atoms();
  CompensatedSum prob;
  std::vector<double> x(static_cast<std::size_t>(space.n));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = decode_point(atoms, i, x);
    if (std::abs(values[i]) >= 0.5) prob.add(w);
  }
  return {prob.value(), anticoncentration_floor(space.base, actual_degree(p))};
}

/// Univariate <chi_a, chi_b chi_c>_mu by exact polynomial multiplication and
/// moments.
inline double univariate_product_coefficient(const UnivariateBasis& basis, int a, int b, int c) {
  const int D = basis.max_degree();
  if (a > D || b > D || c > D) fail(ErrorKind::kDegreeOutOfRange, "univariate degree beyond basis");
  std::vector<double> moments(static_cast<std::size_t>(a + b + c + 1));
  for (std::size_t k = 0; k < moments.size(); ++k) moments[k] = moment(basis.mu(), static_cast<int>(k));
  return moment_inner(basis.poly(a), poly_multiply(basis.poly(b), basis.poly(c)), moments);
}

/// Cache of univariate triple products up to the basis degree.
class TripleProductTable {
 public:
  explicit TripleProductTable(const UnivariateBasis& basis)
      : D_(basis.max_degree()), table_(static_cast<std::size_t>((D_ + 1) * (D_ + 1) * (D_ + 1))) {
    for (int a = 0; a <= D_; ++a)
      for (int b = 0; b <= D_; ++b)
        for (int c = 0; c <= D_; ++c) table_[slot(a, b, c)] = univariate_product_coefficient(basis, a, b, c);
  }

  int max_degree() const { return D_; }
  double operator()(int a, int b, int c) const {
    if (a > D_ || b > D_ || c > D_) fail(ErrorKind::kDegreeOutOfRange, "univariate degree beyond basis");
    return table_[slot(a, b, c)];
  }

  /// <chi_alpha, chi_beta chi_gamma> over the product measure.
  double product(const MultiIndex& alpha, const MultiIndex& beta, const MultiIndex& gamma) const {
    // Merge-walk the three sorted supports.
    const auto& A = alpha.entries();
    const auto& B = beta.entries();
    const auto& G = gamma.entries();
    std::size_t i = 0, j = 0, k = 0;
    double r = 1.0;
    constexpr int kEnd = 1 << 30;
    for (;;) {
      const int ca = i < A.size() ? A[i].coord : kEnd;
      const int cb = j < B.size() ? B[j].coord : kEnd;
      const int cg = k < G.size() ? G[k].coord : kEnd;
      const int c = std::min({ca, cb, cg});
      if (c == kEnd) return r;
      const int ea = ca == c ? A[i++].exp : 0;
      const int eb = cb == c ? B[j++].exp : 0;
      const int eg = cg == c ? G[k++].exp : 0;
      r *= (*this)(ea, eb, eg);
      if (r == 0.0) return 0.0;
    }
  }

 private:
  std::size_t slot(int a, int b, int c) const {
    return static_cast<std::size_t>((a * (D_ + 1) + b) * (D_ + 1) + c);
  }
  int D_;
  std::vector<double> table_;
};

struct ProductCoefficient {
  double value;
  std::optional<double> bound;  // C_4(mu)^{|beta|+|gamma|} when C_4 is known
  bool within_bound() const { return !bound || std::abs(value) <= *bound + 1e-12; }
};

inline ProductCoefficient product_coefficient(const MultiIndex& alpha, const MultiIndex& beta,
                                              const MultiIndex& gamma, const UnivariateBasis& basis) {
  const TripleProductTable table(basis);
  ProductCoefficient out{table.product(alpha, beta, gamma), std::nullopt};
  try {
    const double c4 = hypercontractivity_constant(basis.mu(), 4.0);
    out.bound = std::pow(c4, beta.total_degree() + gamma.total_degree());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUnknownConstant) throw;
  }
  return out;
}

inline constexpr double kNonzeroTolerance = 1e-12;
inline constexpr std::uint64_t kLinearizationBudget = 200'000'000;

/// Number of ordered pairs (beta, gamma) with 1 <= |beta|, |gamma| <= d and
/// <chi_alpha, chi_beta chi_gamma> != 0. gamma is enumerated freely on
/// supp(alpha) and copied from beta elsewhere (orthonormality forces
/// gamma_i = beta_i off supp(alpha)); every candidate is checked exactly.
inline std::uint64_t linearization_count(const MultiIndex& alpha, int d, int n,
                                         const UnivariateBasis& basis) {
  if (alpha.total_degree() > 2 * d) fail(ErrorKind::kPrecondition, "|alpha| must be <= 2d");
  if (alpha.max_coord() >= n) fail(ErrorKind::kDimensionMismatch, "alpha uses coordinate >= n");
  const TripleProductTable table(basis);
  const int cap = std::min(d, basis.max_degree());
  const auto betas = enumerate_multi_indices(n, 1, d, cap);
  const auto& supp = alpha.entries();
  std::uint64_t per_beta = 1;
  for (std::size_t i = 0; i < supp.size(); ++i) per_beta *= static_cast<std::uint64_t>(cap + 1);
  if (per_beta * betas.size() > kLinearizationBudget)
    fail(ErrorKind::kDomainTooLarge, "linearization enumeration beyond budget");

  std::uint64_t count = 0;
  std::vector<int> digits(supp.size());
  for (const auto& beta : betas) {
    // gamma outside supp(alpha)
    std::vector<MultiIndex::Entry> outside;
    for (const auto& e : beta.entries())
      if (alpha.exponent(e.coord) == 0) outside.push_back(e);
    std::fill(digits.begin(), digits.end(), 0);
    for (std::uint64_t t = 0; t < per_beta; ++t) {
      std::vector<MultiIndex::Entry> g = outside;
      for (std::size_t i = 0; i < supp.size(); ++i)
        if (digits[i]) g.push_back({supp[i].coord, digits[i]});
      const MultiIndex gamma(std::move(g));
      if (gamma.total_degree() >= 1 && gamma.total_degree() <= d &&
          std::abs(table.product(alpha, beta, gamma)) > kNonzeroTolerance)
        ++count;
      for (std::size_t i = 0; i < digits.size(); ++i) {
        if (++digits[i] <= cap) break;
        digits[i] = 0;
      }
    }
  }
  return count;
}

/// Sum_{1<=|alpha|<=d} f_hat(alpha)^2 / min{vol, 1-vol}^2.
inline double verify_low_degree_weight(const FourierTable& tbl, int d) {
  const double vol = tbl.vol();
  if (!(vol > 1e-15 && vol < 1.0 - 1e-15)) fail(ErrorKind::kDegenerate, "volume is 0 or 1");
  const double m = std::min(vol, 1.0 - vol);
  return tbl.weight(1, d) / (m * m);
}

}  // namespace truncheck
