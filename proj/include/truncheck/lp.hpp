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

// min c.v subject to A v >= b with v free, solved through its dual
// max b.y s.t. A^T y = c, y >= 0 on a dense tableau with one row per
// variable of v. Dantzig pricing, switching to Bland's rule after a run of
// degenerate pivots; ties broken by lowest index, so results are
// deterministic. v is read off the simplex multipliers.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "truncheck/error.hpp"

namespace truncheck {

struct InequalityLp {
  int num_vars = 0;
  std::vector<std::vector<double>> rows;  // A
  std::vector<double> rhs;                // b
  std::vector<double> objective;          // c; empty = pure feasibility

  void add(std::vector<double> a, double b) {
    rows.push_back(std::move(a));
    rhs.push_back(b);
  }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::int64_t pivots = 0;
};

inline constexpr double kLpTolerance = 1e-7;

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_((rows + 1) * (cols + 1), 0.0) {}
  double& at(std::size_t r, std::size_t c) { return t_[r * (n_ + 1) + c]; }
  double& rhs(std::size_t r) { return t_[r * (n_ + 1) + n_]; }
  double& cost(std::size_t c) { return t_[m_ * (n_ + 1) + c]; }
  double& value() { return t_[m_ * (n_ + 1) + n_]; }

  void pivot(std::size_t pr, std::size_t pc) {
    const std::size_t w = n_ + 1;
    double* prow = &t_[pr * w];
    const double inv = 1.0 / prow[pc];
    for (std::size_t c = 0; c < w; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r <= m_; ++r) {
      if (r == pr) continue;
      double* row = &t_[r * w];
      const double f = row[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < w; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
  }

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

 private:
  std::size_t m_, n_;
  std::vector<double> t_;
};

// Runs simplex iterations on the cost row (minimization: reduced cost < 0
// enters). Columns with allowed[c] == false never enter.
inline LpStatus run_simplex(Tableau& tab, std::vector<std::size_t>& basis,
                            const std::vector<bool>& allowed, std::int64_t& pivots,
                            std::int64_t limit) {
  constexpr double kPivotEps = 1e-9;
  int degenerate_run = 0;
  for (;;) {
    if (pivots >= limit) return LpStatus::kIterationLimit;
    const bool bland = degenerate_run > 50;
    std::size_t enter = tab.cols();
    double best = -kLpTolerance * 1e-2;
    for (std::size_t c = 0; c < tab.cols(); ++c) {
      if (!allowed[c]) continue;
      const double rc = tab.cost(c);
      if (rc < best) {
        enter = c;
        if (bland) break;
        best = rc;
      }
    }
    if (enter == tab.cols()) return LpStatus::kOptimal;
    std::size_t leave = tab.rows();
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      const double a = tab.at(r, enter);
      if (a <= kPivotEps) continue;
      const double q = tab.rhs(r) / a;
      if (q < ratio - 1e-12 || (q <= ratio + 1e-12 && leave < tab.rows() && basis[r] < basis[leave])) {
        ratio = std::min(ratio, q);
        leave = r;
      }
    }
    if (leave == tab.rows()) return LpStatus::kUnbounded;
    degenerate_run = ratio <= 1e-12 ? degenerate_run + 1 : 0;
    tab.pivot(leave, enter);
    basis[leave] = enter;
    ++pivots;
  }
}

}  // namespace detail

/// Primal infeasible <=> dual unbounded (the dual is always feasible when
/// c = 0). A primal that is unbounded below shows up as dual infeasible.
inline LpResult solve_inequality_lp(const InequalityLp& lp, std::int64_t pivot_limit = 2'000'000) {
  const std::size_t k = static_cast<std::size_t>(lp.num_vars);
  const std::size_t m = lp.rows.size();
  if (lp.rhs.size() != m) fail(ErrorKind::kDimensionMismatch, "LP rhs length");
  for (const auto& r : lp.rows)
    if (r.size() != k) fail(ErrorKind::kDimensionMismatch, "LP row length");
  if (!lp.objective.empty() && lp.objective.size() != k)
    fail(ErrorKind::kDimensionMismatch, "LP objective length");
  auto c = [&](std::size_t j) { return lp.objective.empty() ? 0.0 : lp.objective[j]; };

  // Columns: y_0..y_{m-1}, then one artificial per row.
  const std::size_t cols = m + k;
  detail::Tableau tab(k, cols);
  std::vector<double> sign(k);
  std::vector<std::size_t> basis(k);
  for (std::size_t j = 0; j < k; ++j) {
    sign[j] = c(j) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < m; ++i) tab.at(j, i) = sign[j] * lp.rows[i][j];
    tab.at(j, m + j) = 1.0;
    tab.rhs(j) = sign[j] * c(j);
    basis[j] = m + j;
  }
  LpResult res;
  // Phase 1: minimize the sum of artificials.
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < m; ++i) tab.cost(i) -= tab.at(j, i);
    tab.value() -= tab.rhs(j);
  }
  std::vector<bool> allowed(cols, true);
  auto st = detail::run_simplex(tab, basis, allowed, res.pivots, pivot_limit);
  if (st == LpStatus::kIterationLimit) {
    res.status = st;
    return res;
  }
  if (-tab.value() > kLpTolerance) {
    res.status = LpStatus::kUnbounded;  // dual infeasible
    return res;
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (basis[j] < m) continue;
    std::size_t best = m;
    for (std::size_t i = 0; i < m; ++i)
      if (std::abs(tab.at(j, i)) > 1e-9 && (best == m || std::abs(tab.at(j, i)) > std::abs(tab.at(j, best))))
        best = i;
    if (best == m) continue;  // redundant row
    tab.pivot(j, best);
    basis[j] = best;
    ++res.pivots;
  }
  for (std::size_t col = m; col < cols; ++col) allowed[col] = false;

  // Phase 2: minimize -b.y.
  for (std::size_t col = 0; col < cols; ++col) tab.cost(col) = col < m ? -lp.rhs[col] : 0.0;
  tab.value() = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (basis[j] >= m) continue;
    const double cb = -lp.rhs[basis[j]];
    if (cb == 0.0) continue;
    for (std::size_t col = 0; col < cols; ++col) tab.cost(col) -= cb * tab.at(j, col);
    tab.value() -= cb * tab.rhs(j);
  }
  st = detail::run_simplex(tab, basis, allowed, res.pivots, pivot_limit);
  if (st == LpStatus::kUnbounded) {
    res.status = LpStatus::kInfeasible;
    return res;
  }
  if (st != LpStatus::kOptimal) {
    res.status = st;
    return res;
  }
  // Reduced cost of artificial j is -pi_j; v = -sign_j * pi_j.
  res.status = LpStatus::kOptimal;
  res.x.resize(k);
  for (std::size_t j = 0; j < k; ++j) res.x[j] = sign[j] * tab.cost(m + j);
  for (std::size_t j = 0; j < k; ++j) res.objective += c(j) * res.x[j];
  return res;
}

}  // namespace truncheck
