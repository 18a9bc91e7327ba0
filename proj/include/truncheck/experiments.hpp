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

// Experiment drivers. Each returns a CsvTable whose bytes depend only on
// the configuration and seed.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "truncheck/baselines.hpp"
#include "truncheck/detector.hpp"
#include "truncheck/fourier.hpp"
#include "truncheck/lower_bound.hpp"

namespace truncheck {

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
inline std::string fmt_num(std::int64_t v) { return std::to_string(v); }
inline std::string fmt_num(int v) { return std::to_string(v); }
inline std::string fmt_num(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt_num(bool v) { return v ? "1" : "0"; }

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) fail(ErrorKind::kDimensionMismatch, "CSV row width");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ',';
        out += r[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::kInvalidArgument, "cannot open " + path);
    os << str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct SuiteResult {
  CsvTable table;
  bool passed = true;
};

// ---------------------------------------------------------------- power

/// 1{chi_{0..d-1}(x) >= 0}: for Rademacher, 1{x_1 >= 0} at d = 1 and
/// 1{x_1 x_2 >= 0} at d = 2.
inline Ptf standard_target(int n, int d) {
  if (d < 1 || d > n) fail(ErrorKind::kInvalidArgument, "need 1 <= d <= n");
  std::vector<int> coords;
  for (int i = 0; i < d; ++i) coords.push_back(i);
  SparsePolynomial p(d);
  p.set(MultiIndex::set(coords), 1.0);
  return {p, 0.0};
}

struct PowerConfig {
  int d = 1;
  Ptf target = standard_target(1, 1);
  int trials = 100;
  int calibration_runs = 200;
  double kappa = 6.0;
  StatisticVariant variant = StatisticVariant::kBipartite;
  std::uint64_t seed = 0;
};

struct PowerPoint {
  std::int64_t T = 0;
  double threshold = 0.0;
  double false_positive = 0.0;
  double power = 0.0;
};

namespace detail {
inline constexpr std::uint64_t kPowerTag = 0x504F5752ULL;
}

/// Calibrated threshold at T, then the rejection rate on `trials` null and
/// `trials` truncated batches.
inline PowerPoint power_at(const ProductSpace& space, const PowerConfig& cfg, std::int64_t T,
                           bool with_null = true) {
  const auto basis = basis_for(space, cfg.d);
  const FeatureMap fm(space, cfg.d);
  const std::uint64_t tT = static_cast<std::uint64_t>(T);
  const auto null = null_statistics(space, fm, basis, T, cfg.calibration_runs, cfg.variant,
                                    derive_stream({cfg.seed, detail::kPowerTag, 0, tT}));
  PowerPoint pt{T, null.mean + cfg.kappa * null.stddev, 0.0, 0.0};
  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<char> fp(trials, 0), hit(trials, 0);
  const SampleSource trunc = TruncatedSource{cfg.target};
  parallel_for(trials, [&](std::size_t r) {
    if (with_null)
      fp[r] = run_statistic(space, fm, basis, ProductSource{}, T, cfg.variant,
                            derive_stream({cfg.seed, detail::kPowerTag, 1, tT, r})) >= pt.threshold;
    hit[r] = run_statistic(space, fm, basis, trunc, T, cfg.variant,
                           derive_stream({cfg.seed, detail::kPowerTag, 2, tT, r})) >= pt.threshold;
  });
  std::int64_t f = 0, h = 0;
  for (std::size_t r = 0; r < trials; ++r) {
    f += fp[r];
    h += hit[r];
  }
  pt.false_positive = static_cast<double>(f) / cfg.trials;
  pt.power = static_cast<double>(h) / cfg.trials;
  return pt;
}

inline CsvTable power_curve(const ProductSpace& space, const PowerConfig& cfg,
                            const std::vector<std::int64_t>& T_grid) {
  CsvTable t({"n", "d", "T", "threshold", "false_positive", "power", "trials"});
  for (auto T : T_grid) {
    const auto p = power_at(space, cfg, T);
    t.add({fmt_num(space.n), fmt_num(cfg.d), fmt_num(T), fmt_num(p.threshold), fmt_num(p.false_positive),
           fmt_num(p.power), fmt_num(cfg.trials)});
  }
  return t;
}

/// Geometric grid lo:hi with `points` entries (deduplicated, increasing).
inline std::vector<std::int64_t> geometric_grid(std::int64_t lo, std::int64_t hi, int points) {
  if (lo < 2 || hi < lo || points < 1) fail(ErrorKind::kInvalidArgument, "grid needs 2 <= lo <= hi, points >= 1");
  std::vector<std::int64_t> g;
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    const auto T = static_cast<std::int64_t>(std::llround(lo * std::pow(static_cast<double>(hi) / lo, f)));
    if (g.empty() || T > g.back()) g.push_back(T);
  }
  return g;
}

/// Smallest T (by doubling then integer bisection) whose measured power
/// reaches `target`.
inline std::int64_t min_T_for_power(const ProductSpace& space, const PowerConfig& cfg,
                                    double target = 0.9, std::int64_t start = 4) {
  auto ok = [&](std::int64_t T) { return power_at(space, cfg, T, false).power >= target; };
  std::int64_t lo = std::max<std::int64_t>(2, start / 2), hi = std::max<std::int64_t>(start, 2);
  while (!ok(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > (std::int64_t{1} << 24)) fail(ErrorKind::kInvalidArgument, "power target not reached");
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Least-squares slope of log y on log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::kInvalidArgument, "slope needs >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]) - mx;
    sxy += a * (std::log(y[i]) - my);
    sxx += a * a;
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------- oracle

enum class OracleSuite { kParseval, kLevelK, kAnticoncentration, kLinearization, kLowWeight };

inline OracleSuite oracle_suite_from_string(const std::string& s) {
  if (s == "parseval") return OracleSuite::kParseval;
  if (s == "levelk") return OracleSuite::kLevelK;
  if (s == "anticonc") return OracleSuite::kAnticoncentration;
  if (s == "linearization") return OracleSuite::kLinearization;
  if (s == "lowweight") return OracleSuite::kLowWeight;
  fail(ErrorKind::kInvalidArgument, "unknown suite '" + s + "'");
}

namespace detail {
inline constexpr std::uint64_t kCorpusTag = 0x434F5250ULL;

inline Ptf corpus_ptf(const ProductSpace& space, int d, std::uint64_t seed, std::uint64_t i) {
  Rng rng(seed, derive_stream({kCorpusTag, i}));
  return random_dense_ptf(space, d, rng);
}
}  // namespace detail

inline SuiteResult oracle_suite(OracleSuite suite, const ProductSpace& space, int d, int seeds,
                                std::uint64_t seed) {
  const auto basis = basis_for(space, d);
  switch (suite) {
    case OracleSuite::kParseval: {
      SuiteResult r{CsvTable({"case", "vol", "sum_sq", "parseval_err", "plancherel_err", "pass"})};
      for (int i = 0; i < seeds; ++i) {
        const auto f = detail::corpus_ptf(space, d, seed, 2 * static_cast<std::uint64_t>(i));
        const auto g = detail::corpus_ptf(space, d, seed, 2 * static_cast<std::uint64_t>(i) + 1);
        const auto tf = fourier_transform(f, space, basis);
        const auto tg = fourier_transform(g, space, basis);
        CompensatedSum sq, cross;
        for (std::size_t k = 0; k < tf.dense().size(); ++k) {
          sq.add(tf.dense()[k] * tf.dense()[k]);
          cross.add(tf.dense()[k] * tg.dense()[k]);
        }
        const auto mf = accept_mask(f, space, basis);
        const auto mg = accept_mask(g, space, basis);
        CompensatedSum both;
        for_each_point(space, [&](std::span<const double>, double w, std::uint64_t j) {
          if (mf[j] && mg[j]) both.add(w);
        });
        const double pe = std::abs(sq.value() - tf.vol());
        const double ce = std::abs(cross.value() - both.value());
        const bool pass = pe <= 1e-9 && ce <= 1e-9;
        r.passed &= pass;
        r.table.add({fmt_num(i), fmt_num(tf.vol()), fmt_num(sq.value()), fmt_num(pe), fmt_num(ce), fmt_num(pass)});
      }
      return r;
    }
    case OracleSuite::kLevelK: {
      SuiteResult r{CsvTable({"case", "vol", "k", "weight_le_k", "implied_K", "pass"})};
      for (int i = 0; i < seeds; ++i) {
        const auto f = detail::corpus_ptf(space, d, seed, static_cast<std::uint64_t>(i));
        const auto tbl = fourier_transform(f, space, basis);
        const double vol = tbl.vol();
        if (!(vol > 0.0 && vol < 1.0)) continue;
        const int kmax = static_cast<int>(std::floor(level_k_upper(vol)));
        for (int k = 1; k <= kmax; ++k) {
          const double w = tbl.weight(0, k);
          const double K = verify_level_k(tbl, k);
          const bool pass = w <= vol + 1e-12 && std::isfinite(K);
          r.passed &= pass;
          r.table.add({fmt_num(i), fmt_num(vol), fmt_num(k), fmt_num(w), fmt_num(K), fmt_num(pass)});
        }
      }
      return r;
    }
    case OracleSuite::kAnticoncentration: {
      SuiteResult r{CsvTable({"case", "degree", "probability", "floor", "pass"})};
      for (int i = 0; i < seeds; ++i) {
        const auto f = normalize(detail::corpus_ptf(space, d, seed, static_cast<std::uint64_t>(i)));
        const auto chk = verify_anticoncentration(f.p, space, basis);
        r.passed &= chk.holds();
        r.table.add({fmt_num(i), fmt_num(actual_degree(f.p)), fmt_num(chk.probability), fmt_num(chk.floor),
                     fmt_num(chk.holds())});
      }
      return r;
    }
    case OracleSuite::kLinearization: {
      SuiteResult r{CsvTable({"n", "d", "k", "count", "pass"})};
      for (int k = 1; k <= std::min(2 * d, space.n); ++k) {
        std::vector<int> coords;
        for (int c = 0; c < k; ++c) coords.push_back(c);
        const auto cnt = linearization_count(MultiIndex::set(coords), d, space.n, basis);
        const bool pass = cnt > 0;
        r.passed &= pass;
        r.table.add({fmt_num(space.n), fmt_num(d), fmt_num(k), fmt_num(cnt), fmt_num(pass)});
      }
      return r;
    }
    case OracleSuite::kLowWeight: {
      SuiteResult r{CsvTable({"case", "vol", "ratio", "pass"})};
      for (int i = 0; i < seeds; ++i) {
        const auto f = detail::corpus_ptf(space, d, seed, static_cast<std::uint64_t>(i));
        const auto tbl = fourier_transform(f, space, basis);
        if (!(tbl.vol() > 1e-15 && tbl.vol() < 1.0 - 1e-15)) continue;
        const double ratio = verify_low_degree_weight(tbl, d);
        const bool pass = ratio > 0.0;
        r.passed &= pass;
        r.table.add({fmt_num(i), fmt_num(tbl.vol()), fmt_num(ratio), fmt_num(pass)});
      }
      return r;
    }
  }
  fail(ErrorKind::kInvalidArgument, "unknown suite");
}

// ----------------------------------------------------------- lower bound

struct LowerBoundRun {
  LbConfig lb;
  std::int64_t tv_trials = 100'000;  // 0 skips the bit-pattern estimate
};

/// Per trial: a random homogeneous PTF and its volume; 3m random points and
/// their Gram summary; the bit-pattern TV on the first min(3m, 12) points.
inline CsvTable lowerbound_trials(const LowerBoundRun& run) {
  const auto& c = run.lb;
  const int M = 3 * c.m();
  const auto trials = static_cast<std::size_t>(c.trials);
  std::vector<std::vector<std::string>> rows(trials);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng(c.seed, derive_stream({0x4C42ULL, t}));
    const Ptf f = random_homogeneous_ptf(c.n, c.d, rng);
    const double vol = hypercube_volume(f, c.n, derive_stream({c.seed, 0x4C42564FULL, t})).mean;
    const auto pts = random_cube_points(c.n, M, rng);
    const auto g = M >= 2 ? gram_summary(pts, c.d) : GramSummary{};
    std::string tv = "nan";
    if (run.tv_trials > 0) {
      const PointSet head(pts.begin(), pts.begin() + std::min(M, kMaxBitTvPoints));
      tv = fmt_num(empirical_bit_tv(head, c.d, run.tv_trials, derive_stream({c.seed, 0x5456ULL, t})).tv);
    }
    rows[t] = {fmt_num(static_cast<int>(t)), fmt_num(vol), fmt_num(g.trace_A2), fmt_num(g.dmr_bound), tv};
  });
  CsvTable out({"trial", "vol", "trace_A2", "dmr_bound", "tv_estimate"});
  for (auto& r : rows) out.add(std::move(r));
  return out;
}

// ------------------------------------------------------------- baselines

struct VcRun {
  int n = 10;
  int d = 1;
  double epsilon = 0.5;
  double c_vc = 1.0;
  int trials = 100;
  std::uint64_t seed = 0;
};

/// Consistency tester on null batches and on batches truncated by the
/// standard target, at the VC sample count.
inline SuiteResult vc_suite(const VcRun& cfg) {
  const ProductSpace space(BaseDistribution::rademacher(), cfg.n);
  const auto T = vc_sample_count(cfg.n, cfg.d, cfg.epsilon, cfg.c_vc);
  const Ptf target = standard_target(cfg.n, cfg.d);
  const auto basis = basis_for(space, cfg.d);
  SuiteResult r{CsvTable({"trial", "source", "T", "feasible", "witness_volume", "decision"})};
  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<ConsistencyResult> nulls(trials), truncs(trials);
  parallel_for(trials, [&](std::size_t t) {
    nulls[t] = consistency_test(sample_product(space, T, derive_stream({cfg.seed, 0x5643ULL, 0, t})), cfg.d,
                                cfg.epsilon, space);
    truncs[t] = consistency_test(
        sample_truncated(space, target, basis, T, derive_stream({cfg.seed, 0x5643ULL, 1, t})), cfg.d,
        cfg.epsilon, space);
  });
  auto add = [&](std::size_t t, const char* src, const ConsistencyResult& c) {
    r.table.add({fmt_num(static_cast<int>(t)), src, fmt_num(T), fmt_num(c.feasible),
                 c.witness_volume ? fmt_num(*c.witness_volume) : "nan", to_string(c.decision)});
  };
  for (std::size_t t = 0; t < trials; ++t) {
    add(t, "null", nulls[t]);
    add(t, "truncated", truncs[t]);
    // one-sidedness
    r.passed &= truncs[t].decision == Decision::kTruncated;
  }
  return r;
}

struct LowVolRun {
  int n = 10;
  int d = 2;
  std::int64_t support = 5;
  int trials = 20;
  std::uint64_t seed = 0;
};

inline SuiteResult lowvol_suite(const LowVolRun& cfg) {
  SuiteResult r{CsvTable({"trial", "support", "status", "exact", "volume", "terms"})};
  for (int t = 0; t < cfg.trials; ++t) {
    Rng rng(cfg.seed, derive_stream({0x4C56ULL, static_cast<std::uint64_t>(t)}));
    const auto S = random_support(cfg.n, cfg.support, rng);
    const double vol = static_cast<double>(cfg.support) / std::ldexp(1.0, cfg.n);
    try {
      const Ptf f = fit_low_volume_ptf(S, cfg.d, cfg.n);
      const bool exact = accepts_exactly(f, S, cfg.n);
      r.passed &= exact;
      r.table.add({fmt_num(t), fmt_num(cfg.support), "ok", fmt_num(exact), fmt_num(vol),
                   fmt_num(static_cast<std::int64_t>(f.p.size()))});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kFeasibilityFailed) throw;
      // A failure is only acceptable when no exact-fit PTF exists at all.
      const bool exists = exact_fit_exists(S, cfg.d, cfg.n);
      r.passed &= !exists;
      r.table.add({fmt_num(t), fmt_num(cfg.support), exists ? "feasibility failed" : "no exact-fit PTF", "0",
                   fmt_num(vol), "0"});
    }
  }
  return r;
}

inline SuiteResult birthday_suite(BirthdayConfig cfg, const std::vector<int>& m_grid) {
  SuiteResult r{CsvTable({"m", "support", "trials", "collision_frequency", "exact_probability",
                          "collision_sigma", "mean_pairs", "expected_pairs", "pair_sigma", "birthday_bound",
                          "within_4sigma"})};
  for (int m : m_grid) {
    cfg.m = m;
    const auto b = birthday_experiment(cfg);
    const bool ok = std::abs(b.collision_frequency - b.exact_collision_probability) <= 4 * b.collision_sigma + 1e-12 &&
                    std::abs(b.mean_pair_collisions - b.expected_pair_collisions) <= 4 * b.pair_sigma + 1e-12;
    r.passed &= ok;
    r.table.add({fmt_num(m), fmt_num(cfg.support), fmt_num(cfg.trials), fmt_num(b.collision_frequency),
                 fmt_num(b.exact_collision_probability), fmt_num(b.collision_sigma),
                 fmt_num(b.mean_pair_collisions), fmt_num(b.expected_pair_collisions), fmt_num(b.pair_sigma),
                 fmt_num(b.birthday_bound), fmt_num(ok)});
  }
  return r;
}

}  // namespace truncheck
