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

// Truncation detector: the bipartite kernel statistic
//
//   M = (1/T^2) < sum_i x~(i), sum_j y~(j) >,   x~ = (chi_alpha(x))_{1<=|alpha|<=d},
//
// its U-statistic variant, sample-size selection and thresholding.
//
// Under mu^{(x) n} every chi_alpha with alpha != 0 has mean zero, so E[M] = 0
// and Var[M] = m / T^2. Under truncation by f, E[chi_alpha] = f_hat(alpha) /
// vol(f), so E[M] = vol(f)^{-2} sum_{1<=|alpha|<=d} f_hat(alpha)^2.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "truncheck/basis.hpp"
#include "truncheck/distribution.hpp"
#include "truncheck/error.hpp"
#include "truncheck/fourier.hpp"
#include "truncheck/parallel.hpp"
#include "truncheck/ptf.hpp"
#include "truncheck/rng.hpp"
#include "truncheck/sampler.hpp"

namespace truncheck {

struct TheoryThreshold {};

/// tau = null mean + kappa * null stddev over `runs` simulated null batches.
struct CalibratedThreshold {
  int runs = 200;
  double kappa = 6.0;
};

using ThresholdMode = std::variant<TheoryThreshold, CalibratedThreshold>;

enum class StatisticVariant { kBipartite, kUStatistic };

struct DetectorConfig {
  int d = 1;
  double epsilon = 0.5;
  /// nullopt selects T automatically.
  std::optional<std::int64_t> T;
  /// Constant in T = c_T n^{d/2} / sep^2. When unset, theory mode uses
  /// kDefaultSampleConstant and calibrated mode estimates it from null runs.
  std::optional<double> c_T;
  /// Exponent multiplier standing in for Theta(d) in c^{Theta(d)}.
  double theta_d_exponent = 4.0;
  ThresholdMode threshold_mode = CalibratedThreshold{};
  StatisticVariant variant = StatisticVariant::kBipartite;
  /// Calibrated sample size targets kappa * null_std <= sep / margin.
  double calibration_margin = 4.0;
  std::int64_t max_attempts_per_point = kDefaultMaxAttempts;

  void validate() const {
    if (d < 1) fail(ErrorKind::kInvalidArgument, "degree must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorKind::kInvalidArgument, "epsilon must lie in (0,1)");
    if (c_T && !(*c_T > 0.0)) fail(ErrorKind::kInvalidArgument, "c_T must be > 0");
    if (T && *T < 1) fail(ErrorKind::kInvalidArgument, "T must be >= 1");
    if (auto* c = std::get_if<CalibratedThreshold>(&threshold_mode)) {
      if (c->runs < 30) fail(ErrorKind::kInvalidArgument, "calibration needs >= 30 runs");
      if (c->kappa < 0.0) fail(ErrorKind::kInvalidArgument, "kappa must be >= 0");
    }
  }

  bool calibrated() const { return std::holds_alternative<CalibratedThreshold>(threshold_mode); }
};

inline constexpr double kDefaultSampleConstant = 4.0;

enum class Decision { kUnTruncated, kTruncated };

struct DetectionRun {
  double statistic = 0.0;
  StatisticVariant variant = StatisticVariant::kBipartite;
  double threshold = 0.0;
  Decision decision = Decision::kUnTruncated;
  std::int64_t T_used = 0;
  std::size_t m = 0;
};

inline std::string to_string(Decision d) {
  return d == Decision::kTruncated ? "truncated" : "un-truncated";
}
inline std::string to_string(StatisticVariant v) {
  return v == StatisticVariant::kBipartite ? "bipartite" : "ustat";
}

inline nlohmann::json to_json(const DetectionRun& r) {
  return {{"statistic", r.statistic},   {"variant", to_string(r.variant)},
          {"threshold", r.threshold},   {"decision", to_string(r.decision)},
          {"T_used", r.T_used},         {"m", r.m}};
}

/// Per-component sums of x~ over the batch and, optionally, sum of ||x~||^2.
/// Rows are reduced in fixed chunks with compensated accumulators, so the
/// result is independent of the worker count.
struct FeatureSums {
  std::vector<double> sum;
  double sum_sq_norms = 0.0;
};

inline FeatureSums feature_sums(const SampleBatch& batch, const FeatureMap& fm,
                                const UnivariateBasis& basis) {
  if (batch.n != fm.n()) fail(ErrorKind::kDimensionMismatch, "batch dimension differs from feature map");
  constexpr std::int64_t kChunk = 512;
  const auto m = fm.size();
  const auto chunks = static_cast<std::size_t>((batch.T + kChunk - 1) / kChunk);
  std::vector<std::vector<CompensatedSum>> partial(chunks);
  std::vector<CompensatedSum> partial_sq(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    auto& acc = partial[c];
    acc.assign(m, CompensatedSum{});
    std::vector<double> feat(m), scratch(fm.scratch_size());
    const std::int64_t lo = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t hi = std::min(batch.T, lo + kChunk);
    for (std::int64_t r = lo; r < hi; ++r) {
      fm.evaluate(basis, batch.row(r), feat, scratch);
      double sq = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        acc[k].add(feat[k]);
        sq += feat[k] * feat[k];
      }
      partial_sq[c].add(sq);
    }
  });
  FeatureSums out{std::vector<double>(m), 0.0};
  std::vector<CompensatedSum> total(m);
  CompensatedSum total_sq;
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < m; ++k) total[k].add(partial[c][k]);
    total_sq.add(partial_sq[c]);
  }
  for (std::size_t k = 0; k < m; ++k) out.sum[k] = total[k].value();
  out.sum_sq_norms = total_sq.value();
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  CompensatedSum s;
  for (std::size_t k = 0; k < a.size(); ++k) s.add(a[k] * b[k]);
  return s.value();
}

inline double statistic_bipartite(const SampleBatch& X, const SampleBatch& Y, const FeatureMap& fm,
                                  const UnivariateBasis& basis) {
  if (X.T != Y.T) fail(ErrorKind::kDimensionMismatch, "X and Y must have equal size");
  if (X.n != Y.n) fail(ErrorKind::kDimensionMismatch, "X and Y dimensions differ");
  const auto sx = feature_sums(X, fm, basis);
  const auto sy = feature_sums(Y, fm, basis);
  const double T = static_cast<double>(X.T);
  return dot(sx.sum, sy.sum) / (T * T);
}

/// Average of <x~(i), x~(j)> over unordered pairs i < j, via
/// (||sum||^2 - sum ||x~(i)||^2) / 2.
inline double statistic_ustat(const SampleBatch& X, const FeatureMap& fm, const UnivariateBasis& basis) {
  if (X.T < 2) fail(ErrorKind::kInvalidArgument, "U-statistic needs T >= 2");
  const auto s = feature_sums(X, fm, basis);
  const double T = static_cast<double>(X.T);
  const double pairs = T * (T - 1.0) / 2.0;
  return (dot(s.sum, s.sum) - s.sum_sq_norms) / 2.0 / pairs;
}

/// Exact E[M] under truncation by f: vol^{-2} sum_{1<=|alpha|<=d} f_hat(alpha)^2.
inline double truncated_mean_exact(const Ptf& f, const ProductSpace& space,
                                   const UnivariateBasis& basis, int d) {
  const auto tbl = fourier_transform(f, space, basis);
  const double vol = tbl.vol();
  if (!(vol > 0.0)) fail(ErrorKind::kDegenerate, "f accepts no point");
  return tbl.weight(1, d) / (vol * vol);
}

/// min{1, eps/(1-eps), c^{theta_d d}/(1-eps)} in theory mode; the first two
/// terms in calibrated mode.
inline double separation(const DetectorConfig& cfg, const BaseDistribution& mu) {
  const double e = cfg.epsilon;
  double sep = std::min(1.0, e / (1.0 - e));
  if (!cfg.calibrated()) {
    const double c = anticoncentration_base(mu);
    sep = std::min(sep, std::pow(c, cfg.theta_d_exponent * cfg.d) / (1.0 - e));
  }
  return sep;
}

/// T = ceil(c_T n^{d/2} / sep^2).
inline std::int64_t required_samples(const DetectorConfig& cfg, const ProductSpace& space) {
  cfg.validate();
  const double sep = separation(cfg, space.base);
  const double c_T = cfg.c_T.value_or(kDefaultSampleConstant);
  const double T = std::ceil(c_T * std::pow(static_cast<double>(space.n), cfg.d / 2.0) / (sep * sep));
  if (!(T < 9.0e18)) fail(ErrorKind::kInvalidArgument, "required sample size overflows");
  return std::max<std::int64_t>(static_cast<std::int64_t>(T), cfg.variant == StatisticVariant::kUStatistic ? 2 : 1);
}

struct NullSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> statistics;
};

namespace detail {
inline constexpr std::uint64_t kNullTag = 0x4E554C4CULL;
inline constexpr std::uint64_t kTrialTag = 0x54524941ULL;
}  // namespace detail

/// One statistic computed on fresh samples from `source`.
inline double run_statistic(const ProductSpace& space, const FeatureMap& fm, const UnivariateBasis& basis,
                            const SampleSource& source, std::int64_t T, StatisticVariant variant,
                            std::uint64_t seed, std::int64_t max_attempts = kDefaultMaxAttempts) {
  // The truncating PTF may use a higher per-coordinate degree than the features.
  std::optional<UnivariateBasis> ptf_basis;
  if (auto* t = std::get_if<TruncatedSource>(&source)) {
    const int need = univariate_degree_cap(space.base, std::max(actual_degree(t->f.p), 1));
    if (need > basis.max_degree()) ptf_basis = gram_schmidt(space.base, need);
  }
  auto draw = [&](std::uint64_t s) {
    if (auto* t = std::get_if<TruncatedSource>(&source))
      return sample_truncated(space, t->f, ptf_basis ? *ptf_basis : basis, T, s, max_attempts);
    return sample_product(space, T, s);
  };
  const auto X = draw(mix64(seed ^ 0x58ULL));
  if (variant == StatisticVariant::kUStatistic) return statistic_ustat(X, fm, basis);
  const auto Y = draw(mix64(seed ^ 0x59ULL));
  return statistic_bipartite(X, Y, fm, basis);
}

/// Statistics on `runs` independent null batches of size T.
inline NullSummary null_statistics(const ProductSpace& space, const FeatureMap& fm,
                                   const UnivariateBasis& basis, std::int64_t T, int runs,
                                   StatisticVariant variant, std::uint64_t seed) {
  NullSummary out;
  out.statistics.resize(static_cast<std::size_t>(runs));
  parallel_for(static_cast<std::size_t>(runs), [&](std::size_t r) {
    const std::uint64_t s = derive_stream({seed, detail::kNullTag, static_cast<std::uint64_t>(T), r});
    out.statistics[r] = run_statistic(space, fm, basis, ProductSource{}, T, variant, s);
  });
  CompensatedSum sum;
  for (double v : out.statistics) sum.add(v);
  out.mean = sum.value() / runs;
  CompensatedSum sq;
  for (double v : out.statistics) sq.add((v - out.mean) * (v - out.mean));
  out.stddev = std::sqrt(sq.value() / (runs - 1));
  return out;
}

/// tau = mean + kappa * stddev of the null statistic at sample size T.
inline double calibrate_threshold(const ProductSpace& space, const FeatureMap& fm,
                                  const UnivariateBasis& basis, const DetectorConfig& cfg,
                                  std::int64_t T, std::uint64_t seed) {
  const auto* mode = std::get_if<CalibratedThreshold>(&cfg.threshold_mode);
  if (!mode) fail(ErrorKind::kInvalidArgument, "calibrate_threshold requires calibrated mode");
  if (mode->runs < 30) fail(ErrorKind::kInvalidArgument, "calibration needs >= 30 runs");
  const auto null = null_statistics(space, fm, basis, T, mode->runs, cfg.variant, seed);
  return null.mean + mode->kappa * null.stddev;
}

inline constexpr std::int64_t kPilotSamples = 256;

/// c_T such that the null threshold kappa * stddev(M) lands at sep / margin.
/// stddev(M) scales as 1/T, so one pilot size suffices.
inline double calibrate_sample_constant(const ProductSpace& space, const FeatureMap& fm,
                                        const UnivariateBasis& basis, const DetectorConfig& cfg,
                                        std::uint64_t seed) {
  const auto* mode = std::get_if<CalibratedThreshold>(&cfg.threshold_mode);
  if (!mode) fail(ErrorKind::kInvalidArgument, "sample-constant calibration requires calibrated mode");
  const auto null = null_statistics(space, fm, basis, kPilotSamples, mode->runs, cfg.variant,
                                    mix64(seed ^ 0x50494C4FULL));
  const double scale = null.stddev * static_cast<double>(kPilotSamples);
  const double sep = separation(cfg, space.base);
  const double target_T = cfg.calibration_margin * mode->kappa * scale / sep;
  return target_T * sep * sep / std::pow(static_cast<double>(space.n), cfg.d / 2.0);
}

/// A configured detector: sample size and threshold are fixed at
/// construction, then run() applies the test to any source.
class Detector {
 public:
  Detector(ProductSpace space, DetectorConfig cfg, std::uint64_t calibration_seed)
      : space_(std::move(space)), cfg_(std::move(cfg)),
        basis_(basis_for(space_, cfg_.d)), fm_(space_, cfg_.d) {
    cfg_.validate();
    if (cfg_.T) {
      T_ = *cfg_.T;
    } else {
      if (!cfg_.c_T && cfg_.calibrated())
        cfg_.c_T = calibrate_sample_constant(space_, fm_, basis_, cfg_, calibration_seed);
      T_ = required_samples(cfg_, space_);
    }
    if (cfg_.variant == StatisticVariant::kUStatistic && T_ < 2)
      fail(ErrorKind::kInvalidArgument, "U-statistic needs T >= 2");
    threshold_ = cfg_.calibrated() ? calibrate_threshold(space_, fm_, basis_, cfg_, T_, calibration_seed)
                                   : separation(cfg_, space_.base);
  }

  const ProductSpace& space() const { return space_; }
  const DetectorConfig& config() const { return cfg_; }
  const UnivariateBasis& basis() const { return basis_; }
  const FeatureMap& feature_map() const { return fm_; }
  std::int64_t sample_size() const { return T_; }
  double threshold() const { return threshold_; }
  double sample_constant() const { return cfg_.c_T.value_or(kDefaultSampleConstant); }

  DetectionRun run(const SampleSource& source, std::uint64_t seed) const {
    DetectionRun r;
    r.variant = cfg_.variant;
    r.T_used = T_;
    r.m = fm_.size();
    r.threshold = threshold_;
    r.statistic = run_statistic(space_, fm_, basis_, source, T_, cfg_.variant,
                                derive_stream({seed, detail::kTrialTag}), cfg_.max_attempts_per_point);
    r.decision = r.statistic >= threshold_ ? Decision::kTruncated : Decision::kUnTruncated;
    return r;
  }

 private:
  ProductSpace space_;
  DetectorConfig cfg_;
  UnivariateBasis basis_;
  FeatureMap fm_;
  std::int64_t T_ = 0;
  double threshold_ = 0.0;
};

/// Full pipeline: select T, fix the threshold, sample, decide.
inline DetectionRun decide(const ProductSpace& space, const DetectorConfig& cfg,
                           const SampleSource& source, std::uint64_t seed) {
  const Detector det(space, cfg, mix64(seed ^ 0x43414C49ULL));
  return det.run(source, seed);
}

}  // namespace truncheck
