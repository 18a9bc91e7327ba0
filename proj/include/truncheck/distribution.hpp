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

// Univariate base measures and their n-fold products.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "truncheck/error.hpp"
#include "truncheck/parallel.hpp"
#include "truncheck/rng.hpp"

namespace truncheck {

struct Atom {
  double value;
  double prob;
};

struct Rademacher {};

struct FiniteSupport {
  std::vector<Atom> atoms;
};

struct StandardGaussian {};

/// Uniform law on [a, b]. `discretization` optionally names the number of
/// equal-mass atoms whose finite-support constant the caller accepts as
/// the hypercontractivity constant; without it the constant is unknown.
struct UniformInterval {
  double a;
  double b;
  std::optional<int> discretization;
};

class BaseDistribution {
 public:
  using Kind = std::variant<Rademacher, FiniteSupport, StandardGaussian, UniformInterval>;

  BaseDistribution(Kind kind) : kind_(std::move(kind)) { validate(); }

  static BaseDistribution rademacher() { return {Rademacher{}}; }
  static BaseDistribution gaussian() { return {StandardGaussian{}}; }
  static BaseDistribution finite(std::vector<Atom> atoms) {
    return {FiniteSupport{std::move(atoms)}};
  }
  static BaseDistribution uniform(double a, double b,
                                  std::optional<int> discretization = std::nullopt) {
    return {UniformInterval{a, b, discretization}};
  }
  /// Uniform law on the given distinct values.
  static BaseDistribution uniform_on(const std::vector<double>& values) {
    std::vector<Atom> atoms;
    for (double v : values) atoms.push_back({v, 1.0 / static_cast<double>(values.size())});
    return finite(std::move(atoms));
  }

  const Kind& kind() const { return kind_; }
  bool is_rademacher() const { return std::holds_alternative<Rademacher>(kind_); }
  bool is_finite() const {
    return is_rademacher() || std::holds_alternative<FiniteSupport>(kind_);
  }

  /// Number of support points; nullopt for continuous laws.
  std::optional<std::size_t> support_size() const {
    if (is_rademacher()) return 2;
    if (auto* f = std::get_if<FiniteSupport>(&kind_)) return f->atoms.size();
    return std::nullopt;
  }

  /// Support atoms of a finitely supported law (Rademacher included).
  std::vector<Atom> atoms() const {
    if (is_rademacher()) return {{-1.0, 0.5}, {1.0, 0.5}};
    if (auto* f = std::get_if<FiniteSupport>(&kind_)) return f->atoms;
    fail(ErrorKind::kDomainTooLarge, "continuous distribution has no finite support");
  }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Rademacher>) return "rademacher";
          else if constexpr (std::is_same_v<T, FiniteSupport>) return "finite";
          else if constexpr (std::is_same_v<T, StandardGaussian>) return "gaussian";
          else return "uniform";
        },
        kind_);
  }

 private:
  void validate() const {
    if (auto* f = std::get_if<FiniteSupport>(&kind_)) {
      if (f->atoms.empty()) fail(ErrorKind::kInvalidArgument, "finite support needs atoms");
      CompensatedSum total;
      for (const auto& a : f->atoms) {
        if (!(a.prob > 0.0)) fail(ErrorKind::kInvalidArgument, "atom probability must be > 0");
        total.add(a.prob);
      }
      if (std::abs(total.value() - 1.0) > 1e-12)
        fail(ErrorKind::kInvalidArgument, "atom probabilities must sum to 1");
      auto values = f->atoms;
      std::sort(values.begin(), values.end(),
                [](const Atom& l, const Atom& r) { return l.value < r.value; });
      for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i].value == values[i - 1].value)
          fail(ErrorKind::kInvalidArgument, "atom values must be distinct");
    }
    if (auto* u = std::get_if<UniformInterval>(&kind_)) {
      if (!(u->a < u->b)) fail(ErrorKind::kInvalidArgument, "uniform interval needs a < b");
      if (u->discretization && *u->discretization < 2)
        fail(ErrorKind::kInvalidArgument, "discretization needs at least 2 atoms");
    }
  }

  Kind kind_;
};

/// mu^{(x) n}.
struct ProductSpace {
  ProductSpace(BaseDistribution b, int dim) : base(std::move(b)), n(dim) {
    if (n < 1) fail(ErrorKind::kInvalidArgument, "dimension n must be >= 1");
  }

  /// Number of points of the product domain, or nullopt when infinite or
  /// beyond 2^62.
  std::optional<std::uint64_t> domain_size() const {
    auto s = base.support_size();
    if (!s) return std::nullopt;
    std::uint64_t total = 1;
    for (int i = 0; i < n; ++i) {
      if (total > (std::uint64_t{1} << 62) / *s) return std::nullopt;
      total *= *s;
    }
    return total;
  }

  BaseDistribution base;
  int n;
};

/// E[x^k] in closed form.
inline double moment(const BaseDistribution& mu, int k) {
  if (k < 0) fail(ErrorKind::kInvalidArgument, "moment order must be >= 0");
  return std::visit(
      [k](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Rademacher>) {
          return k % 2 == 0 ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, FiniteSupport>) {
          CompensatedSum s;
          for (const auto& a : d.atoms) s.add(a.prob * std::pow(a.value, k));
          return s.value();
        } else if constexpr (std::is_same_v<T, StandardGaussian>) {
          if (k % 2 == 1) return 0.0;
          double r = 1.0;
          for (int j = k - 1; j > 1; j -= 2) r *= j;
          return r;
        } else {
          // (b^{k+1} - a^{k+1}) / ((k+1)(b-a)), expanded as a geometric sum to
          // avoid cancellation.
          double s = 0.0;
          for (int j = 0; j <= k; ++j) s += std::pow(d.a, j) * std::pow(d.b, k - j);
          return s / (k + 1);
        }
      },
      mu.kind());
}

/// The (2,q)-hypercontractivity constant C_q(mu) from the standard table.
inline double hypercontractivity_constant(const BaseDistribution& mu, double q) {
  if (!(q >= 2.0)) fail(ErrorKind::kInvalidArgument, "q must be >= 2");
  return std::visit(
      [q](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Rademacher> || std::is_same_v<T, StandardGaussian>) {
          return std::sqrt(q - 1.0);
        } else if constexpr (std::is_same_v<T, FiniteSupport>) {
          double min_mass = 1.0;
          for (const auto& a : d.atoms) min_mass = std::min(min_mass, a.prob);
          return std::sqrt(q / (2.0 * min_mass));
        } else {
          if (!d.discretization)
            fail(ErrorKind::kUnknownConstant,
                 "uniform interval has no tabulated constant; supply a discretization");
          const double min_mass = 1.0 / *d.discretization;
          return std::sqrt(q / (2.0 * min_mass));
        }
      },
      mu.kind());
}

/// c(mu) = C_4(mu)^{-4}.
inline double anticoncentration_base(const BaseDistribution& mu) {
  const double c4 = hypercontractivity_constant(mu, 4.0);
  return 1.0 / (c4 * c4 * c4 * c4);
}

/// Lower bound 0.5625 * c^d on Pr[|p| >= 1/2] for centered, unit-variance
/// degree-d polynomials.
inline double anticoncentration_floor(const BaseDistribution& mu, int d) {
  if (d < 0) fail(ErrorKind::kInvalidArgument, "degree must be >= 0");
  if (d == 0) return 0.5625;
  return 0.5625 * std::pow(anticoncentration_base(mu), d);
}

inline double sample_base(const BaseDistribution& mu, Rng& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Rademacher>) {
          return rng.coin() ? 1.0 : -1.0;
        } else if constexpr (std::is_same_v<T, FiniteSupport>) {
          const double u = rng.uniform();
          double acc = 0.0;
          for (std::size_t i = 0; i + 1 < d.atoms.size(); ++i) {
            acc += d.atoms[i].prob;
            if (u < acc) return d.atoms[i].value;
          }
          return d.atoms.back().value;
        } else if constexpr (std::is_same_v<T, StandardGaussian>) {
          return rng.normal();
        } else {
          return d.a + (d.b - d.a) * rng.uniform();
        }
      },
      mu.kind());
}

// JSON: {"kind":"rademacher"} | {"kind":"finite","atoms":[[v,p],...]} |
//       {"kind":"gaussian"} | {"kind":"uniform","a":..,"b":..[,"discretization":k]}

inline BaseDistribution distribution_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    fail(ErrorKind::kInvalidArgument, "distribution JSON needs a \"kind\" field");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "rademacher") return BaseDistribution::rademacher();
  if (kind == "gaussian") return BaseDistribution::gaussian();
  if (kind == "finite") {
    std::vector<Atom> atoms;
    for (const auto& a : j.at("atoms")) atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    return BaseDistribution::finite(std::move(atoms));
  }
  if (kind == "uniform") {
    std::optional<int> disc;
    if (j.contains("discretization")) disc = j.at("discretization").get<int>();
    return BaseDistribution::uniform(j.at("a").get<double>(), j.at("b").get<double>(), disc);
  }
  fail(ErrorKind::kInvalidArgument, "unknown distribution kind '" + kind + "'");
}

inline nlohmann::json to_json(const BaseDistribution& mu) {
  nlohmann::json j;
  j["kind"] = mu.name();
  if (auto* f = std::get_if<FiniteSupport>(&mu.kind())) {
    j["atoms"] = nlohmann::json::array();
    for (const auto& a : f->atoms) j["atoms"].push_back({a.value, a.prob});
  }
  if (auto* u = std::get_if<UniformInterval>(&mu.kind())) {
    j["a"] = u->a;
    j["b"] = u->b;
    if (u->discretization) j["discretization"] = *u->discretization;
  }
  return j;
}

}  // namespace truncheck
