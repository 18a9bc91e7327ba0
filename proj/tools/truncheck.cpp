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

// truncheck: command-line front end.
//
// Exit codes: 0 success, 1 failed check, 2 usage error.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "truncheck/experiments.hpp"

namespace {

using json = nlohmann::json;
using namespace truncheck;

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Accepts inline JSON or a path to a JSON file.
json load_json(const std::string& text_or_path) {
  const auto first = text_or_path.find_first_not_of(" \t\n");
  if (first != std::string::npos && (text_or_path[first] == '{' || text_or_path[first] == '['))
    return json::parse(text_or_path);
  std::ifstream in(text_or_path);
  if (!in) throw UsageError("cannot read JSON file '" + text_or_path + "'");
  return json::parse(in);
}

// PTF JSON with a basis wide enough for its own degree.
Ptf load_ptf(const std::string& src, const BaseDistribution& mu) {
  const auto j = load_json(src);
  int degree = 1;
  for (const auto& t : j.at("coeffs")) degree = std::max(degree, multi_index_from_json(t.at(0)).total_degree());
  return ptf_from_json(j, gram_schmidt(mu, univariate_degree_cap(mu, degree)));
}

std::vector<std::int64_t> parse_grid(const std::string& s) {
  // lo:hi[:points]
  std::vector<std::int64_t> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      parts.push_back(std::stoll(tok));
    } catch (const std::exception&) {
      throw UsageError("bad grid '" + s + "', expected lo:hi[:points]");
    }
  }
  if (parts.size() < 2 || parts.size() > 3) throw UsageError("bad grid '" + s + "', expected lo:hi[:points]");
  return geometric_grid(parts[0], parts[1], parts.size() == 3 ? static_cast<int>(parts[2]) : 8);
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw UsageError("bad list '" + s + "'");
    }
  }
  return out;
}

struct Globals {
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::string out;
};

struct Emitter {
  const Globals& g;
  std::string subcommand;
  json spec;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void meta(const std::string& path) const {
    json m;
    m["subcommand"] = subcommand;
    m["spec"] = spec;
    m["seed"] = g.seed;
    m["threads"] = g.threads;
    m["version"] = kVersion;
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(path + ".meta.json") << m.dump(2) << "\n";
  }
  void csv(const CsvTable& t) const {
    if (g.out.empty()) {
      std::cout << t.str();
    } else {
      t.write(g.out);
      meta(g.out);
    }
  }
  void line(const json& j) const {
    std::cout << j.dump() << "\n";
    if (!g.out.empty()) {
      std::ofstream(g.out) << j.dump() << "\n";
      meta(g.out);
    }
  }
};

DetectorConfig detector_config(int d, double eps, const std::string& T, const std::string& mode,
                               const std::string& variant, double kappa, int runs,
                               std::optional<double> c_T, double margin) {
  DetectorConfig cfg;
  cfg.d = d;
  cfg.epsilon = eps;
  if (T != "auto") {
    try {
      cfg.T = std::stoll(T);
    } catch (const std::exception&) {
      throw UsageError("--T must be 'auto' or an integer");
    }
  }
  if (mode == "calibrated") cfg.threshold_mode = CalibratedThreshold{runs, kappa};
  else if (mode == "theory") cfg.threshold_mode = TheoryThreshold{};
  else throw UsageError("--mode must be calibrated or theory");
  if (variant == "bipartite") cfg.variant = StatisticVariant::kBipartite;
  else if (variant == "ustat") cfg.variant = StatisticVariant::kUStatistic;
  else throw UsageError("--variant must be bipartite or ustat");
  cfg.c_T = c_T;
  cfg.calibration_margin = margin;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"truncheck: testing for PTF truncation of product distributions"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output path (CSV/JSON); metadata goes to <out>.meta.json");

  // detect / calibrate share detector options.
  std::string dist = R"({"kind":"rademacher"})", ptf, T = "auto", mode = "calibrated", variant = "bipartite";
  int n = 10, d = 1, runs = 200, trials = 100, seeds = 20;
  double eps = 0.5, kappa = 6.0, margin = 4.0;
  std::optional<double> c_T;

  auto* detect = app.add_subcommand("detect", "run the detector once; prints a JSON decision");
  auto* calibrate = app.add_subcommand("calibrate", "calibrate c_T and the threshold; prints JSON");
  for (auto* sc : {detect, calibrate}) {
    sc->add_option("--dist", dist, "base distribution JSON (inline or file)");
    sc->add_option("--n", n)->required();
    sc->add_option("--d", d);
    sc->add_option("--eps", eps);
    sc->add_option("--T", T, "auto or an integer");
    sc->add_option("--mode", mode, "calibrated|theory");
    sc->add_option("--variant", variant, "bipartite|ustat");
    sc->add_option("--kappa", kappa);
    sc->add_option("--calibration-runs", runs);
    sc->add_option("--c-T", c_T, "sample-size constant");
    sc->add_option("--margin", margin, "calibration margin");
  }
  detect->add_option("--ptf", ptf, "truncating PTF JSON (omit for untruncated samples)");

  auto* power = app.add_subcommand("power", "power curve CSV");
  std::string grid = "16:1024:7";
  bool find_min = false;
  double target = 0.9;
  power->add_option("--dist", dist);
  power->add_option("--n", n)->required();
  power->add_option("--d", d);
  power->add_option("--ptf", ptf, "truncating PTF (default: the degree-d coordinate product)");
  power->add_option("--T-grid", grid, "lo:hi[:points], geometric");
  power->add_option("--trials", trials);
  power->add_option("--calibration-runs", runs);
  power->add_option("--kappa", kappa);
  power->add_option("--variant", variant);
  power->add_flag("--find-min", find_min, "report the smallest T reaching --target power");
  power->add_option("--target", target);

  auto* oracle = app.add_subcommand("oracle", "exact oracle suites");
  auto* verify = oracle->add_subcommand("verify", "run one suite; exit 1 if any case fails");
  oracle->require_subcommand(1);
  std::string suite = "parseval";
  verify->add_option("--suite", suite, "parseval|levelk|anticonc|linearization|lowweight");
  verify->add_option("--dist", dist);
  verify->add_option("--n", n)->required();
  verify->add_option("--d", d);
  verify->add_option("--seeds", seeds);

  auto* lower = app.add_subcommand("lowerbound", "random-PTF lower-bound simulation CSV");
  double c = 1.0;
  std::string lb_mode = "scaled";
  std::int64_t tv_trials = 100'000;
  trials = 200;
  lower->add_option("--n", n)->required();
  lower->add_option("--d", d);
  lower->add_option("--c", c);
  lower->add_option("--trials", trials);
  lower->add_option("--mode", lb_mode, "scaled|paper");
  lower->add_option("--tv-trials", tv_trials, "Gaussian draws per TV estimate (0 skips)");

  auto* base = app.add_subcommand("baseline", "baseline testers CSV");
  std::string bsuite = "vc", m_grid = "1,5,10,20";
  double c_vc = 1.0;
  std::int64_t support = 100;
  base->add_option("--suite", bsuite, "vc|lowvol|birthday");
  base->add_option("--n", n);
  base->add_option("--d", d);
  base->add_option("--eps", eps);
  base->add_option("--c-vc", c_vc);
  base->add_option("--trials", trials);
  base->add_option("--support", support, "|S| for lowvol/birthday");
  base->add_option("--m-grid", m_grid, "comma-separated sample counts (birthday)");

  auto* basis_cmd = app.add_subcommand("basis", "dump the orthonormal univariate basis as JSON");
  basis_cmd->add_option("--dist", dist);
  basis_cmd->add_option("--d", d);

  auto* sample = app.add_subcommand("sample", "draw a batch and persist it as <out>.bin/<out>.json");
  std::int64_t sample_T = 100;
  sample->add_option("--dist", dist);
  sample->add_option("--n", n)->required();
  sample->add_option("--T", sample_T);
  sample->add_option("--ptf", ptf);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  set_threads(g.threads);
  Emitter em{g, "", json::object()};
  try {
    const auto mu = distribution_from_json(load_json(dist));
    if (*detect || *calibrate) {
      const ProductSpace space(mu, n);
      const auto cfg = detector_config(d, eps, T, mode, variant, kappa, runs, c_T, margin);
      em.spec = {{"dist", to_json(mu)}, {"n", n}, {"d", d}, {"eps", eps}, {"T", T}, {"mode", mode},
                 {"variant", variant}};
      const Detector det(space, cfg, mix64(g.seed ^ 0x43414C49ULL));
      if (*calibrate) {
        em.subcommand = "calibrate";
        em.line({{"c_T", det.sample_constant()}, {"T", det.sample_size()}, {"threshold", det.threshold()},
                 {"m", det.feature_map().size()}});
        return 0;
      }
      em.subcommand = "detect";
      SampleSource src = ProductSource{};
      if (!ptf.empty()) src = TruncatedSource{load_ptf(ptf, mu)};
      em.line(to_json(det.run(src, g.seed)));
      return 0;
    }
    if (*power) {
      em.subcommand = "power";
      const ProductSpace space(mu, n);
      PowerConfig pc;
      pc.d = d;
      pc.target = ptf.empty() ? standard_target(n, d) : load_ptf(ptf, mu);
      pc.trials = trials;
      pc.calibration_runs = runs;
      pc.kappa = kappa;
      pc.seed = g.seed;
      if (variant == "ustat") pc.variant = StatisticVariant::kUStatistic;
      em.spec = {{"dist", to_json(mu)}, {"n", n}, {"d", d}, {"T_grid", grid}, {"trials", trials}};
      if (find_min) {
        const auto Tmin = min_T_for_power(space, pc, target);
        CsvTable t({"n", "d", "target", "min_T"});
        t.add({fmt_num(n), fmt_num(d), fmt_num(target), fmt_num(Tmin)});
        em.csv(t);
      } else {
        em.csv(power_curve(space, pc, parse_grid(grid)));
      }
      return 0;
    }
    if (*oracle) {
      em.subcommand = "oracle verify";
      em.spec = {{"suite", suite}, {"dist", to_json(mu)}, {"n", n}, {"d", d}, {"seeds", seeds}};
      const auto r = oracle_suite(oracle_suite_from_string(suite), ProductSpace(mu, n), d, seeds, g.seed);
      em.csv(r.table);
      if (!r.passed) std::cerr << "oracle suite " << suite << ": at least one case failed\n";
      return r.passed ? 0 : 1;
    }
    if (*lower) {
      em.subcommand = "lowerbound";
      LowerBoundRun run;
      run.lb = {n, d, c, trials, g.seed};
      run.tv_trials = tv_trials;
      if (lb_mode == "paper" && !run.lb.paper_faithful())
        throw UsageError("--mode paper requires 9c^2 <= 1/180000 (c <= 0.002357)");
      if (lb_mode != "paper" && lb_mode != "scaled") throw UsageError("--mode must be scaled or paper");
      em.spec = {{"n", n}, {"d", d}, {"c", c}, {"trials", trials}, {"mode", lb_mode}, {"m", run.lb.m()},
                 {"tv_trials", tv_trials}};
      em.csv(lowerbound_trials(run));
      return 0;
    }
    if (*base) {
      em.subcommand = "baseline";
      em.spec = {{"suite", bsuite}, {"n", n}, {"d", d}, {"eps", eps}, {"trials", trials}, {"support", support}};
      SuiteResult r{CsvTable({"empty"})};
      if (bsuite == "vc") {
        r = vc_suite({n, d, eps, c_vc, trials, g.seed});
      } else if (bsuite == "lowvol") {
        r = lowvol_suite({n, d, support, trials, g.seed});
      } else if (bsuite == "birthday") {
        BirthdayConfig bc;
        bc.n = n;
        bc.d = d;
        bc.support = support;
        bc.trials = trials;
        bc.seed = g.seed;
        r = birthday_suite(bc, parse_list(m_grid));
      } else {
        throw UsageError("--suite must be vc, lowvol or birthday");
      }
      em.csv(r.table);
      return r.passed ? 0 : 1;
    }
    if (*basis_cmd) {
      em.subcommand = "basis";
      em.line(basis_to_json(gram_schmidt(mu, univariate_degree_cap(mu, d))));
      return 0;
    }
    if (*sample) {
      if (g.out.empty()) throw UsageError("sample needs --out");
      const ProductSpace space(mu, n);
      SampleBatch batch;
      if (ptf.empty()) {
        batch = sample_product(space, sample_T, g.seed);
      } else {
        const auto f = load_ptf(ptf, mu);
        batch = sample_truncated(space, f, gram_schmidt(mu, univariate_degree_cap(mu, std::max(1, actual_degree(f.p)))),
                                 sample_T, g.seed);
      }
      write_batch(batch, g.out);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "usage error: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kInvalidArgument:
      case ErrorKind::kUnknownConstant:
      case ErrorKind::kDegreeOutOfRange:
      case ErrorKind::kDimensionMismatch:
      case ErrorKind::kDomainTooLarge:
      case ErrorKind::kKOutOfRange:
      case ErrorKind::kPrecondition:
        return 2;
      default:
        return 1;
    }
  }
  return 0;
}
