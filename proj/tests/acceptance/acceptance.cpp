// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "treelb/codes.hpp"
#include "treelb/distributions.hpp"
#include "treelb/evaluation.hpp"
#include "treelb/impurity.hpp"
#include "treelb/learner.hpp"
#include "treelb/random.hpp"
#include "treelb/targets.hpp"

using namespace treelb;

namespace {

// Pinned tolerances.
constexpr double kRatioSlack = 1e-9;
constexpr double kZeroGain = 1e-12;
constexpr double kPmfMatch = 1e-12;
constexpr double kBoundSlack = 1e-15;
constexpr double kErrorMatch = 1e-12;

struct Outcome {
  bool pass;
  std::string detail;
};

std::vector<double> random_biases(std::size_t n, double delta, std::uint64_t seed) {
  std::vector<double> p(n, 0.5);
  if (delta >= 0.5) return p;
  Rng rng(seed);
  for (auto& v : p) v = rng.uniform(delta, 1.0 - delta);
  return p;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---- 1 ----

Outcome ratio_bounds() {
  Rng rng(1);
  std::size_t checked = 0;
  std::size_t violations = 0;
  double min_ratio = 1e300;
  double max_ratio = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t n = 1 + rng.below(8);
    const double delta = rng.uniform(0.05, 0.5);
    std::vector<std::size_t> vars(n);
    for (std::size_t i = 0; i < n; ++i) vars[i] = i;
    const TargetFunction f(TruthTableJunta::random(n, vars, derive_seed(1, static_cast<std::uint64_t>(inst))));
    std::vector<double> p(n);
    for (auto& v : p) v = rng.uniform(delta, 1.0 - delta);
    const ProductDistribution d(p, delta);
    const double kappa = std::max(2.0 / (8.0 * delta * (1.0 - delta)), 1.0);
    const auto h = [&](const oracle::Bits& x) { return static_cast<double>(f.eval(x)); };
    for (std::size_t v = 0; v < n; ++v) {
      const double mu0 = oracle::conditional(p, h, v, 0);
      const double mu1 = oracle::conditional(p, h, v, 1);
      const double sq = (mu1 - mu0) * (mu1 - mu0);
      const double gain = oracle::gain(p, h, v, oracle::gini);
      const auto lib = gain_ratio_bounds(f, d, gini_impurity(), v);
      bool ok = std::abs(lib.gain - gain) <= kZeroGain && std::abs(lib.kappa.value - kappa) <= 1e-12;
      if (sq > kZeroGain) {
        const double r = gain / sq;
        min_ratio = std::min(min_ratio, r);
        max_ratio = std::max(max_ratio, r);
        ok = ok && r >= 1.0 / kappa - kRatioSlack && r <= kappa + kRatioSlack && lib.ratio_ok;
      } else {
        ok = ok && gain <= kZeroGain && lib.ratio_ok;
      }
      ++checked;
      if (!ok) ++violations;
    }
  }
  return {violations == 0, std::to_string(checked) + " splits, " + std::to_string(violations) +
                               " violations, gain/sq_diff in [" + fmt(min_ratio) + ", " + fmt(max_ratio) + "]"};
}

// ---- 2 ----

// Per-block parity law by enumerating the block, together with the law given
// each single bit of the block fixed: given[j][b] = Pr[parity = 1 | x_j = b].
struct BlockLaw {
  double one;
  std::vector<std::array<double, 2>> given;
};

BlockLaw enumerate_block(const std::vector<double>& p) {
  // Extended precision keeps 2^20-term sums well below the 1e-12 match tolerance.
  const std::size_t n = p.size();
  long double one = 0.0L;
  std::vector<std::array<long double, 2>> mass(n, {0.0L, 0.0L});
  std::vector<std::array<long double, 2>> odd_mass(n, {0.0L, 0.0L});
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    long double pr = 1.0L;
    for (std::size_t j = 0; j < n; ++j) pr *= ((mask >> j) & 1u) ? p[j] : 1.0L - p[j];
    const bool odd = std::popcount(mask) & 1;
    if (odd) one += pr;
    for (std::size_t j = 0; j < n; ++j) {
      const auto b = (mask >> j) & 1u;
      mass[j][b] += pr;
      if (odd) odd_mass[j][b] += pr;
    }
  }
  BlockLaw law{static_cast<double>(one), std::vector<std::array<double, 2>>(n, {0.0, 0.0})};
  for (std::size_t j = 0; j < n; ++j)
    for (int b = 0; b < 2; ++b)
      law.given[j][b] = mass[j][b] > 0.0L ? static_cast<double>(odd_mass[j][b] / mass[j][b]) : 0.0;
  return law;
}

// Address law from independent block parities; z_1 is the most significant bit.
std::vector<double> law_from_blocks(const std::vector<double>& ones) {
  const std::size_t k = ones.size();
  std::vector<double> law(std::size_t{1} << k, 1.0);
  for (std::size_t a = 0; a < law.size(); ++a)
    for (std::size_t i = 0; i < k; ++i) law[a] *= ((a >> (k - 1 - i)) & 1u) ? ones[i] : 1.0 - ones[i];
  return law;
}

double max_dev(const std::vector<double>& law) {
  const double u = 1.0 / static_cast<double>(law.size());
  double dev = 0.0;
  for (double v : law) dev = std::max(dev, std::abs(v - u));
  return dev;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Outcome uniformity() {
  std::size_t configs = 0;
  std::size_t laws = 0;
  std::size_t enumerated = 0;
  std::size_t failures = 0;
  double worst_slack = 1e300;  // min over checks of bound - deviation, relative to the bound
  const auto check = [&](const std::vector<double>& lib, const std::vector<double>& ref, double bound) {
    ++laws;
    const double dev = max_dev(lib);
    worst_slack = std::min(worst_slack, (bound - dev) / bound);
    if (dev > bound + kBoundSlack || max_diff(lib, ref) > kPmfMatch) ++failures;
  };

  for (double delta : {0.1, 0.25, 0.5}) {
    const auto c0 = static_cast<std::size_t>(std::ceil(std::log(5.0) / delta));
    for (std::size_t c = c0; c <= 20; ++c) {
      for (std::size_t k = 1; c * k <= 20; ++k) {
        ++configs;
        const TargetFunction f(DisjointParityAddressing(c, k));
        const std::size_t block = c * k;
        const double bound = std::pow(5.0, -static_cast<double>(k));
        // One random law and one pushed to the edge of the balanced range.
        for (int variant = 0; variant < 2; ++variant) {
          auto p = random_biases(f.arity(), delta, derive_seed(c * 100 + k, static_cast<std::uint64_t>(variant)));
          if (variant == 1)
            for (std::size_t j = 0; j < f.addressing_bits(); ++j) p[j] = (j % 3 == 0) ? 1.0 - delta : delta;
          const ProductDistribution d(p, delta);
          std::vector<BlockLaw> blocks;
          std::vector<double> ones;
          for (std::size_t i = 0; i < k; ++i) {
            blocks.push_back(enumerate_block(std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(i * block),
                                                                 p.begin() + static_cast<std::ptrdiff_t>((i + 1) * block))));
            ones.push_back(blocks.back().one);
          }
          const auto lib = address_pmf(f, d, Restriction{});
          check(lib, law_from_blocks(ones), bound);
          if (f.addressing_bits() <= 20) {
            ++enumerated;
            const auto joint = oracle::address_law(oracle::parity_rows(c, k), f.addressing_bits(), p);
            if (max_diff(lib, joint) > kPmfMatch) ++failures;
          }
          for (std::size_t j = 0; j < f.addressing_bits(); ++j) {
            for (std::uint8_t b = 0; b < 2; ++b) {
              Restriction pi;
              pi.fix(j, b);
              auto cond = ones;
              cond[j / block] = blocks[j / block].given[j % block][b];
              check(address_pmf(f, d, pi), law_from_blocks(cond), bound);
            }
          }
        }
      }
    }
  }

  // Coded layouts with verified distance. Enumeration covers the addressing
  // bits when there are at most 20 of them.
  for (double delta : {0.1, 0.25, 0.5}) {
    for (std::size_t k = 1; k <= 4; ++k) {
      const std::size_t need = required_distance(k, delta);
      const auto code = gv_search_autoscale(k, need, 7, 100000);
      if (!code || distance(code->family) < need) {
        ++failures;
        continue;
      }
      ++configs;
      const TargetFunction f{CodedAddressing(code->family)};
      const auto sets = code->family.to_indices();
      const std::size_t bits = f.addressing_bits();
      const double bound = std::pow(5.0, -static_cast<double>(k));
      const auto p = random_biases(f.arity(), delta, derive_seed(99, k));
      const ProductDistribution d(p, delta);
      const bool enumerate = bits <= 20;
      if (enumerate) ++enumerated;
      for (std::size_t j = 0; j <= bits; ++j) {
        for (std::uint8_t b = 0; b < 2; ++b) {
          if (j == bits && b == 1) continue;
          Restriction pi;
          auto q = p;
          if (j < bits) {
            pi.fix(j, b);
            q[j] = b;
          }
          const auto lib = address_pmf(f, d, pi);
          const auto ref = enumerate ? oracle::address_law(sets, bits, q) : lib;
          check(lib, ref, bound);
        }
      }
    }
  }
  return {failures == 0, std::to_string(configs) + " layouts, " + std::to_string(laws) + " laws (" +
                             std::to_string(enumerated) + " fully enumerated), " + std::to_string(failures) +
                             " failures, min relative slack " + fmt(worst_slack)};
}

// ---- 3 ----

Outcome memory_first() {
  std::size_t builds = 0;
  std::size_t addressing = 0;
  double min_margin = 1e300;
  std::string worst;
  for (std::size_t k : {4, 5, 6}) {
    for (double delta : {0.1, 0.25, 0.5}) {
      const auto c = static_cast<std::size_t>(std::ceil(std::log(5.0) / delta));
      const auto code = gv_search_autoscale(k, required_distance(k, delta), derive_seed(k, 3), 100000);
      if (!code) return {false, "no coded family for k=" + std::to_string(k) + " delta=" + fmt(delta)};
      const std::vector<std::pair<std::string, TargetFunction>> targets = {
          {"fck", TargetFunction(DisjointParityAddressing(c, k))},
          {"fcks", TargetFunction(CodedAddressing(code->family))}};
      for (const auto& [name, f] : targets) {
        const ProductDistribution d(random_biases(f.arity(), delta, derive_seed(k, 17)), delta);
        for (const auto& g : builtin_impurities()) {
          if (!g.has_finite_curvature()) continue;
          for (auto rule : {TieRule::lexicographic, TieRule::prefer_addressing}) {
            GrowthPolicy policy;
            policy.depth_budget = std::min<std::size_t>(std::size_t{1} << k, 64);
            policy.expansion = Expansion::sampled_paths;
            policy.path_count = 200;
            policy.tie_rule = rule;
            policy.seed = k;
            policy.record_gains = false;
            const auto build = build_tree_exact(f, d, g, policy);
            const auto order = audit_query_order(build.audits);
            ++builds;
            addressing += order.addressing_splits;
            const double m = order.min_margin.value_or(-1.0);
            if (m < min_margin) {
              min_margin = m;
              worst = name + " k=" + std::to_string(k) + " delta=" + fmt(delta) + " " + std::string(to_string(rule));
            }
          }
        }
      }
    }
  }
  return {addressing == 0 && min_margin > 0.0, std::to_string(builds) + " builds, " + std::to_string(addressing) +
                                                   " addressing splits, min margin " + fmt(min_margin) + " (" +
                                                   worst + ")"};
}

// ---- 4 ----

// Full memory-only tree error for f_{c,k}: block parity law from the
// closed form, then every memory assignment.
double memory_tree_error_reference(std::size_t c, std::size_t k, const std::vector<double>& p) {
  const std::size_t block = c * k;
  std::vector<double> ones(k);
  for (std::size_t i = 0; i < k; ++i) {
    double prod = 1.0;
    for (std::size_t j = 0; j < block; ++j) prod *= 1.0 - 2.0 * p[i * block + j];
    ones[i] = 0.5 * (1.0 - prod);
  }
  const auto law = law_from_blocks(ones);
  const std::vector<double> mem(p.begin() + static_cast<std::ptrdiff_t>(block * k), p.end());
  return oracle::expect(mem, [&](const oracle::Bits& y) {
    double mu = 0.0;
    for (std::size_t a = 0; a < law.size(); ++a) mu += law[a] * y[a];
    return std::min(mu, 1.0 - mu);
  });
}

Outcome error_floor() {
  std::string detail;
  bool ok = true;
  for (std::size_t k : {4, 6, 8}) {
    for (double delta : {0.1, 0.25}) {
      Theorem4Config config;
      config.k = k;
      config.delta = delta;
      config.mc_leaves = 10000;
      config.seed = k;
      const auto r = theorem4_experiment(config);
      const double floor = delta / 6.0;
      bool this_ok = r.order.addressing_splits == 0;
      if (k == 4) {
        const double ref = memory_tree_error_reference(r.c, k, r.biases);
        this_ok = this_ok && r.exact && std::abs(ref - r.full_tree_error) <= kErrorMatch && r.full_tree_error >= floor;
      } else {
        this_ok = this_ok && !r.exact && r.full_tree_error - 2.0 * r.full_tree_ci >= floor;
      }
      ok = ok && this_ok;
      if (!detail.empty()) detail += "; ";
      detail += "k=" + std::to_string(k) + " d=" + fmt(delta) + ": " + fmt(r.full_tree_error) +
                (r.exact ? "" : " +- " + fmt(r.full_tree_ci)) + " vs " + fmt(floor);
    }
  }
  return {ok, detail};
}

// ---- 5 ----

Outcome agnostic() {
  std::string detail;
  bool ok = true;
  for (double eps : {0.125, 0.25}) {
    Theorem5Config config;
    config.k = 6;
    config.delta = 0.25;
    config.epsilon = eps;
    const auto r = theorem5_experiment(config);
    const double lower = r.error - 2.0 * r.error_ci;
    const bool this_ok = r.junta_distance < eps && r.only_free_memory_before_budget && lower >= 0.125;
    ok = ok && this_ok;
    if (!detail.empty()) detail += "; ";
    detail += "eps=" + fmt(eps) + ": |Afree|=" + std::to_string(r.partition.afree.size()) + " dist=" +
              fmt(r.junta_distance) + " error=" + fmt(r.error) + (r.exact ? " (exact)" : " (mc)");
  }
  return {ok, detail};
}

// ---- 6 ----

Outcome parity_counterexample() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (auto [n, i, j] : {std::array<std::size_t, 3>{2, 0, 1}, {4, 0, 1}, {6, 2, 5}, {8, 7, 3}}) {
    for (const auto& r : parity_example(n, i, j)) worst = std::max(worst, r.max_abs_gain);
    const std::vector<double> p(n, 0.5);
    const auto h = [&](const oracle::Bits& x) { return static_cast<double>(x[i] ^ x[j]); };
    for (const auto& g : {std::function<double(double)>(oracle::gini), std::function<double(double)>(oracle::entropy),
                          std::function<double(double)>(oracle::km)}) {
      for (std::size_t v = 0; v < n; ++v) {
        worst = std::max(worst, std::abs(oracle::gain(p, h, v, g)));
        ++checked;
      }
    }
  }
  return {worst <= kZeroGain, std::to_string(checked) + " enumerated gains, max |gain| " + fmt(worst)};
}

// ---- 7 ----

Outcome junta_sanity() {
  const auto r = junta_sanity_experiment(JuntaSanityConfig{});
  return {r.successes >= 99, std::to_string(r.successes) + "/" + std::to_string(r.trials) + " exact at depth <= 3"};
}

// ---- 8 ----

Outcome finite_sample() {
  const auto points = finite_sample_experiment(FiniteSampleConfig{});
  std::size_t inversions = 0;
  const bool ok = finite_sample_trend_ok(points, 0.95, &inversions);
  std::ostringstream os;
  for (const auto& p : points) os << "m=" << p.samples << ":" << p.memory_first << "/" << p.trials << " ";
  os << "inversions=" << inversions;
  return {ok, os.str()};
}

// ---- 9 ----

Outcome gv_construction() {
  std::string detail;
  bool ok = true;
  for (std::size_t k : {4, 6, 8}) {
    const std::size_t need = required_distance(k, 0.5);
    const auto r = gv_search_autoscale(k, need, k, 100000);
    if (!r) {
      ok = false;
      detail += "k=" + std::to_string(k) + ": not found; ";
      continue;
    }
    const std::size_t direct = distance(r->family);
    const std::size_t gray = min_codeword_weight_gray(r->family);
    const std::size_t naive = oracle::naive_distance(r->family.to_indices(), r->family.ground());
    ok = ok && direct >= need && direct == r->distance && gray == direct && naive == direct && r->trials_used <= 100000;
    detail += "k=" + std::to_string(k) + ": need " + std::to_string(need) + ", c=" + std::to_string(r->c) +
              " distance " + std::to_string(direct) + " trials " + std::to_string(r->trials_used) + "; ";
  }
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria = {
      {"gain/sq_diff ratio bound", 60, ratio_bounds},
      {"address uniformity", 120, uniformity},
      {"memory bits first", 600, memory_first},
      {"memory-only error floor", 600, error_floor},
      {"agnostic lower bound", 300, agnostic},
      {"parity counterexample", 1, parity_counterexample},
      {"junta sanity", 120, junta_sanity},
      {"finite-sample trend", 600, finite_sample},
      {"GV construction", 300, gv_construction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out{false, ""};
    try {
      out = criteria[i].run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= criteria[i].limit_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s %zu %s: %s [%.2fs / %.0fs]\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                out.detail.c_str(), secs, criteria[i].limit_seconds);
    std::fflush(stdout);
  }
  std::printf("%s: %zu/%zu criteria passed\n", failed ? "FAIL" : "PASS", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
