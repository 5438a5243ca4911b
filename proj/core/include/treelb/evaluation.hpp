#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treelb/distributions.hpp"
#include "treelb/impurity.hpp"
#include "treelb/learner.hpp"
#include "treelb/targets.hpp"

namespace treelb {

enum class ErrorMethod { exact_enumeration, leaf_conditional_mc };

struct Summary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct ErrorReport {
  double error;
  ErrorMethod method;
  /// Half-width of a 95% normal interval; 0 for exact results.
  double ci_halfwidth;
  Summary leaf_means;
};

/// Exact error by walking every leaf (Pr[reach] * disagreement with the exact
/// leaf mean). Used automatically when the tree has at most this many leaves.
constexpr std::size_t kExactLeafCap = std::size_t{1} << 20;

/// Pr_D[T(x) != f(x)]. Exact when T has at most kExactLeafCap leaves, otherwise
/// leaf-conditional Monte Carlo: leaves are reached by walking T on draws from
/// D and the exact conditional disagreement of each reached leaf is averaged.
ErrorReport tree_error(const DecisionTree& t, const TargetFunction& f, const ProductDistribution& d,
                       std::uint64_t seed = 0, std::size_t mc_samples = 10000);
ErrorReport tree_error_exact(const DecisionTree& t, const TargetFunction& f, const ProductDistribution& d);
ErrorReport tree_error_mc(const DecisionTree& t, const TargetFunction& f, const ProductDistribution& d,
                          std::uint64_t seed, std::size_t samples);

/// Leaves of the full memory-only tree of an addressing target, drawn from D.
struct LeafMeanStats {
  Summary means;
  double band_lo;
  double band_hi;
  double band_fraction;
  double band_ci;
  /// Mean of min(mu, 1 - mu): the error of the full memory-only tree.
  double conditional_error;
  double conditional_error_ci;
  /// Smallest mu minus the per-leaf lower bound, when one is supplied.
  std::optional<double> min_mean_slack;
};

/// Samples each free memory bit from its marginal under D, computes the exact
/// leaf mean sum_a Pr[z = a] c_a, and summarizes. The band defaults to
/// [delta/2, 1 - delta/2].
LeafMeanStats leaf_mean_stats(const TargetFunction& f, const ProductDistribution& d, std::size_t leaves,
                              std::uint64_t seed, std::optional<double> mean_lower_bound = std::nullopt);

/// Exact error of the full memory-only tree (2^{free memory bits} leaves).
/// Throws Error(unsupported_target) above 20 free memory bits.
double full_memory_tree_error(const TargetFunction& f, const ProductDistribution& d);

enum class Verdict { pass, fail, out_of_hypothesis };
std::string_view to_string(Verdict v) noexcept;

struct Theorem4Config {
  std::size_t k = 4;
  double delta = 0.25;
  ImpurityFunction impurity = gini_impurity();
  TieRule tie_rule = TieRule::lexicographic;
  std::uint64_t seed = 0;
  /// Coded layout from gv_search instead of the disjoint-parity layout.
  bool coded = false;
  std::size_t paths = 200;
  std::size_t mc_leaves = 10000;
  std::uint64_t gv_budget = 100000;
};

struct Theorem4Result {
  Verdict verdict;
  std::string target_description;
  std::size_t c;
  HypothesisConstants constants;
  std::vector<double> biases;
  BuildResult build;
  QueryOrderReport order;
  /// Error of the full memory-only tree (exact at k <= 4, MC above).
  double full_tree_error;
  double full_tree_ci;
  bool exact;
  double error_floor;
  /// Learned tree's own error (leaf-conditional MC when it is large).
  ErrorReport learned_error;
  /// Hoeffding step of the error argument: 1 - exp(-2^k delta^2 / 8) >= 2/3.
  bool hoeffding_regime;
  std::string note;
};

Theorem4Result theorem4_experiment(const Theorem4Config& config);

struct Theorem5Config {
  std::size_t k = 6;
  double delta = 0.25;
  double epsilon = 0.25;
  ImpurityFunction impurity = gini_impurity();
  TieRule tie_rule = TieRule::lexicographic;
  std::uint64_t seed = 0;
  std::size_t mc_leaves = 10000;
  std::uint64_t gv_budget = 100000;
};

struct Theorem5Result {
  Verdict verdict;
  std::size_t c;
  std::size_t code_distance;
  AgnosticPartition partition;
  std::vector<double> biases;
  double junta_distance;
  double junta_bound;
  BuildResult build;
  bool only_free_memory_before_budget;
  double error;
  double error_ci;
  bool exact;
  double min_leaf_mean;
  double leaf_mean_lower_bound;
  std::string note;
};

Theorem5Result theorem5_experiment(const Theorem5Config& config);

struct JuntaSanityConfig {
  std::size_t junta_size = 3;
  std::size_t n = 12;
  double sigma = 0.05;
  double delta = 0.1;
  std::size_t trials = 100;
  ImpurityFunction impurity = gini_impurity();
  std::uint64_t seed = 0;
  /// Use the exactly uniform distribution and a parity junta instead.
  bool uniform_parity = false;
};

struct JuntaSanityResult {
  std::size_t successes;
  std::size_t trials;
  double success_rate;
  std::vector<std::size_t> failed_trials;
};

JuntaSanityResult junta_sanity_experiment(const JuntaSanityConfig& config);

struct ParityExampleResult {
  std::string impurity;
  std::vector<double> gains;
  double max_abs_gain;
};

struct FiniteSampleConfig {
  std::size_t k = 4;
  double delta = 0.25;
  std::vector<std::size_t> sample_sizes = {1u << 10, 1u << 12, 1u << 14, 1u << 16};
  std::size_t trials = 50;
  /// Depth of the sampled tree; every split must be a memory bit.
  std::size_t depth = 3;
  ImpurityFunction impurity = gini_impurity();
  std::uint64_t seed = 0;
};

struct FiniteSamplePoint {
  std::size_t samples;
  std::size_t memory_first;
  std::size_t trials;
  double rate;
};

/// Sampled-gain builds on f_{c,k} with c = ceil(ln 5 / delta) and fresh
/// biases per trial; records how often no addressing bit is queried.
std::vector<FiniteSamplePoint> finite_sample_experiment(const FiniteSampleConfig& config);

/// Rates must not decrease with m except for at most one drop that stays
/// within two binomial standard errors, and the last rate must reach
/// `final_floor`. Returns the number of drops through `inversions`.
bool finite_sample_trend_ok(const std::vector<FiniteSamplePoint>& points, double final_floor,
                            std::size_t* inversions = nullptr);

/// Gains of every variable for x_i xor x_j under the uniform distribution.
std::vector<ParityExampleResult> parity_example(std::size_t n, std::size_t i, std::size_t j);

}  // namespace treelb
