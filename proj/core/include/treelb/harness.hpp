#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "treelb/codes.hpp"
#include "treelb/distributions.hpp"
#include "treelb/error.hpp"
#include "treelb/evaluation.hpp"
#include "treelb/learner.hpp"
#include "treelb/targets.hpp"

namespace treelb {

using Json = nlohmann::json;

// ---- schema-level parsing (all failures are Error(invalid_config)) ----

/// {"family": "fck"|"fcks"|"restricted"|"junta"|"table"|"dictator"|"parity", ...}
TargetFunction parse_target(const Json& spec);
Json target_to_json(const TargetFunction& f);

/// {"kind": "uniform"|"fixed"|"smoothed", "n", "delta", "biases", "sigma", "seed"}.
/// `n` falls back to `arity` when absent.
ProductDistribution parse_distribution(const Json& spec, std::optional<std::size_t> arity = std::nullopt);
Json distribution_to_json(const ProductDistribution& d);

Json set_family_to_json(const SetFamily& s);
SetFamily set_family_from_json(const Json& j);

/// Nested nodes: internal {"var", "mean", "label", "children": [lo, hi]},
/// leaves {"leaf": true, "mean", "label"}.
Json tree_to_json(const DecisionTree& t);
DecisionTree tree_from_json(const Json& j);

/// node_id,depth,chosen_var,class,gain,runner_up_gain,margin
std::string audits_to_csv(const std::vector<SplitAudit>& audits);
std::vector<SplitAudit> audits_from_csv(std::string_view csv);

/// Error of the tree cut at every depth, from the node means stored by an
/// exact build. Entry h is the error when each node at depth h is a leaf.
std::vector<double> depth_error_curve(const DecisionTree& t, const ProductDistribution& d);

// ---- experiments ----

enum class ExperimentKind {
  learn,
  gains,
  verify_thm4,
  verify_thm5,
  junta_sanity,
  parity_example,
  gv_search,
  address_pmf,
  export_dataset,
  finite_sample,
};

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind experiment_kind_by_name(std::string_view name);

struct ExperimentConfig {
  ExperimentKind kind;
  std::uint64_t seed = 0;
  std::string impurity = "gini";
  /// Present for kinds that operate on a caller-supplied target.
  Json target;
  Json distribution;
  GrowthPolicy policy;
  /// 0 selects the exact learner; otherwise the sampled learner with m examples.
  std::size_t samples = 0;
  /// Kind-specific parameters (k, delta, epsilon, trials, ...).
  Json params = Json::object();
  std::filesystem::path output_dir;
  /// Canonical form used for hashing.
  Json canonical;
};

/// Validates every field and throws one Error(invalid_config) listing each
/// offending field as "path: message".
ExperimentConfig parse_config(const Json& j);

/// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_hash(const Json& canonical);

std::string_view version_stamp() noexcept;

struct RunRecord {
  std::string config_hash;
  std::string version;
  double wall_seconds = 0.0;
  /// "pass", "fail", "out-of-hypothesis" or "error".
  std::string verdict;
  Json payload;
  std::vector<std::string> files;
  std::optional<std::string> error;
  std::optional<ErrorCode> error_code;
};

/// Runs one experiment and writes its artifacts into config.output_dir (when
/// set). Component errors are caught and recorded with verdict "error".
RunRecord run(const ExperimentConfig& config);

/// 0 pass or out-of-hypothesis, 1 claim failed, 2 invalid input, 3 internal error.
int exit_code(const RunRecord& record) noexcept;

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// CSV with header x_1,...,x_n,label and m rows drawn i.i.d. from D.
void export_dataset(const TargetFunction& f, const ProductDistribution& d, std::size_t m, std::uint64_t seed,
                    const std::filesystem::path& path);

}  // namespace treelb
