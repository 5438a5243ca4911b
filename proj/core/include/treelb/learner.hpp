#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treelb/distributions.hpp"
#include "treelb/impurity.hpp"
#include "treelb/restriction.hpp"
#include "treelb/targets.hpp"

namespace treelb {

/// Binary query tree. Node 0 is the root. Internal nodes query `var` and
/// route x_var = b to children[b]; leaves carry the label 1[mean >= 1/2].
class DecisionTree {
 public:
  static constexpr std::int64_t kLeaf = -1;

  struct Node {
    std::int64_t var = kLeaf;
    std::size_t children[2] = {0, 0};
    std::size_t depth = 0;
    std::uint8_t label = 0;
    /// Exact (or, for sampled builds, empirical) mean of f at this node.
    double mean = 0.0;
    bool is_leaf() const noexcept { return var == kLeaf; }
  };

  DecisionTree();
  explicit DecisionTree(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t depth() const;
  std::size_t leaf_count() const;
  std::size_t internal_count() const { return size() - leaf_count(); }

  /// Index of the leaf reached by x.
  std::size_t leaf_for(std::span<const std::uint8_t> x) const;
  std::uint8_t predict(std::span<const std::uint8_t> x) const { return nodes_[leaf_for(x)].label; }

  /// Root-to-node restriction.
  Restriction path_restriction(std::size_t id) const;
  std::size_t parent(std::size_t id) const { return parents_[id]; }

  /// Builder interface.
  std::size_t add_leaf(std::size_t depth, double mean);
  void split(std::size_t id, std::size_t var, std::size_t child0, std::size_t child1);
  void set_leaf(std::size_t id, double mean);
  void set_leaf(std::size_t id, double mean, std::uint8_t label);

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> parents_;
};

std::uint8_t round_label(double mean) noexcept;

enum class TieRule { lexicographic, prefer_addressing, seeded_random };
enum class Expansion { full, sampled_paths };

std::string_view to_string(TieRule rule) noexcept;
TieRule tie_rule_by_name(std::string_view name);
std::string_view to_string(VariableClass cls) noexcept;

struct GrowthPolicy {
  std::size_t depth_budget = 8;
  /// Maximum number of internal nodes.
  std::size_t node_budget = 1u << 20;
  Expansion expansion = Expansion::full;
  std::size_t path_count = 200;
  std::uint64_t seed = 0;
  TieRule tie_rule = TieRule::lexicographic;
  /// Keep every candidate's gain in the audit (large for wide targets).
  bool record_gains = true;
};

struct SplitAudit {
  std::size_t node_id;
  std::size_t depth;
  Restriction restriction;
  std::size_t chosen_var;
  VariableClass chosen_class;
  double chosen_gain;
  /// Best gain among the competing class (the other class of an addressing
  /// target, every other variable otherwise); 0 when there is no competitor.
  double runner_up_gain;
  double margin;
  std::vector<double> gains;
};

struct BuildResult {
  DecisionTree tree;
  std::vector<SplitAudit> audits;
  bool depth_budget_hit = false;
  bool node_budget_hit = false;
};

/// Greedy top-down induction with exact purity gains. At every expanded node
/// all unqueried variables are scored and a maximizer (within kGainTolerance)
/// is chosen under the tie rule. Nodes with mean 0 or 1 become leaves.
BuildResult build_tree_exact(const TargetFunction& f, const ProductDistribution& d, const ImpurityFunction& g,
                             const GrowthPolicy& policy);

/// The same control flow with means and branch probabilities estimated from
/// m i.i.d. labeled examples. Always expands fully within the budgets.
BuildResult build_tree_sampled(const TargetFunction& f, const ProductDistribution& d, const ImpurityFunction& g,
                               const GrowthPolicy& policy, std::size_t samples, std::uint64_t seed);

struct QueryOrderReport {
  std::optional<std::size_t> first_addressing_depth;
  /// Every split strictly above this depth queried a memory bit.
  std::size_t memory_prefix_length;
  /// Minimum over memory splits of (chosen gain - best addressing gain).
  std::optional<double> min_margin;
  std::size_t memory_splits = 0;
  std::size_t addressing_splits = 0;
};

QueryOrderReport audit_query_order(const std::vector<SplitAudit>& audits);

/// Hypothesis constants (kappa, c0, k0) reported alongside experiments.
struct HypothesisConstants {
  double kappa;
  double c0;  // ln 5 / delta
  double k0;  // ln(2 kappa) / ln(5/4) + 1
};
HypothesisConstants hypothesis_constants(const ImpurityFunction& g, double delta);

}  // namespace treelb
