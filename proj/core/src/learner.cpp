#include "treelb/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "treelb/error.hpp"
#include "treelb/random.hpp"

namespace treelb {

// ---- DecisionTree -----------------------------------------------------------

DecisionTree::DecisionTree() : nodes_(1), parents_(1, 0) {}

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)), parents_(nodes_.size(), 0) {
  if (nodes_.empty()) throw Error(ErrorCode::invalid_argument, "a tree needs a root");
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.is_leaf()) continue;
    for (std::size_t child : n.children) {
      if (child <= id || child >= nodes_.size()) throw Error(ErrorCode::invalid_argument, "malformed tree links");
      parents_[child] = id;
    }
  }
}

std::uint8_t round_label(double mean) noexcept { return mean >= 0.5 ? 1 : 0; }

std::size_t DecisionTree::add_leaf(std::size_t depth, double mean) {
  Node n;
  n.depth = depth;
  n.mean = mean;
  n.label = round_label(mean);
  nodes_.push_back(n);
  parents_.push_back(0);
  return nodes_.size() - 1;
}

void DecisionTree::split(std::size_t id, std::size_t var, std::size_t child0, std::size_t child1) {
  nodes_[id].var = static_cast<std::int64_t>(var);
  nodes_[id].children[0] = child0;
  nodes_[id].children[1] = child1;
  parents_[child0] = id;
  parents_[child1] = id;
}

void DecisionTree::set_leaf(std::size_t id, double mean) { set_leaf(id, mean, round_label(mean)); }

void DecisionTree::set_leaf(std::size_t id, double mean, std::uint8_t label) {
  nodes_[id].var = kLeaf;
  nodes_[id].mean = mean;
  nodes_[id].label = label;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::leaf_for(std::span<const std::uint8_t> x) const {
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto var = static_cast<std::size_t>(nodes_[id].var);
    if (var >= x.size()) throw Error(ErrorCode::arity_mismatch, "input shorter than the queried variable");
    id = nodes_[id].children[x[var] ? 1 : 0];
  }
  return id;
}

Restriction DecisionTree::path_restriction(std::size_t id) const {
  std::vector<Restriction::Assignment> reversed;
  while (id != 0) {
    const std::size_t parent = parents_[id];
    const Node& p = nodes_[parent];
    reversed.emplace_back(static_cast<std::size_t>(p.var), p.children[1] == id ? 1 : 0);
    id = parent;
  }
  std::reverse(reversed.begin(), reversed.end());
  return Restriction(std::move(reversed));
}

// ---- names ------------------------------------------------------------------

std::string_view to_string(TieRule rule) noexcept {
  switch (rule) {
    case TieRule::lexicographic: return "lexicographic";
    case TieRule::prefer_addressing: return "prefer-addressing";
    case TieRule::seeded_random: return "seeded-random";
  }
  return "unknown";
}

TieRule tie_rule_by_name(std::string_view name) {
  if (name == "lexicographic") return TieRule::lexicographic;
  if (name == "prefer-addressing") return TieRule::prefer_addressing;
  if (name == "seeded-random") return TieRule::seeded_random;
  throw Error(ErrorCode::invalid_argument, "unknown tie rule '" + std::string(name) + "'");
}

std::string_view to_string(VariableClass cls) noexcept {
  switch (cls) {
    case VariableClass::addressing: return "addressing";
    case VariableClass::memory: return "memory";
    case VariableClass::other: return "other";
  }
  return "unknown";
}

namespace {

std::uint64_t restriction_key(const Restriction& pi) {
  std::uint64_t key = 0x51ed270b27e9a3c1ULL;
  for (const auto& [var, bit] : pi) key = mix64(key ^ (static_cast<std::uint64_t>(var) << 1 | bit));
  return key;
}

struct Choice {
  std::size_t var;
  double gain;
  double runner_up;
};

// Picks a maximizer of `gains` over the candidates under the tie rule.
Choice choose_split(const TargetFunction& f, const std::vector<double>& gains, const std::vector<bool>& candidate,
                    const GrowthPolicy& policy, const Restriction& pi) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < gains.size(); ++v) {
    if (candidate[v]) best = std::max(best, gains[v]);
  }
  std::vector<std::size_t> maximizers;
  for (std::size_t v = 0; v < gains.size(); ++v) {
    if (candidate[v] && gains[v] >= best - kGainTolerance) maximizers.push_back(v);
  }
  std::size_t chosen = maximizers.front();
  switch (policy.tie_rule) {
    case TieRule::lexicographic:
      break;
    case TieRule::prefer_addressing:
      for (std::size_t v : maximizers) {
        if (f.variable_class(v) == VariableClass::addressing) {
          chosen = v;
          break;
        }
      }
      break;
    case TieRule::seeded_random: {
      Rng rng(derive_seed(policy.seed, restriction_key(pi)));
      chosen = maximizers[rng.below(maximizers.size())];
      break;
    }
  }

  const VariableClass cls = f.variable_class(chosen);
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < gains.size(); ++v) {
    if (!candidate[v] || v == chosen) continue;
    const bool competing = cls == VariableClass::other || f.variable_class(v) != cls;
    if (competing) runner_up = std::max(runner_up, gains[v]);
  }
  if (runner_up == -std::numeric_limits<double>::infinity()) runner_up = 0.0;
  return {chosen, gains[chosen], runner_up};
}

bool is_pure(double mean) { return mean <= kGainTolerance || mean >= 1.0 - kGainTolerance; }

class ExactBuilder {
 public:
  ExactBuilder(const TargetFunction& f, const ProductDistribution& d, const ImpurityFunction& g,
               const GrowthPolicy& policy)
      : f_(f), d_(d), g_(g), policy_(policy) {
    if (d.size() != f.arity()) throw Error(ErrorCode::arity_mismatch, "distribution size differs from target arity");
  }

  BuildResult run() {
    result_.tree.set_leaf(0, expectation(f_, d_.biases()));
    expanded_.assign(1, false);
    if (policy_.expansion == Expansion::full) {
      std::vector<std::size_t> stack{0};
      while (!stack.empty()) {
        const std::size_t id = stack.back();
        stack.pop_back();
        expand(id);
        const auto& n = result_.tree.node(id);
        if (!n.is_leaf()) {
          stack.push_back(n.children[1]);
          stack.push_back(n.children[0]);
        }
      }
    } else {
      BitString x(f_.arity());
      for (std::size_t path = 0; path < policy_.path_count; ++path) {
        Rng rng(derive_seed(derive_seed(policy_.seed, 0x70617468ULL), path));
        sample_input_into(d_.biases(), rng, x);
        std::size_t id = 0;
        for (;;) {
          if (!expanded_[id]) expand(id);
          const auto& n = result_.tree.node(id);
          if (n.is_leaf()) break;
          id = n.children[x[static_cast<std::size_t>(n.var)]];
        }
      }
    }
    return std::move(result_);
  }

 private:
  void expand(std::size_t id) {
    expanded_[id] = true;
    const std::size_t depth = result_.tree.node(id).depth;
    const Restriction pi = result_.tree.path_restriction(id);
    const ConditionedProduct law = d_.condition(pi);

    if (depth >= policy_.depth_budget) {
      result_.depth_budget_hit = true;
      result_.tree.set_leaf(id, expectation(f_, law.probs()));
      return;
    }
    const SplitMeans means = split_means(f_, law.probs());
    if (is_pure(means.mean)) {
      result_.tree.set_leaf(id, means.mean);
      return;
    }
    if (internal_ >= policy_.node_budget) {
      result_.node_budget_hit = true;
      result_.tree.set_leaf(id, means.mean);
      return;
    }
    std::vector<bool> candidate(f_.arity(), true);
    for (const auto& [var, bit] : pi) candidate[var] = false;
    if (std::none_of(candidate.begin(), candidate.end(), [](bool c) { return c; })) {
      result_.tree.set_leaf(id, means.mean);
      return;
    }
    std::vector<double> gains(f_.arity(), 0.0);
    for (std::size_t v = 0; v < gains.size(); ++v) {
      if (candidate[v]) gains[v] = split_gain(g_, law[v], means.given[v][0], means.given[v][1]);
    }
    const Choice choice = choose_split(f_, gains, candidate, policy_, pi);

    SplitAudit audit{id,
                     depth,
                     pi,
                     choice.var,
                     f_.variable_class(choice.var),
                     choice.gain,
                     choice.runner_up,
                     choice.gain - choice.runner_up,
                     {}};
    if (policy_.record_gains) audit.gains = std::move(gains);
    result_.audits.push_back(std::move(audit));

    const std::size_t c0 = result_.tree.add_leaf(depth + 1, means.given[choice.var][0]);
    const std::size_t c1 = result_.tree.add_leaf(depth + 1, means.given[choice.var][1]);
    result_.tree.split(id, choice.var, c0, c1);
    expanded_.resize(result_.tree.size(), false);
    ++internal_;
  }

  const TargetFunction& f_;
  const ProductDistribution& d_;
  const ImpurityFunction& g_;
  const GrowthPolicy& policy_;
  BuildResult result_;
  std::vector<bool> expanded_;
  std::size_t internal_ = 0;
};

}  // namespace

BuildResult build_tree_exact(const TargetFunction& f, const ProductDistribution& d, const ImpurityFunction& g,
                             const GrowthPolicy& policy) {
  return ExactBuilder(f, d, g, policy).run();
}

BuildResult build_tree_sampled(const TargetFunction& f, const ProductDistribution& d, const ImpurityFunction& g,
                               const GrowthPolicy& policy, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw Error(ErrorCode::invalid_argument, "sample count must be at least 1");
  if (d.size() != f.arity()) throw Error(ErrorCode::arity_mismatch, "distribution size differs from target arity");
  const std::size_t n = f.arity();

  std::vector<std::uint8_t> data(samples * n);
  std::vector<std::uint8_t> labels(samples);
  {
    Rng rng(derive_seed(seed, 0));
    for (std::size_t s = 0; s < samples; ++s) {
      std::span<std::uint8_t> row(data.data() + s * n, n);
      sample_input_into(d.biases(), rng, row);
      labels[s] = f.eval(row);
    }
  }

  BuildResult result;
  struct Work {
    std::size_t id;
    std::vector<std::size_t> rows;
    double parent_mean;
  };
  std::vector<Work> stack;
  {
    std::vector<std::size_t> all(samples);
    for (std::size_t s = 0; s < samples; ++s) all[s] = s;
    stack.push_back({0, std::move(all), 0.0});
  }
  std::size_t internal = 0;
  std::vector<std::size_t> ones(n);
  std::vector<std::size_t> ones_positive(n);

  while (!stack.empty()) {
    Work work = std::move(stack.back());
    stack.pop_back();
    const std::size_t id = work.id;
    const std::size_t depth = result.tree.node(id).depth;
    if (work.rows.empty()) {
      // Empty cell: inherit the parent's majority.
      result.tree.set_leaf(id, work.parent_mean);
      continue;
    }
    std::size_t positives = 0;
    for (std::size_t s : work.rows) positives += labels[s];
    const double count = static_cast<double>(work.rows.size());
    const double mean = static_cast<double>(positives) / count;
    result.tree.set_leaf(id, mean);
    if (depth >= policy.depth_budget) {
      result.depth_budget_hit = true;
      continue;
    }
    if (positives == 0 || positives == work.rows.size()) continue;
    if (internal >= policy.node_budget) {
      result.node_budget_hit = true;
      continue;
    }
    const Restriction pi = result.tree.path_restriction(id);
    std::vector<bool> candidate(n, true);
    for (const auto& [var, bit] : pi) candidate[var] = false;
    if (std::none_of(candidate.begin(), candidate.end(), [](bool c) { return c; })) continue;

    std::fill(ones.begin(), ones.end(), 0);
    std::fill(ones_positive.begin(), ones_positive.end(), 0);
    for (std::size_t s : work.rows) {
      const std::uint8_t* row = data.data() + s * n;
      const std::uint8_t label = labels[s];
      for (std::size_t v = 0; v < n; ++v) {
        ones[v] += row[v];
        ones_positive[v] += row[v] & label;
      }
    }
    std::vector<double> gains(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      if (!candidate[v]) continue;
      const double n1 = static_cast<double>(ones[v]);
      const double n0 = count - n1;
      const double mu1 = ones[v] ? static_cast<double>(ones_positive[v]) / n1 : mean;
      const double mu0 = n0 > 0 ? static_cast<double>(positives - ones_positive[v]) / n0 : mean;
      gains[v] = split_gain(g, n1 / count, mu0, mu1);
    }
    const Choice choice = choose_split(f, gains, candidate, policy, pi);
    SplitAudit audit{id,
                     depth,
                     pi,
                     choice.var,
                     f.variable_class(choice.var),
                     choice.gain,
                     choice.runner_up,
                     choice.gain - choice.runner_up,
                     {}};
    if (policy.record_gains) audit.gains = std::move(gains);
    result.audits.push_back(std::move(audit));

    std::vector<std::size_t> rows0;
    std::vector<std::size_t> rows1;
    for (std::size_t s : work.rows) (data[s * n + choice.var] ? rows1 : rows0).push_back(s);
    const auto child_mean = [&](const std::vector<std::size_t>& rows) {
      if (rows.empty()) return mean;
      std::size_t p = 0;
      for (std::size_t s : rows) p += labels[s];
      return static_cast<double>(p) / static_cast<double>(rows.size());
    };
    const std::size_t c0 = result.tree.add_leaf(depth + 1, child_mean(rows0));
    const std::size_t c1 = result.tree.add_leaf(depth + 1, child_mean(rows1));
    result.tree.split(id, choice.var, c0, c1);
    ++internal;
    stack.push_back({c1, std::move(rows1), mean});
    stack.push_back({c0, std::move(rows0), mean});
  }
  return result;
}

QueryOrderReport audit_query_order(const std::vector<SplitAudit>& audits) {
  QueryOrderReport report;
  std::size_t max_depth_plus_one = 0;
  for (const auto& a : audits) {
    max_depth_plus_one = std::max(max_depth_plus_one, a.depth + 1);
    if (a.chosen_class == VariableClass::addressing) {
      ++report.addressing_splits;
      if (!report.first_addressing_depth || a.depth < *report.first_addressing_depth) {
        report.first_addressing_depth = a.depth;
      }
    } else if (a.chosen_class == VariableClass::memory) {
      ++report.memory_splits;
      report.min_margin = report.min_margin ? std::min(*report.min_margin, a.margin) : a.margin;
    }
  }
  report.memory_prefix_length = report.first_addressing_depth.value_or(max_depth_plus_one);
  return report;
}

HypothesisConstants hypothesis_constants(const ImpurityFunction& g, double delta) {
  const double kappa = kappa_for(g, delta).value;
  return {kappa, std::log(5.0) / delta, std::log(2.0 * kappa) / std::log(1.25) + 1.0};
}

}  // namespace treelb
