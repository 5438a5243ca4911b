#include "treelb/impurity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "treelb/distributions.hpp"
#include "treelb/error.hpp"
#include "treelb/targets.hpp"

namespace treelb {
namespace {

double clamp_unit(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

ImpurityFunction gini_impurity() {
  return {"gini", [](double p) {
            p = clamp_unit(p);
            return 4.0 * p * (1.0 - p);
          },
          8.0, 8.0};
}

ImpurityFunction entropy_impurity() {
  // -H''(p) = 1 / (p (1 - p) ln 2), minimized at p = 1/2.
  return {"entropy",
          [](double p) {
            p = clamp_unit(p);
            if (p == 0.0 || p == 1.0) return 0.0;
            return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
          },
          4.0 / std::numbers::ln2, std::numeric_limits<double>::infinity()};
}

ImpurityFunction kearns_mansour_impurity() {
  // -G''(p) = 1 / (2 (p (1 - p))^{3/2}), minimized at p = 1/2.
  return {"km",
          [](double p) {
            p = clamp_unit(p);
            return 2.0 * std::sqrt(p * (1.0 - p));
          },
          4.0, std::numeric_limits<double>::infinity()};
}

std::vector<ImpurityFunction> builtin_impurities() {
  return {gini_impurity(), entropy_impurity(), kearns_mansour_impurity()};
}

ImpurityFunction impurity_by_name(std::string_view name) {
  if (name == "gini") return gini_impurity();
  if (name == "entropy") return entropy_impurity();
  if (name == "km") return kearns_mansour_impurity();
  throw Error(ErrorCode::invalid_argument, "unknown impurity '" + std::string(name) + "'");
}

CurvatureRange estimate_curvature(const ImpurityFunction& g, double lo, double hi, double step) {
  if (!(lo > 0.0 && hi < 1.0 && lo < hi && step > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "curvature grid must lie strictly inside (0, 1)");
  }
  const double h = std::min(step, std::min(lo, 1.0 - hi)) / 2.0;
  CurvatureRange range{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const auto points = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t t = 0; t <= points; ++t) {
    const double p = lo + static_cast<double>(t) * step;
    const double second = (g(p + h) - 2.0 * g(p) + g(p - h)) / (h * h);
    range.min_neg_second_derivative = std::min(range.min_neg_second_derivative, -second);
    range.max_neg_second_derivative = std::max(range.max_neg_second_derivative, -second);
  }
  return range;
}

Kappa kappa_for(double alpha, double smoothness, double delta) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::invalid_argument, "alpha must be positive");
  if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1/2]");
  return {std::max(2.0 / (alpha * delta * (1.0 - delta)), smoothness / 8.0)};
}

Kappa kappa_for(const ImpurityFunction& g, double delta) { return kappa_for(g.alpha, g.smoothness, delta); }

double split_gain(const ImpurityFunction& g, double p, double mu0, double mu1) {
  const double mean = p * mu1 + (1.0 - p) * mu0;
  return g(mean) - p * g(mu1) - (1.0 - p) * g(mu0);
}

double purity_gain(const TargetFunction& f, const ProductDistribution& d, const ImpurityFunction& g,
                   std::size_t var) {
  if (var >= f.arity()) throw Error(ErrorCode::invalid_argument, "variable index out of range");
  if (d.size() != f.arity()) throw Error(ErrorCode::arity_mismatch, "distribution size differs from target arity");
  const SplitMeans means = split_means(f, d.biases());
  return split_gain(g, d.bias(var), means.given[var][0], means.given[var][1]);
}

GainRatioReport gain_ratio_bounds(const TargetFunction& f, const ProductDistribution& d, const ImpurityFunction& g,
                                  std::size_t var, double tolerance) {
  if (!g.has_finite_curvature()) {
    throw Error(ErrorCode::infinite_smoothness, "impurity '" + g.name + "' has no finite smoothness bound");
  }
  if (var >= f.arity()) throw Error(ErrorCode::invalid_argument, "variable index out of range");
  const SplitMeans means = split_means(f, d.biases());
  const double mu0 = means.given[var][0];
  const double mu1 = means.given[var][1];
  GainRatioReport report{};
  report.gain = split_gain(g, d.bias(var), mu0, mu1);
  report.sq_diff = (mu0 - mu1) * (mu0 - mu1);
  report.kappa = kappa_for(g, d.delta());
  if (report.sq_diff <= kGainTolerance) {
    report.ratio_ok = report.gain <= kGainTolerance;
  } else {
    const double ratio = report.gain / report.sq_diff;
    report.ratio_ok = ratio >= 1.0 / report.kappa.value - tolerance && ratio <= report.kappa.value + tolerance;
  }
  return report;
}

}  // namespace treelb
