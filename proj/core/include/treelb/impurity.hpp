#pragma once

#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace treelb {

class TargetFunction;
class ProductDistribution;

/// A concave, symmetric criterion G : [0,1] -> [0,1] with G(0) = G(1) = 0 and
/// G(1/2) = 1, together with the curvature bounds alpha <= -G'' <= smoothness.
/// `smoothness` is +inf for criteria whose second derivative blows up at the
/// endpoints.
struct ImpurityFunction {
  std::string name;
  std::function<double(double)> eval;
  double alpha = 0.0;
  double smoothness = std::numeric_limits<double>::infinity();

  double operator()(double p) const { return eval(p); }
  bool has_finite_curvature() const { return smoothness < std::numeric_limits<double>::infinity(); }
};

ImpurityFunction gini_impurity();
ImpurityFunction entropy_impurity();
/// 2 * sqrt(p (1 - p)).
ImpurityFunction kearns_mansour_impurity();

/// Gini, entropy, Kearns-Mansour, in that order.
std::vector<ImpurityFunction> builtin_impurities();

/// Accepts "gini", "entropy", "km"; throws Error(invalid_argument) otherwise.
ImpurityFunction impurity_by_name(std::string_view name);

struct CurvatureRange {
  double min_neg_second_derivative;
  double max_neg_second_derivative;
};

/// Range of -G'' over [lo, hi] sampled on a uniform grid by central
/// differences.
CurvatureRange estimate_curvature(const ImpurityFunction& g, double lo, double hi, double step = 1e-4);

/// Gain/diff^2 ratio constant: max(2 / (alpha delta (1 - delta)), L / 8).
struct Kappa {
  double value;
};

Kappa kappa_for(double alpha, double smoothness, double delta);
Kappa kappa_for(const ImpurityFunction& g, double delta);

/// G(mean) - p G(mu1) - (1 - p) G(mu0), with mean = p mu1 + (1 - p) mu0.
double split_gain(const ImpurityFunction& g, double p, double mu0, double mu1);

constexpr double kGainTolerance = 1e-12;

/// Purity gain of querying variable `var` on f under D.
double purity_gain(const TargetFunction& f, const ProductDistribution& d, const ImpurityFunction& g,
                   std::size_t var);

struct GainRatioReport {
  double gain;
  double sq_diff;
  Kappa kappa;
  bool ratio_ok;
};

/// Checks 1/kappa <= gain / sq_diff <= kappa (or gain ~ 0 when sq_diff ~ 0).
/// Throws Error(infinite_smoothness) when G has no finite smoothness bound.
GainRatioReport gain_ratio_bounds(const TargetFunction& f, const ProductDistribution& d,
                                  const ImpurityFunction& g, std::size_t var, double tolerance = 1e-9);

}  // namespace treelb
