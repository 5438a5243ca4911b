#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "treelb/restriction.hpp"

namespace treelb {

using BitString = std::vector<std::uint8_t>;

/// Law of a product distribution in which some coordinates may be point
/// masses. This is what conditioning a ProductDistribution on a restriction
/// produces, and it is the form every expectation oracle consumes.
class ConditionedProduct {
 public:
  explicit ConditionedProduct(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  bool is_fixed(std::size_t i) const { return probs_[i] == 0.0 || probs_[i] == 1.0; }

 private:
  std::vector<double> probs_;
};

/// Independent bits with Pr[x_i = 1] = biases[i] in [delta, 1 - delta].
class ProductDistribution {
 public:
  /// Throws Error(invalid_spec) if delta is outside (0, 1/2] or a bias leaves
  /// [delta, 1 - delta].
  ProductDistribution(std::vector<double> biases, double delta);

  static ProductDistribution uniform(std::size_t n);

  std::size_t size() const noexcept { return biases_.size(); }
  double delta() const noexcept { return delta_; }
  double bias(std::size_t i) const { return biases_[i]; }
  std::span<const double> biases() const noexcept { return biases_; }

  /// Fixed coordinates become point masses; free ones keep their bias.
  ConditionedProduct condition(const Restriction& pi) const;
  ConditionedProduct law() const { return ConditionedProduct(biases_); }

 private:
  std::vector<double> biases_;
  double delta_;
};

/// Base biases and perturbation radius of a smoothed product distribution.
/// Realized bias i is base_biases[i] + U[-sigma, sigma].
struct SmoothedSpec {
  std::vector<double> base_biases;
  double sigma = 0.0;
  double delta = 0.5;

  /// Throws Error(invalid_spec) unless every base bias lies strictly inside
  /// (delta + sigma, 1 - delta - sigma). With sigma = 0 the closed band
  /// [delta, 1 - delta] is accepted.
  void validate() const;
};

/// Coordinate i draws its perturbation from the stream derive_seed(seed, i).
ProductDistribution sample_smoothed(const SmoothedSpec& spec, std::uint64_t seed);

/// Pr[x_1 xor ... xor x_n = 1] for independent bits with the given biases.
/// Throws Error(empty_sequence) on an empty input.
double xor_bias(std::span<const double> biases);

/// Draws each coordinate in index order from one generator seeded with
/// derive_seed(seed, 0). Point masses (0 or 1) are honored exactly.
BitString sample_input(std::span<const double> probs, std::uint64_t seed);
BitString sample_input(const ProductDistribution& d, std::uint64_t seed);

class Rng;
void sample_input_into(std::span<const double> probs, Rng& rng, std::span<std::uint8_t> out);

}  // namespace treelb
