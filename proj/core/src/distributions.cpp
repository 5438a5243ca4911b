#include "treelb/distributions.hpp"

#include <cmath>
#include <string>

#include "treelb/error.hpp"
#include "treelb/random.hpp"

namespace treelb {

ConditionedProduct::ConditionedProduct(std::vector<double> probs) : probs_(std::move(probs)) {
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::invalid_spec, "probability outside [0, 1]");
  }
}

ProductDistribution::ProductDistribution(std::vector<double> biases, double delta)
    : biases_(std::move(biases)), delta_(delta) {
  if (!(delta_ > 0.0 && delta_ <= 0.5)) {
    throw Error(ErrorCode::invalid_spec, "delta must lie in (0, 1/2], got " + std::to_string(delta_));
  }
  for (std::size_t i = 0; i < biases_.size(); ++i) {
    const double p = biases_[i];
    if (!(p >= delta_ && p <= 1.0 - delta_)) {
      throw Error(ErrorCode::invalid_spec,
                  "bias " + std::to_string(i) + " = " + std::to_string(p) + " is not delta-balanced");
    }
  }
}

ProductDistribution ProductDistribution::uniform(std::size_t n) {
  return ProductDistribution(std::vector<double>(n, 0.5), 0.5);
}

ConditionedProduct ProductDistribution::condition(const Restriction& pi) const {
  std::vector<double> probs = biases_;
  for (const auto& [var, bit] : pi) {
    if (var >= probs.size()) throw Error(ErrorCode::invalid_argument, "restriction index out of range");
    probs[var] = bit;
  }
  return ConditionedProduct(std::move(probs));
}

void SmoothedSpec::validate() const {
  if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::invalid_spec, "delta must lie in (0, 1/2]");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::invalid_spec, "sigma must be nonnegative");
  for (std::size_t i = 0; i < base_biases.size(); ++i) {
    const double p = base_biases[i];
    const bool ok = sigma == 0.0 ? (p >= delta && p <= 1.0 - delta)
                                 : (p > delta + sigma && p < 1.0 - delta - sigma);
    if (!ok) {
      throw Error(ErrorCode::invalid_spec, "base bias " + std::to_string(i) + " = " + std::to_string(p) +
                                               " violates the smoothing margin");
    }
  }
}

ProductDistribution sample_smoothed(const SmoothedSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<double> biases(spec.base_biases.size());
  for (std::size_t i = 0; i < biases.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    biases[i] = spec.base_biases[i] + (spec.sigma == 0.0 ? 0.0 : rng.uniform(-spec.sigma, spec.sigma));
  }
  return ProductDistribution(std::move(biases), spec.delta);
}

double xor_bias(std::span<const double> biases) {
  if (biases.empty()) throw Error(ErrorCode::empty_sequence, "xor_bias of an empty sequence");
  double correlation = 1.0;
  for (double p : biases) correlation *= 1.0 - 2.0 * p;
  return 0.5 * (1.0 - correlation);
}

void sample_input_into(std::span<const double> probs, Rng& rng, std::span<std::uint8_t> out) {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    // Point masses consume no randomness so restricted and unrestricted draws
    // stay aligned on the free coordinates.
    if (p == 0.0 || p == 1.0) {
      out[i] = static_cast<std::uint8_t>(p);
    } else {
      out[i] = rng.bernoulli(p) ? 1 : 0;
    }
  }
}

BitString sample_input(std::span<const double> probs, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  BitString out(probs.size());
  sample_input_into(probs, rng, out);
  return out;
}

BitString sample_input(const ProductDistribution& d, std::uint64_t seed) { return sample_input(d.biases(), seed); }

}  // namespace treelb
