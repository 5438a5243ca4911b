#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "treelb/codes.hpp"
#include "treelb/distributions.hpp"
#include "treelb/restriction.hpp"

namespace treelb {

// Variable layout shared by every addressing family: addressing bits first
// (row-major x_{i,j} for the disjoint family), then the 2^k memory bits in
// lexicographic address order. Address a = (a_1, ..., a_k) maps to the
// integer sum_i a_i 2^{k-i}, i.e. a_1 is the most significant bit.

enum class VariableClass { addressing, memory, other };

/// A function of a few named coordinates given by an explicit truth table.
/// Bit t of a table index is the value of vars[t].
class TruthTableJunta {
 public:
  TruthTableJunta(std::size_t arity, std::vector<std::size_t> vars, std::vector<std::uint8_t> table);

  static TruthTableJunta dictator(std::size_t arity, std::size_t var);
  static TruthTableJunta parity(std::size_t arity, std::vector<std::size_t> vars);
  static TruthTableJunta constant(std::size_t arity, std::uint8_t value);
  /// Uniformly random table over the given relevant coordinates.
  static TruthTableJunta random(std::size_t arity, std::vector<std::size_t> vars, std::uint64_t seed);

  std::size_t arity() const noexcept { return arity_; }
  const std::vector<std::size_t>& vars() const noexcept { return vars_; }
  const std::vector<std::uint8_t>& table() const noexcept { return table_; }
  std::uint8_t eval(std::span<const std::uint8_t> x) const;

  friend bool operator==(const TruthTableJunta&, const TruthTableJunta&) = default;

 private:
  std::size_t arity_;
  std::vector<std::size_t> vars_;
  std::vector<std::uint8_t> table_;
};

/// k-bit addressing function whose i-th address bit is the parity of its own
/// block of c k addressing bits: ck^2 addressing bits then 2^k memory bits.
class DisjointParityAddressing {
 public:
  DisjointParityAddressing(std::size_t c, std::size_t k);

  std::size_t c() const noexcept { return c_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t group_size() const noexcept { return c_ * k_; }
  std::size_t addressing_bits() const noexcept { return c_ * k_ * k_; }
  std::size_t memory_bits() const noexcept { return std::size_t{1} << k_; }
  std::size_t arity() const noexcept { return addressing_bits() + memory_bits(); }
  std::size_t addressing_index(std::size_t i, std::size_t j) const { return i * group_size() + j; }
  std::size_t memory_index(std::size_t address) const { return addressing_bits() + address; }

  std::size_t address_of(std::span<const std::uint8_t> x) const;
  std::uint8_t eval(std::span<const std::uint8_t> x) const;

  /// The same function expressed as a coded family with disjoint blocks.
  SetFamily as_set_family() const;

  friend bool operator==(const DisjointParityAddressing&, const DisjointParityAddressing&) = default;

 private:
  std::size_t c_;
  std::size_t k_;
};

/// Address bit i is the parity of the addressing bits in S_i.
class CodedAddressing {
 public:
  explicit CodedAddressing(SetFamily sets);

  const SetFamily& sets() const noexcept { return sets_; }
  std::size_t k() const noexcept { return sets_.k(); }
  /// Ground size over k; informational only when k does not divide it.
  std::size_t c() const noexcept { return sets_.ground() / sets_.k(); }
  std::size_t addressing_bits() const noexcept { return sets_.ground(); }
  std::size_t memory_bits() const noexcept { return std::size_t{1} << k(); }
  std::size_t arity() const noexcept { return addressing_bits() + memory_bits(); }
  std::size_t memory_index(std::size_t address) const { return addressing_bits() + address; }

  std::size_t address_of(std::span<const std::uint8_t> x) const;
  std::uint8_t eval(std::span<const std::uint8_t> x) const;

  friend bool operator==(const CodedAddressing&, const CodedAddressing&) = default;

 private:
  SetFamily sets_;
};

/// g(x, y) = 1[z(x) in accept]: the coded address computed from x alone.
/// Shares the variable layout of CodedAddressing but ignores the memory bits.
class AddressJunta {
 public:
  AddressJunta(SetFamily sets, std::vector<std::uint8_t> accept);

  const SetFamily& sets() const noexcept { return sets_; }
  const std::vector<std::uint8_t>& accept() const noexcept { return accept_; }
  std::size_t k() const noexcept { return sets_.k(); }
  std::size_t addressing_bits() const noexcept { return sets_.ground(); }
  std::size_t arity() const noexcept { return sets_.ground() + (std::size_t{1} << k()); }
  std::uint8_t eval(std::span<const std::uint8_t> x) const;

  friend bool operator==(const AddressJunta&, const AddressJunta&) = default;

 private:
  SetFamily sets_;
  std::vector<std::uint8_t> accept_;
};

using TargetFamily = std::variant<TruthTableJunta, DisjointParityAddressing, CodedAddressing, AddressJunta>;

/// A family member, optionally restricted (f_pi(x) = f(x with pi applied))
/// and optionally negated.
class TargetFunction {
 public:
  TargetFunction(TargetFamily family, Restriction restriction = {}, bool negated = false);

  const TargetFamily& family() const noexcept { return family_; }
  const Restriction& restriction() const noexcept { return restriction_; }
  bool negated() const noexcept { return negated_; }
  std::size_t arity() const noexcept { return arity_; }

  /// Throws Error(arity_mismatch) if input.size() != arity().
  std::uint8_t eval(std::span<const std::uint8_t> input) const;

  /// (f_pi)_extra. Coordinates already fixed by pi keep their value.
  TargetFunction restricted(const Restriction& extra) const;
  TargetFunction negation() const;

  VariableClass variable_class(std::size_t var) const;
  bool is_addressing() const noexcept;
  /// Address width for addressing families, 0 otherwise.
  std::size_t address_width() const noexcept;
  /// Index of the memory bit with the given address (addressing families only).
  std::size_t memory_index(std::size_t address) const;
  std::size_t addressing_bits() const noexcept;

  friend bool operator==(const TargetFunction&, const TargetFunction&) = default;

 private:
  TargetFamily family_;
  Restriction restriction_;
  bool negated_;
  std::size_t arity_;
};

// ---- expectation oracles --------------------------------------------------
// Every oracle takes a per-coordinate law (biases with optional point masses).
// The target's own restriction is applied on top of it.

constexpr std::size_t kBruteForceCap = 24;

/// Exact law of z(x) as a vector indexed by address. Throws
/// Error(invalid_argument) for non-addressing targets.
std::vector<double> address_pmf(const TargetFunction& f, std::span<const double> probs);
std::vector<double> address_pmf(const TargetFunction& f, const ProductDistribution& d, const Restriction& pi);

/// E[f] under the given law.
double expectation(const TargetFunction& f, std::span<const double> probs);
double expectation(const TargetFunction& f, const ProductDistribution& d, const Restriction& pi);

/// E[f] together with E[f | x_i = 0] and E[f | x_i = 1] for every coordinate.
struct SplitMeans {
  double mean;
  std::vector<std::array<double, 2>> given;
};
SplitMeans split_means(const TargetFunction& f, std::span<const double> probs);

/// Enumerates every assignment of the non-point-mass coordinates. Throws
/// Error(unsupported_target) beyond kBruteForceCap free coordinates.
double brute_force_expectation(const TargetFunction& f, std::span<const double> probs);

// ---- agnostic construction --------------------------------------------------

struct AgnosticPartition {
  std::size_t k;
  double epsilon;
  std::vector<std::size_t> a0;
  std::vector<std::size_t> a1;
  std::vector<std::size_t> afree;
};

struct AgnosticInstance {
  Restriction restriction;
  AgnosticPartition partition;
  TargetFunction restricted_target;
  TargetFunction junta;
};

/// Largest |A_free| in [eps 2^{k-2}, eps 2^{k-1}] leaving an even complement
/// with nonempty A0 and A1. Throws Error(infeasible_epsilon) when none exists.
std::size_t agnostic_free_size(std::size_t k, double epsilon);

/// Memory bits on A0 fixed to 0, on A1 fixed to 1, A_free left free.
/// Without a seed, addresses are taken in lexicographic order: A_free is the
/// leading block, then A0, then A1. With a seed the addresses are shuffled
/// first.
AgnosticInstance make_agnostic_restriction(const CodedAddressing& base, double epsilon,
                                           std::optional<std::uint64_t> seed = std::nullopt);

/// Pr_D[f != g]. Exact through address conditioning when both targets read the
/// same address map; otherwise by enumeration within kBruteForceCap.
double junta_distance(const TargetFunction& f, const TargetFunction& g, const ProductDistribution& d);

}  // namespace treelb
