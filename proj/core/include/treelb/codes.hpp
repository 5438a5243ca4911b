#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <boost/dynamic_bitset.hpp>

namespace treelb {

using BitSet = boost::dynamic_bitset<std::uint64_t>;

/// k subsets of the ground set {0, ..., ground - 1}. Equivalently the rows of
/// a k x ground generator matrix over GF(2).
class SetFamily {
 public:
  SetFamily(std::size_t ground, std::vector<BitSet> sets);
  /// Throws Error(invalid_argument) if an element is >= ground.
  static SetFamily from_indices(std::size_t ground, const std::vector<std::vector<std::size_t>>& sets);
  /// S_i = {i c', ..., (i + 1) c' - 1} for block size c' over k c' elements.
  static SetFamily disjoint_blocks(std::size_t k, std::size_t block);

  std::size_t k() const noexcept { return sets_.size(); }
  std::size_t ground() const noexcept { return ground_; }
  const BitSet& set(std::size_t i) const { return sets_[i]; }
  const std::vector<BitSet>& sets() const noexcept { return sets_; }
  std::vector<std::vector<std::size_t>> to_indices() const;

  /// Symmetric difference of the sets selected by the bits of `mask`
  /// (bit i selects S_i).
  BitSet symmetric_difference(std::uint64_t mask) const;

  friend bool operator==(const SetFamily&, const SetFamily&) = default;

 private:
  std::size_t ground_;
  std::vector<BitSet> sets_;
};

constexpr std::size_t kMaxDistanceK = 20;

/// min over nonempty I of |xor_{i in I} S_i|, by direct enumeration of all
/// 2^k - 1 subcollections. Throws Error(too_large_k) for k > 20.
std::size_t distance(const SetFamily& s);

/// Same quantity computed as the minimum nonzero codeword weight while
/// walking the code in Gray-code order (one row xor per step).
std::size_t min_codeword_weight_gray(const SetFamily& s);

struct GvSearchResult {
  SetFamily family;
  std::size_t distance;
  std::size_t c;
  std::uint64_t trials_used;
};

/// Seeded search for k subsets of [c k] with distance >= d. Random generator
/// matrices are tried first, then greedy basis extension (a candidate row is
/// kept only if it is at distance >= d from every codeword spanned so far).
/// Every returned family has been verified with distance(). Returns nullopt
/// once `budget` candidate rows/matrices have been tried; that does not
/// certify nonexistence.
std::optional<GvSearchResult> gv_search(std::size_t k, std::size_t c, std::size_t d, std::uint64_t seed,
                                        std::uint64_t budget);

/// Starts at c = ceil(d / k) and doubles c until gv_search succeeds, sharing
/// one trial budget across all attempts.
std::optional<GvSearchResult> gv_search_autoscale(std::size_t k, std::size_t d, std::uint64_t seed,
                                                  std::uint64_t budget);

/// ceil((ln 5 / delta) * k), the distance the uniformity argument needs.
std::size_t required_distance(std::size_t k, double delta);

}  // namespace treelb
