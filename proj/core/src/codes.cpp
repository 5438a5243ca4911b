#include "treelb/codes.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "treelb/error.hpp"
#include "treelb/random.hpp"

namespace treelb {

SetFamily::SetFamily(std::size_t ground, std::vector<BitSet> sets) : ground_(ground), sets_(std::move(sets)) {
  if (sets_.empty()) throw Error(ErrorCode::invalid_argument, "set family needs at least one set");
  for (const auto& s : sets_) {
    if (s.size() != ground_) throw Error(ErrorCode::invalid_argument, "set size differs from ground size");
  }
}

SetFamily SetFamily::from_indices(std::size_t ground, const std::vector<std::vector<std::size_t>>& sets) {
  std::vector<BitSet> bits;
  bits.reserve(sets.size());
  for (const auto& members : sets) {
    BitSet b(ground);
    for (std::size_t e : members) {
      if (e >= ground) {
        throw Error(ErrorCode::invalid_argument,
                    "element " + std::to_string(e) + " outside ground set of size " + std::to_string(ground));
      }
      b.set(e);
    }
    bits.push_back(std::move(b));
  }
  return SetFamily(ground, std::move(bits));
}

SetFamily SetFamily::disjoint_blocks(std::size_t k, std::size_t block) {
  std::vector<BitSet> bits(k, BitSet(k * block));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < block; ++j) bits[i].set(i * block + j);
  }
  return SetFamily(k * block, std::move(bits));
}

std::vector<std::vector<std::size_t>> SetFamily::to_indices() const {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(sets_.size());
  for (const auto& s : sets_) {
    std::vector<std::size_t> members;
    for (auto e = s.find_first(); e != BitSet::npos; e = s.find_next(e)) members.push_back(e);
    out.push_back(std::move(members));
  }
  return out;
}

BitSet SetFamily::symmetric_difference(std::uint64_t mask) const {
  BitSet acc(ground_);
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    if ((mask >> i) & 1u) acc ^= sets_[i];
  }
  return acc;
}

namespace {

void check_k(const SetFamily& s) {
  if (s.k() > kMaxDistanceK) {
    throw Error(ErrorCode::too_large_k, "distance enumeration supports k <= 20, got " + std::to_string(s.k()));
  }
}

// Minimum weight over the nonzero span, stopping early once it drops below
// `floor` (pass 0 to disable).
std::size_t gray_min_weight(const std::vector<BitSet>& rows, std::size_t ground, std::size_t floor) {
  const std::size_t k = rows.size();
  BitSet acc(ground);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::uint64_t step = 1; step < (std::uint64_t{1} << k); ++step) {
    const auto flip = static_cast<std::size_t>(std::countr_zero(step));
    acc ^= rows[flip];
    const std::size_t w = acc.count();
    if (w < best) {
      best = w;
      if (best < floor) return best;
    }
  }
  return best;
}

}  // namespace

std::size_t distance(const SetFamily& s) {
  check_k(s);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << s.k()); ++mask) {
    best = std::min(best, s.symmetric_difference(mask).count());
  }
  return best;
}

std::size_t min_codeword_weight_gray(const SetFamily& s) {
  check_k(s);
  return gray_min_weight(s.sets(), s.ground(), 0);
}

namespace {

BitSet random_row(Rng& rng, std::size_t n) {
  BitSet row(n);
  for (std::size_t e = 0; e < n; ++e) {
    if (rng.next() >> 63) row.set(e);
  }
  return row;
}

std::optional<SetFamily> try_random_matrices(std::size_t k, std::size_t n, std::size_t d, Rng& rng,
                                             std::uint64_t trials, std::uint64_t& used) {
  for (std::uint64_t t = 0; t < trials; ++t) {
    ++used;
    std::vector<BitSet> rows;
    rows.reserve(k);
    for (std::size_t i = 0; i < k; ++i) rows.push_back(random_row(rng, n));
    if (gray_min_weight(rows, n, d) >= d) return SetFamily(n, std::move(rows));
  }
  return std::nullopt;
}

// Greedy basis extension: the GV counting argument says a fresh row at
// distance >= d from the current span exists while the span's Hamming balls
// do not cover the space, and random candidates find one quickly in that
// regime.
std::optional<SetFamily> try_greedy(std::size_t k, std::size_t n, std::size_t d, Rng& rng, std::uint64_t trials,
                                    std::uint64_t& used) {
  constexpr std::uint64_t kPatience = 4000;
  std::uint64_t spent = 0;
  while (spent < trials) {
    std::vector<BitSet> rows;
    std::vector<BitSet> span{BitSet(n)};
    bool stuck = false;
    while (rows.size() < k && !stuck) {
      bool placed = false;
      for (std::uint64_t attempt = 0; attempt < kPatience && spent < trials; ++attempt) {
        ++spent;
        ++used;
        const BitSet candidate = random_row(rng, n);
        bool far = true;
        for (const auto& w : span) {
          if ((candidate ^ w).count() < d) {
            far = false;
            break;
          }
        }
        if (!far) continue;
        const std::size_t old = span.size();
        for (std::size_t t = 0; t < old; ++t) span.push_back(span[t] ^ candidate);
        rows.push_back(candidate);
        placed = true;
        break;
      }
      stuck = !placed;
    }
    if (rows.size() == k) return SetFamily(n, std::move(rows));
  }
  return std::nullopt;
}

}  // namespace

std::optional<GvSearchResult> gv_search(std::size_t k, std::size_t c, std::size_t d, std::uint64_t seed,
                                        std::uint64_t budget) {
  if (k == 0 || c == 0) throw Error(ErrorCode::invalid_argument, "k and c must be positive");
  if (k > kMaxDistanceK) throw Error(ErrorCode::too_large_k, "gv_search verifies with k <= 20");
  const std::size_t n = c * k;
  if (d > n) throw Error(ErrorCode::invalid_argument, "distance exceeds the ground size c k");

  std::optional<SetFamily> found;
  std::uint64_t used = 0;
  if (d <= c) {
    // Disjoint blocks of size c already have distance c.
    found = SetFamily::disjoint_blocks(k, c);
  } else {
    Rng rng(derive_seed(seed, 0));
    found = try_random_matrices(k, n, d, rng, std::min<std::uint64_t>(budget / 10, 1000), used);
    if (!found) found = try_greedy(k, n, d, rng, budget - used, used);
  }
  if (!found) return std::nullopt;
  const std::size_t verified = distance(*found);
  if (verified < d) return std::nullopt;
  return GvSearchResult{std::move(*found), verified, c, used};
}

std::optional<GvSearchResult> gv_search_autoscale(std::size_t k, std::size_t d, std::uint64_t seed,
                                                  std::uint64_t budget) {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be positive");
  std::size_t c = std::max<std::size_t>(1, (d + k - 1) / k);
  std::uint64_t used = 0;
  for (std::size_t level = 0; used < budget && c * k <= (std::size_t{1} << 16); ++level, c *= 2) {
    const std::uint64_t remaining = budget - used;
    const std::uint64_t share = std::max<std::uint64_t>(1, remaining / 4);
    auto result = gv_search(k, c, d, derive_seed(seed, level), share);
    if (result) {
      result->trials_used += used;
      return result;
    }
    used += share;
  }
  return std::nullopt;
}

std::size_t required_distance(std::size_t k, double delta) {
  if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1/2]");
  return static_cast<std::size_t>(std::ceil(std::log(5.0) / delta * static_cast<double>(k) - 1e-12));
}

}  // namespace treelb
