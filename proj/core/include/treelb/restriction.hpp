#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace treelb {

/// A partial assignment "x_i = b" with every index appearing at most once.
/// Assignments keep insertion order, which is the root-to-node order when the
/// restriction comes from a tree path.
class Restriction {
 public:
  using Assignment = std::pair<std::size_t, std::uint8_t>;

  Restriction() = default;
  /// Throws Error(conflicting_restriction) on a repeated index.
  explicit Restriction(std::vector<Assignment> assignments);

  /// Throws Error(conflicting_restriction) if var is already fixed.
  void fix(std::size_t var, std::uint8_t bit);

  std::size_t size() const noexcept { return assignments_.size(); }
  bool empty() const noexcept { return assignments_.empty(); }
  std::span<const Assignment> assignments() const noexcept { return assignments_; }
  auto begin() const noexcept { return assignments_.begin(); }
  auto end() const noexcept { return assignments_.end(); }

  bool contains(std::size_t var) const noexcept;
  std::optional<std::uint8_t> value_of(std::size_t var) const noexcept;
  std::size_t max_index() const noexcept;

  /// Overwrites the listed coordinates of `bits` in place.
  void apply(std::span<std::uint8_t> bits) const;
  /// Overwrites the listed coordinates of a probability vector with point masses.
  void apply(std::span<double> probs) const;

  /// (this then other): coordinates fixed by `other` override this one.
  Restriction overridden_by(const Restriction& other) const;

  friend bool operator==(const Restriction&, const Restriction&) = default;

 private:
  std::vector<Assignment> assignments_;
};

}  // namespace treelb
