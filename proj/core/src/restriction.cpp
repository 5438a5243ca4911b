#include "treelb/restriction.hpp"

#include <algorithm>
#include <string>

#include "treelb/error.hpp"

namespace treelb {

Restriction::Restriction(std::vector<Assignment> assignments) {
  assignments_.reserve(assignments.size());
  for (const auto& [var, bit] : assignments) fix(var, bit);
}

void Restriction::fix(std::size_t var, std::uint8_t bit) {
  if (contains(var)) {
    throw Error(ErrorCode::conflicting_restriction, "variable " + std::to_string(var) + " is fixed twice");
  }
  if (bit > 1) throw Error(ErrorCode::invalid_argument, "restriction bit must be 0 or 1");
  assignments_.emplace_back(var, bit);
}

bool Restriction::contains(std::size_t var) const noexcept { return value_of(var).has_value(); }

std::optional<std::uint8_t> Restriction::value_of(std::size_t var) const noexcept {
  for (const auto& [v, b] : assignments_) {
    if (v == var) return b;
  }
  return std::nullopt;
}

std::size_t Restriction::max_index() const noexcept {
  std::size_t m = 0;
  for (const auto& a : assignments_) m = std::max(m, a.first);
  return m;
}

void Restriction::apply(std::span<std::uint8_t> bits) const {
  for (const auto& [v, b] : assignments_) bits[v] = b;
}

void Restriction::apply(std::span<double> probs) const {
  for (const auto& [v, b] : assignments_) probs[v] = b;
}

Restriction Restriction::overridden_by(const Restriction& other) const {
  Restriction out;
  out.assignments_.reserve(size() + other.size());
  for (const auto& a : assignments_) {
    if (!other.contains(a.first)) out.assignments_.push_back(a);
  }
  for (const auto& a : other.assignments_) out.assignments_.push_back(a);
  return out;
}

}  // namespace treelb
