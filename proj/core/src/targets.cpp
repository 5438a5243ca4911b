#include "treelb/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "treelb/error.hpp"
#include "treelb/random.hpp"

namespace treelb {
namespace {

constexpr std::size_t kMaxAddressWidth = 24;

void check_arity(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw Error(ErrorCode::arity_mismatch,
                "expected " + std::to_string(expected) + " input bits, got " + std::to_string(got));
  }
}

bool is_point_mass(double p) { return p == 0.0 || p == 1.0; }

// Address of z with z_0 as the most significant bit.
std::size_t pack_address(const std::vector<std::uint8_t>& z) {
  std::size_t a = 0;
  for (std::uint8_t bit : z) a = (a << 1) | bit;
  return a;
}

std::size_t coded_address(const SetFamily& sets, std::span<const std::uint8_t> x) {
  std::size_t a = 0;
  for (const auto& s : sets.sets()) {
    std::uint8_t parity = 0;
    for (auto e = s.find_first(); e != BitSet::npos; e = s.find_next(e)) parity ^= x[e];
    a = (a << 1) | parity;
  }
  return a;
}

void walsh_hadamard(std::vector<double>& v) {
  for (std::size_t len = 1; len < v.size(); len <<= 1) {
    for (std::size_t block = 0; block < v.size(); block += 2 * len) {
      for (std::size_t j = block; j < block + len; ++j) {
        const double u = v[j];
        const double w = v[j + len];
        v[j] = u + w;
        v[j + len] = u - w;
      }
    }
  }
}

// ---- coded address law via characters -----------------------------------
//
// With phi_t = 1 - 2 q_t and S_I the symmetric difference of the sets in I,
// E[prod_{i in I} (1 - 2 z_i)] = prod_{t in S_I} phi_t =: F(I), and
// Pr[z = a] = 2^{-k} sum_I (-1)^{|I & a|} F(I). Masks use the address
// orientation: bit k-1-i of I selects S_i.

struct CharacterTable {
  std::size_t k;
  std::vector<double> correlation;            // F(I)
  std::vector<std::vector<std::size_t>> support;  // S_I, filled on request
};

std::uint64_t set_bit_for(std::size_t k, std::size_t i) { return std::uint64_t{1} << (k - 1 - i); }

CharacterTable character_table(const SetFamily& sets, std::span<const double> q, bool keep_support) {
  const std::size_t k = sets.k();
  if (k > kMaxAddressWidth) throw Error(ErrorCode::unsupported_target, "address width above 24");
  const std::size_t size = std::size_t{1} << k;
  CharacterTable table{k, std::vector<double>(size, 1.0), {}};
  if (keep_support) table.support.resize(size);

  BitSet acc(sets.ground());
  std::uint64_t mask = 0;
  for (std::uint64_t step = 1; step < size; ++step) {
    const auto flip = static_cast<std::size_t>(std::countr_zero(step));
    // Gray-code step toggles the set whose address bit is `flip`.
    const std::size_t set_index = k - 1 - flip;
    acc ^= sets.set(set_index);
    mask ^= set_bit_for(k, set_index);
    double product = 1.0;
    std::vector<std::size_t> members;
    for (auto e = acc.find_first(); e != BitSet::npos; e = acc.find_next(e)) {
      product *= 1.0 - 2.0 * q[e];
      if (keep_support) members.push_back(e);
    }
    table.correlation[mask] = product;
    if (keep_support) table.support[mask] = std::move(members);
  }
  return table;
}

std::vector<double> pmf_from_correlations(const std::vector<double>& correlation) {
  std::vector<double> pmf = correlation;
  walsh_hadamard(pmf);
  const double scale = 1.0 / static_cast<double>(pmf.size());
  for (double& p : pmf) p = std::max(0.0, p * scale);
  return pmf;
}

std::vector<double> coded_pmf(const SetFamily& sets, std::span<const double> q) {
  return pmf_from_correlations(character_table(sets, q, false).correlation);
}

// Split means for a target whose value given z = a is a Bernoulli(m_a) that is
// independent of x. Memory coordinates (if any) are handled by the caller.
struct AddressSplit {
  double mean;
  std::vector<double> pmf;
  std::vector<std::array<double, 2>> addressing;  // per addressing bit
};

AddressSplit coded_split(const SetFamily& sets, std::span<const double> q, const std::vector<double>& m) {
  const CharacterTable table = character_table(sets, q, true);
  AddressSplit out;
  out.pmf = pmf_from_correlations(table.correlation);

  std::vector<double> m_hat = m;
  walsh_hadamard(m_hat);
  const double scale = 1.0 / static_cast<double>(m_hat.size());
  for (double& v : m_hat) v *= scale;

  out.mean = 0.0;
  for (std::size_t mask = 0; mask < m_hat.size(); ++mask) out.mean += table.correlation[mask] * m_hat[mask];

  const std::size_t n = sets.ground();
  std::vector<double> with_full(n, 0.0);
  std::vector<double> with_loo(n, 0.0);
  std::vector<double> prefix;
  for (std::size_t mask = 1; mask < m_hat.size(); ++mask) {
    const auto& members = table.support[mask];
    if (members.empty() || m_hat[mask] == 0.0) continue;
    prefix.assign(members.size() + 1, 1.0);
    for (std::size_t t = 0; t < members.size(); ++t) prefix[t + 1] = prefix[t] * (1.0 - 2.0 * q[members[t]]);
    double suffix = 1.0;
    for (std::size_t t = members.size(); t-- > 0;) {
      const std::size_t e = members[t];
      with_loo[e] += prefix[t] * suffix * m_hat[mask];
      with_full[e] += table.correlation[mask] * m_hat[mask];
      suffix *= 1.0 - 2.0 * q[e];
    }
  }
  out.addressing.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    const double base = out.mean - with_full[e];
    out.addressing[e] = {base + with_loo[e], base - with_loo[e]};
  }
  return out;
}

// ---- disjoint parity groups: independent address bits ---------------------

std::vector<double> group_one_probs(const DisjointParityAddressing& f, std::span<const double> q) {
  std::vector<double> r(f.k());
  for (std::size_t i = 0; i < f.k(); ++i) r[i] = xor_bias(q.subspan(f.addressing_index(i, 0), f.group_size()));
  return r;
}

std::vector<double> product_pmf(const std::vector<double>& r) {
  const std::size_t k = r.size();
  std::vector<double> pmf(std::size_t{1} << k);
  for (std::size_t a = 0; a < pmf.size(); ++a) {
    double p = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      const bool bit = (a >> (k - 1 - i)) & 1u;
      p *= bit ? r[i] : 1.0 - r[i];
    }
    pmf[a] = p;
  }
  return pmf;
}

std::vector<double> memory_means(std::size_t offset, std::size_t count, std::span<const double> q) {
  return {q.begin() + static_cast<std::ptrdiff_t>(offset), q.begin() + static_cast<std::ptrdiff_t>(offset + count)};
}

SplitMeans disjoint_split(const DisjointParityAddressing& f, std::span<const double> q) {
  const std::size_t k = f.k();
  const std::vector<double> r = group_one_probs(f, q);
  const std::vector<double> pmf = product_pmf(r);
  const std::vector<double> m = memory_means(f.addressing_bits(), f.memory_bits(), q);

  SplitMeans out;
  out.mean = std::inner_product(pmf.begin(), pmf.end(), m.begin(), 0.0);
  out.given.resize(f.arity());

  for (std::size_t i = 0; i < k; ++i) {
    // A[v] = sum over a with a_i = v of m_a times the law of the other bits.
    double with_bit[2] = {0.0, 0.0};
    for (std::size_t a = 0; a < pmf.size(); ++a) {
      double w = m[a];
      for (std::size_t t = 0; t < k; ++t) {
        if (t == i) continue;
        const bool bit = (a >> (k - 1 - t)) & 1u;
        w *= bit ? r[t] : 1.0 - r[t];
      }
      with_bit[(a >> (k - 1 - i)) & 1u] += w;
    }
    const std::size_t start = f.addressing_index(i, 0);
    const std::size_t size = f.group_size();
    std::vector<double> prefix(size + 1, 1.0);
    for (std::size_t j = 0; j < size; ++j) prefix[j + 1] = prefix[j] * (1.0 - 2.0 * q[start + j]);
    double suffix = 1.0;
    for (std::size_t j = size; j-- > 0;) {
      const double rest = prefix[j] * suffix;
      for (std::uint8_t b = 0; b < 2; ++b) {
        const double one = 0.5 * (1.0 - (b ? -rest : rest));
        out.given[start + j][b] = one * with_bit[1] + (1.0 - one) * with_bit[0];
      }
      suffix *= 1.0 - 2.0 * q[start + j];
    }
  }
  for (std::size_t a = 0; a < pmf.size(); ++a) {
    for (std::uint8_t b = 0; b < 2; ++b) out.given[f.memory_index(a)][b] = out.mean + pmf[a] * (b - m[a]);
  }
  return out;
}

// ---- truth tables -----------------------------------------------------------

double fold_table(const TruthTableJunta& f, std::span<const double> q, std::size_t override_var,
                  double override_value) {
  std::vector<double> vals(f.table().begin(), f.table().end());
  std::size_t len = vals.size();
  for (std::size_t t = 0; t < f.vars().size(); ++t) {
    const double p = t == override_var ? override_value : q[f.vars()[t]];
    len /= 2;
    for (std::size_t idx = 0; idx < len; ++idx) vals[idx] = (1.0 - p) * vals[2 * idx] + p * vals[2 * idx + 1];
  }
  return vals[0];
}

constexpr std::size_t kNoOverride = static_cast<std::size_t>(-1);

SplitMeans table_split(const TruthTableJunta& f, std::span<const double> q) {
  SplitMeans out;
  out.mean = fold_table(f, q, kNoOverride, 0.0);
  out.given.assign(f.arity(), {out.mean, out.mean});
  for (std::size_t t = 0; t < f.vars().size(); ++t) {
    out.given[f.vars()[t]] = {fold_table(f, q, t, 0.0), fold_table(f, q, t, 1.0)};
  }
  return out;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<double> effective_law(const TargetFunction& f, std::span<const double> probs) {
  check_arity(f.arity(), probs.size());
  std::vector<double> q(probs.begin(), probs.end());
  f.restriction().apply(std::span<double>(q));
  return q;
}

SplitMeans family_split(const TargetFamily& family, std::span<const double> q) {
  return std::visit(
      Overloaded{
          [&](const TruthTableJunta& t) { return table_split(t, q); },
          [&](const DisjointParityAddressing& t) { return disjoint_split(t, q); },
          [&](const CodedAddressing& t) {
            const std::vector<double> m = memory_means(t.addressing_bits(), t.memory_bits(), q);
            AddressSplit split = coded_split(t.sets(), q, m);
            SplitMeans out{split.mean, std::move(split.addressing)};
            out.given.resize(t.arity());
            for (std::size_t a = 0; a < t.memory_bits(); ++a) {
              for (std::uint8_t b = 0; b < 2; ++b) {
                out.given[t.memory_index(a)][b] = split.mean + split.pmf[a] * (b - m[a]);
              }
            }
            return out;
          },
          [&](const AddressJunta& t) {
            const std::vector<double> m(t.accept().begin(), t.accept().end());
            AddressSplit split = coded_split(t.sets(), q, m);
            SplitMeans out{split.mean, std::move(split.addressing)};
            out.given.resize(t.arity(), {split.mean, split.mean});
            return out;
          },
      },
      family);
}

double family_expectation(const TargetFamily& family, std::span<const double> q) {
  return std::visit(Overloaded{
                        [&](const TruthTableJunta& t) { return fold_table(t, q, kNoOverride, 0.0); },
                        [&](const DisjointParityAddressing& t) {
                          const auto pmf = product_pmf(group_one_probs(t, q));
                          const auto m = memory_means(t.addressing_bits(), t.memory_bits(), q);
                          return std::inner_product(pmf.begin(), pmf.end(), m.begin(), 0.0);
                        },
                        [&](const CodedAddressing& t) {
                          const auto pmf = coded_pmf(t.sets(), q);
                          const auto m = memory_means(t.addressing_bits(), t.memory_bits(), q);
                          return std::inner_product(pmf.begin(), pmf.end(), m.begin(), 0.0);
                        },
                        [&](const AddressJunta& t) {
                          const auto pmf = coded_pmf(t.sets(), q);
                          double e = 0.0;
                          for (std::size_t a = 0; a < pmf.size(); ++a) e += t.accept()[a] ? pmf[a] : 0.0;
                          return e;
                        },
                    },
                    family);
}

}  // namespace

// ---- families -----------------------------------------------------------------

TruthTableJunta::TruthTableJunta(std::size_t arity, std::vector<std::size_t> vars, std::vector<std::uint8_t> table)
    : arity_(arity), vars_(std::move(vars)), table_(std::move(table)) {
  if (vars_.size() > kBruteForceCap) throw Error(ErrorCode::unsupported_target, "truth table over more than 24 vars");
  if (table_.size() != (std::size_t{1} << vars_.size())) {
    throw Error(ErrorCode::invalid_argument, "truth table size must be 2^|vars|");
  }
  std::vector<std::size_t> sorted = vars_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::invalid_argument, "truth table variables must be distinct");
  }
  for (std::size_t v : vars_) {
    if (v >= arity_) throw Error(ErrorCode::invalid_argument, "truth table variable outside arity");
  }
  for (auto& bit : table_) {
    if (bit > 1) throw Error(ErrorCode::invalid_argument, "truth table entries must be bits");
  }
}

TruthTableJunta TruthTableJunta::dictator(std::size_t arity, std::size_t var) { return {arity, {var}, {0, 1}}; }

TruthTableJunta TruthTableJunta::parity(std::size_t arity, std::vector<std::size_t> vars) {
  std::vector<std::uint8_t> table(std::size_t{1} << vars.size());
  for (std::size_t idx = 0; idx < table.size(); ++idx) table[idx] = std::popcount(idx) & 1u;
  return {arity, std::move(vars), std::move(table)};
}

TruthTableJunta TruthTableJunta::constant(std::size_t arity, std::uint8_t value) { return {arity, {}, {value}}; }

TruthTableJunta TruthTableJunta::random(std::size_t arity, std::vector<std::size_t> vars, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  std::vector<std::uint8_t> table(std::size_t{1} << vars.size());
  for (auto& bit : table) bit = static_cast<std::uint8_t>(rng.next() >> 63);
  return {arity, std::move(vars), std::move(table)};
}

std::uint8_t TruthTableJunta::eval(std::span<const std::uint8_t> x) const {
  check_arity(arity_, x.size());
  std::size_t idx = 0;
  for (std::size_t t = 0; t < vars_.size(); ++t) idx |= static_cast<std::size_t>(x[vars_[t]]) << t;
  return table_[idx];
}

DisjointParityAddressing::DisjointParityAddressing(std::size_t c, std::size_t k) : c_(c), k_(k) {
  if (c == 0 || k == 0) throw Error(ErrorCode::invalid_argument, "c and k must be positive");
  if (k > kMaxAddressWidth) throw Error(ErrorCode::unsupported_target, "address width above 24");
}

std::size_t DisjointParityAddressing::address_of(std::span<const std::uint8_t> x) const {
  std::vector<std::uint8_t> z(k_, 0);
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < group_size(); ++j) z[i] ^= x[addressing_index(i, j)];
  }
  return pack_address(z);
}

std::uint8_t DisjointParityAddressing::eval(std::span<const std::uint8_t> x) const {
  check_arity(arity(), x.size());
  return x[memory_index(address_of(x))];
}

SetFamily DisjointParityAddressing::as_set_family() const { return SetFamily::disjoint_blocks(k_, group_size()); }

CodedAddressing::CodedAddressing(SetFamily sets) : sets_(std::move(sets)) {
  if (sets_.k() > kMaxAddressWidth) throw Error(ErrorCode::unsupported_target, "address width above 24");
}

std::size_t CodedAddressing::address_of(std::span<const std::uint8_t> x) const { return coded_address(sets_, x); }

std::uint8_t CodedAddressing::eval(std::span<const std::uint8_t> x) const {
  check_arity(arity(), x.size());
  return x[memory_index(address_of(x))];
}

AddressJunta::AddressJunta(SetFamily sets, std::vector<std::uint8_t> accept)
    : sets_(std::move(sets)), accept_(std::move(accept)) {
  if (sets_.k() > kMaxAddressWidth) throw Error(ErrorCode::unsupported_target, "address width above 24");
  if (accept_.size() != (std::size_t{1} << sets_.k())) {
    throw Error(ErrorCode::invalid_argument, "accept table must have one entry per address");
  }
}

std::uint8_t AddressJunta::eval(std::span<const std::uint8_t> x) const {
  check_arity(arity(), x.size());
  return accept_[coded_address(sets_, x)];
}

// ---- TargetFunction -------------------------------------------------------------

TargetFunction::TargetFunction(TargetFamily family, Restriction restriction, bool negated)
    : family_(std::move(family)), restriction_(std::move(restriction)), negated_(negated) {
  arity_ = std::visit([](const auto& t) { return t.arity(); }, family_);
  if (!restriction_.empty() && restriction_.max_index() >= arity_) {
    throw Error(ErrorCode::invalid_argument, "restriction index outside target arity");
  }
}

std::uint8_t TargetFunction::eval(std::span<const std::uint8_t> input) const {
  check_arity(arity_, input.size());
  std::uint8_t value;
  if (restriction_.empty()) {
    value = std::visit([&](const auto& t) { return t.eval(input); }, family_);
  } else {
    BitString x(input.begin(), input.end());
    restriction_.apply(std::span<std::uint8_t>(x));
    value = std::visit([&](const auto& t) { return t.eval(x); }, family_);
  }
  return negated_ ? value ^ 1u : value;
}

TargetFunction TargetFunction::restricted(const Restriction& extra) const {
  return TargetFunction(family_, extra.overridden_by(restriction_), negated_);
}

TargetFunction TargetFunction::negation() const { return TargetFunction(family_, restriction_, !negated_); }

bool TargetFunction::is_addressing() const noexcept {
  return !std::holds_alternative<TruthTableJunta>(family_);
}

std::size_t TargetFunction::address_width() const noexcept {
  return std::visit(Overloaded{
                        [](const TruthTableJunta&) -> std::size_t { return 0; },
                        [](const auto& t) -> std::size_t { return t.k(); },
                    },
                    family_);
}

std::size_t TargetFunction::addressing_bits() const noexcept {
  return std::visit(Overloaded{
                        [](const TruthTableJunta&) -> std::size_t { return 0; },
                        [](const auto& t) -> std::size_t { return t.addressing_bits(); },
                    },
                    family_);
}

std::size_t TargetFunction::memory_index(std::size_t address) const {
  if (!is_addressing()) throw Error(ErrorCode::invalid_argument, "target has no memory bits");
  return addressing_bits() + address;
}

VariableClass TargetFunction::variable_class(std::size_t var) const {
  if (!is_addressing()) return VariableClass::other;
  return var < addressing_bits() ? VariableClass::addressing : VariableClass::memory;
}

// ---- oracles --------------------------------------------------------------------

std::vector<double> address_pmf(const TargetFunction& f, std::span<const double> probs) {
  const std::vector<double> q = effective_law(f, probs);
  return std::visit(Overloaded{
                        [](const TruthTableJunta&) -> std::vector<double> {
                          throw Error(ErrorCode::invalid_argument, "address_pmf needs an addressing target");
                        },
                        [&](const DisjointParityAddressing& t) { return product_pmf(group_one_probs(t, q)); },
                        [&](const CodedAddressing& t) { return coded_pmf(t.sets(), q); },
                        [&](const AddressJunta& t) { return coded_pmf(t.sets(), q); },
                    },
                    f.family());
}

std::vector<double> address_pmf(const TargetFunction& f, const ProductDistribution& d, const Restriction& pi) {
  return address_pmf(f, d.condition(pi).probs());
}

double expectation(const TargetFunction& f, std::span<const double> probs) {
  const std::vector<double> q = effective_law(f, probs);
  const double e = family_expectation(f.family(), q);
  return f.negated() ? 1.0 - e : e;
}

double expectation(const TargetFunction& f, const ProductDistribution& d, const Restriction& pi) {
  return expectation(f, d.condition(pi).probs());
}

SplitMeans split_means(const TargetFunction& f, std::span<const double> probs) {
  const std::vector<double> q = effective_law(f, probs);
  SplitMeans out = family_split(f.family(), q);
  for (const auto& [var, bit] : f.restriction()) out.given[var] = {out.mean, out.mean};
  if (f.negated()) {
    out.mean = 1.0 - out.mean;
    for (auto& g : out.given) g = {1.0 - g[0], 1.0 - g[1]};
  }
  return out;
}

namespace {

template <class Visit>
void enumerate_free(std::span<const double> q, const std::vector<std::size_t>& free, std::size_t depth,
                    double weight, BitString& x, Visit&& visit) {
  if (depth == free.size()) {
    visit(x, weight);
    return;
  }
  const std::size_t var = free[depth];
  x[var] = 0;
  enumerate_free(q, free, depth + 1, weight * (1.0 - q[var]), x, visit);
  x[var] = 1;
  enumerate_free(q, free, depth + 1, weight * q[var], x, visit);
}

std::vector<std::size_t> free_coordinates(std::span<const double> q) {
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!is_point_mass(q[i])) free.push_back(i);
  }
  if (free.size() > kBruteForceCap) {
    throw Error(ErrorCode::unsupported_target,
                "enumeration over " + std::to_string(free.size()) + " free bits exceeds the cap of 24");
  }
  return free;
}

BitString fixed_part(std::span<const double> q) {
  BitString x(q.size(), 0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 1.0) x[i] = 1;
  }
  return x;
}

}  // namespace

double brute_force_expectation(const TargetFunction& f, std::span<const double> probs) {
  const std::vector<double> q = effective_law(f, probs);
  const auto free = free_coordinates(q);
  BitString x = fixed_part(q);
  double total = 0.0;
  enumerate_free(q, free, 0, 1.0, x, [&](const BitString& input, double w) { total += w * f.eval(input); });
  return total;
}

// ---- agnostic construction ------------------------------------------------------

std::size_t agnostic_free_size(std::size_t k, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::infeasible_epsilon, "epsilon must lie in (0, 1]");
  if (k == 0 || k > kMaxAddressWidth) throw Error(ErrorCode::infeasible_epsilon, "k outside supported range");
  const double total = std::ldexp(1.0, static_cast<int>(k));
  const double lo = epsilon * total / 4.0;
  const double hi = epsilon * total / 2.0;
  if (lo < 1.0 - 1e-12) {
    throw Error(ErrorCode::infeasible_epsilon, "epsilon * 2^(k-2) must be at least 1");
  }
  const auto addresses = std::size_t{1} << k;
  const auto smallest = static_cast<std::size_t>(std::ceil(lo - 1e-9));
  for (auto size = static_cast<std::size_t>(std::floor(hi + 1e-9)); size >= smallest && size > 0; --size) {
    const std::size_t rest = addresses - size;
    if (rest % 2 == 0 && rest >= 2) return size;
  }
  throw Error(ErrorCode::infeasible_epsilon, "no free-set size fits the band with |A0| = |A1| >= 1");
}

AgnosticInstance make_agnostic_restriction(const CodedAddressing& base, double epsilon,
                                           std::optional<std::uint64_t> seed) {
  const std::size_t k = base.k();
  const std::size_t free_size = agnostic_free_size(k, epsilon);
  const std::size_t addresses = std::size_t{1} << k;
  std::vector<std::size_t> order(addresses);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (seed) {
    Rng rng(derive_seed(*seed, 0));
    for (std::size_t i = addresses; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }
  const std::size_t half = (addresses - free_size) / 2;
  AgnosticPartition partition{k, epsilon, {}, {}, {}};
  partition.afree.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(free_size));
  partition.a0.assign(order.begin() + static_cast<std::ptrdiff_t>(free_size),
                      order.begin() + static_cast<std::ptrdiff_t>(free_size + half));
  partition.a1.assign(order.begin() + static_cast<std::ptrdiff_t>(free_size + half), order.end());
  for (auto* part : {&partition.afree, &partition.a0, &partition.a1}) std::sort(part->begin(), part->end());

  std::vector<std::uint8_t> value(addresses, 2);
  for (std::size_t a : partition.a0) value[a] = 0;
  for (std::size_t a : partition.a1) value[a] = 1;
  Restriction pi;
  std::vector<std::uint8_t> accept(addresses, 0);
  for (std::size_t a = 0; a < addresses; ++a) {
    if (value[a] != 2) pi.fix(base.memory_index(a), value[a]);
    accept[a] = value[a] == 1 ? 1 : 0;
  }
  TargetFunction restricted(base, pi);
  TargetFunction junta(AddressJunta(base.sets(), std::move(accept)));
  return {std::move(pi), std::move(partition), std::move(restricted), std::move(junta)};
}

namespace {

// What an addressing-style target outputs once the address is known: either
// a constant, or the memory bit at that address (possibly negated).
struct AddressResponse {
  SetFamily sets;
  std::vector<std::int8_t> constant;  // -1 when the output is the memory bit
  bool memory_negated;
  std::size_t memory_offset;
};

std::optional<AddressResponse> address_response(const TargetFunction& f) {
  if (!f.is_addressing()) return std::nullopt;
  for (const auto& [var, bit] : f.restriction()) {
    if (var < f.addressing_bits()) return std::nullopt;
  }
  const std::size_t addresses = std::size_t{1} << f.address_width();
  return std::visit(
      Overloaded{
          [](const TruthTableJunta&) -> std::optional<AddressResponse> { return std::nullopt; },
          [&](const AddressJunta& t) -> std::optional<AddressResponse> {
            std::vector<std::int8_t> constant(addresses);
            for (std::size_t a = 0; a < addresses; ++a) {
              constant[a] = static_cast<std::int8_t>(t.accept()[a] ^ (f.negated() ? 1 : 0));
            }
            return AddressResponse{t.sets(), std::move(constant), f.negated(), t.addressing_bits()};
          },
          [&](const auto& t) -> std::optional<AddressResponse> {
            SetFamily sets = [&] {
              if constexpr (std::is_same_v<std::decay_t<decltype(t)>, DisjointParityAddressing>) {
                return t.as_set_family();
              } else {
                return t.sets();
              }
            }();
            std::vector<std::int8_t> constant(addresses, -1);
            for (const auto& [var, bit] : f.restriction()) {
              constant[var - t.addressing_bits()] = static_cast<std::int8_t>(bit ^ (f.negated() ? 1 : 0));
            }
            return AddressResponse{std::move(sets), std::move(constant), f.negated(), t.addressing_bits()};
          },
      },
      f.family());
}

}  // namespace

double junta_distance(const TargetFunction& f, const TargetFunction& g, const ProductDistribution& d) {
  check_arity(f.arity(), g.arity());
  check_arity(f.arity(), d.size());
  if (f == g) return 0.0;
  if (f == g.negation()) return 1.0;

  const auto rf = address_response(f);
  const auto rg = address_response(g);
  if (rf && rg && rf->sets == rg->sets && rf->memory_offset == rg->memory_offset) {
    const std::vector<double> pmf = coded_pmf(rf->sets, d.biases());
    double total = 0.0;
    for (std::size_t a = 0; a < pmf.size(); ++a) {
      const double p1 = d.bias(rf->memory_offset + a);
      const auto one_prob = [&](const AddressResponse& r) {
        if (r.constant[a] >= 0) return static_cast<double>(r.constant[a]);
        return r.memory_negated ? 1.0 - p1 : p1;
      };
      const double pf = one_prob(*rf);
      const double pg = one_prob(*rg);
      double disagree;
      if (rf->constant[a] < 0 && rg->constant[a] < 0) {
        disagree = rf->memory_negated == rg->memory_negated ? 0.0 : 1.0;
      } else {
        // At least one side is constant, so the two outputs are independent.
        disagree = pf * (1.0 - pg) + pg * (1.0 - pf);
      }
      total += pmf[a] * disagree;
    }
    return total;
  }

  const std::span<const double> q = d.biases();
  const auto free = free_coordinates(q);
  BitString x = fixed_part(q);
  double total = 0.0;
  enumerate_free(q, free, 0, 1.0, x, [&](const BitString& input, double w) {
    if (f.eval(input) != g.eval(input)) total += w;
  });
  return total;
}

}  // namespace treelb
