#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "treelb/codes.hpp"
#include "treelb/distributions.hpp"
#include "treelb/error.hpp"
#include "treelb/random.hpp"
#include "treelb/targets.hpp"

using namespace treelb;

namespace {

std::vector<double> random_biases(std::size_t n, double delta, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> p(n);
  for (auto& v : p) v = rng.uniform(delta, 1.0 - delta);
  return p;
}

std::function<double(const oracle::Bits&)> as_fn(const TargetFunction& f) {
  return [&f](const oracle::Bits& x) { return static_cast<double>(f.eval(x)); };
}

}  // namespace

TEST_CASE("one-bit address") {
  const TargetFunction f(DisjointParityAddressing(1, 1));
  REQUIRE(f.arity() == 3);
  CHECK(f.eval(std::vector<std::uint8_t>{1, 0, 1}) == 1);
  CHECK(f.eval(std::vector<std::uint8_t>{1, 1, 0}) == 0);
  CHECK(f.eval(std::vector<std::uint8_t>{0, 1, 0}) == 1);
  CHECK_THROWS_AS(f.eval(std::vector<std::uint8_t>{1, 0}), Error);
}

TEST_CASE("layout of the disjoint family") {
  const DisjointParityAddressing f(3, 2);
  CHECK(f.group_size() == 6);
  CHECK(f.addressing_bits() == 12);
  CHECK(f.memory_bits() == 4);
  CHECK(f.arity() == 16);
  CHECK(f.addressing_index(1, 2) == 8);
  CHECK(f.memory_index(3) == 15);
  const TargetFunction t(f);
  CHECK(t.variable_class(11) == VariableClass::addressing);
  CHECK(t.variable_class(12) == VariableClass::memory);
  CHECK(t.address_width() == 2);
}

TEST_CASE("constant memory gives a constant function") {
  const TargetFunction f(DisjointParityAddressing(2, 2));
  Rng rng(1);
  for (std::uint8_t b : {0, 1}) {
    for (int t = 0; t < 50; ++t) {
      std::vector<std::uint8_t> x(f.arity());
      for (std::size_t i = 0; i < 8; ++i) x[i] = static_cast<std::uint8_t>(rng.below(2));
      for (std::size_t a = 0; a < 4; ++a) x[8 + a] = b;
      CHECK(f.eval(x) == b);
    }
  }
}

TEST_CASE("coded family agrees with the reference decision tree") {
  const auto s = SetFamily::from_indices(6, {{0, 1, 3}, {2, 3, 5}, {1, 4}});
  const TargetFunction f{CodedAddressing(s)};
  const auto sets = s.to_indices();
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    std::vector<std::uint8_t> x(f.arity());
    for (auto& b : x) b = static_cast<std::uint8_t>(rng.below(2));
    CHECK(f.eval(x) == oracle::addressing_value(sets, 6, x));
  }
}

TEST_CASE("disjoint family equals the coded family on disjoint blocks") {
  const std::size_t c = 2;
  const std::size_t k = 3;
  const TargetFunction a(DisjointParityAddressing(c, k));
  const TargetFunction b(CodedAddressing(SetFamily::disjoint_blocks(k, c * k)));
  REQUIRE(a.arity() == b.arity());
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    std::vector<std::uint8_t> x(a.arity());
    for (auto& bit : x) bit = static_cast<std::uint8_t>(rng.below(2));
    CHECK(a.eval(x) == b.eval(x));
  }
  const auto p = random_biases(a.arity(), 0.2, 4);
  CHECK(expectation(a, p) == doctest::Approx(expectation(b, p)).epsilon(1e-13));
}

TEST_CASE("address law") {
  SUBCASE("uniform law gives exactly uniform addresses") {
    const TargetFunction f(DisjointParityAddressing(1, 3));
    const auto pmf = address_pmf(f, ProductDistribution::uniform(f.arity()).biases());
    for (double p : pmf) CHECK(p == 0.125);
  }
  SUBCASE("matches enumeration of the addressing bits") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const std::size_t k = 2 + rng.below(3);
      const std::size_t ground = 6 + rng.below(8);
      std::vector<std::vector<std::size_t>> sets(k);
      for (auto& s : sets)
        for (std::size_t j = 0; j < ground; ++j)
          if (rng.below(2)) s.push_back(j);
      const TargetFunction f(CodedAddressing(SetFamily::from_indices(ground, sets)));
      auto p = random_biases(f.arity(), 0.1, seed + 100);
      // Also fix one addressing bit to exercise point masses.
      p[rng.below(ground)] = static_cast<double>(rng.below(2));
      const auto pmf = address_pmf(f, p);
      const auto law = oracle::address_law(sets, ground, p);
      double total = 0.0;
      for (std::size_t a = 0; a < pmf.size(); ++a) {
        CHECK(pmf[a] == doctest::Approx(law[a]).epsilon(1e-12).scale(1.0));
        CHECK(pmf[a] >= 0.0);
        total += pmf[a];
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("deviation bound with c >= ln 5 / delta, including one fixed bit") {
    const double delta = 0.5;
    const std::size_t c = static_cast<std::size_t>(std::ceil(std::log(5.0) / delta));
    for (std::size_t k = 1; k <= 4; ++k) {
      const TargetFunction f(DisjointParityAddressing(c, k));
      const ProductDistribution d(random_biases(f.arity(), delta, k), delta);
      const double bound = std::pow(5.0, -static_cast<double>(k));
      const double u = std::ldexp(1.0, -static_cast<int>(k));
      for (double p : address_pmf(f, d, {})) CHECK(std::abs(p - u) <= bound);
      for (std::size_t i = 0; i < f.addressing_bits(); ++i) {
        for (std::uint8_t b : {0, 1}) {
          for (double p : address_pmf(f, d, Restriction({{i, b}}))) CHECK(std::abs(p - u) <= bound);
        }
      }
    }
  }
  SUBCASE("non-addressing targets are rejected") {
    const TargetFunction f(TruthTableJunta::dictator(3, 0));
    CHECK_THROWS_AS(address_pmf(f, ProductDistribution::uniform(3).biases()), Error);
  }
}

TEST_CASE("expectation") {
  SUBCASE("half-biased memory gives one half") {
    const TargetFunction f(DisjointParityAddressing(2, 2));
    auto p = random_biases(f.arity(), 0.1, 7);
    for (std::size_t a = 0; a < 4; ++a) p[8 + a] = 0.5;
    CHECK(expectation(f, p) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("all memory fixed to one") {
    const TargetFunction f(DisjointParityAddressing(2, 2));
    Restriction pi;
    for (std::size_t a = 0; a < 4; ++a) pi.fix(8 + a, 1);
    const ProductDistribution d(random_biases(f.arity(), 0.1, 8), 0.1);
    CHECK(expectation(f, d, pi) == doctest::Approx(1.0));
  }
  SUBCASE("matches full-cube enumeration on small instances") {
    const auto s = SetFamily::from_indices(8, {{0, 1, 2, 5}, {2, 3, 4, 7}, {0, 4, 6}});
    const TargetFunction f{CodedAddressing(s)};
    REQUIRE(f.arity() == 16);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = random_biases(f.arity(), 0.15, seed);
      const double e = expectation(f, p);
      CHECK(e == doctest::Approx(oracle::expect(p, as_fn(f))).epsilon(1e-12).scale(1.0));
      CHECK(e == doctest::Approx(brute_force_expectation(f, p)).epsilon(1e-12).scale(1.0));
    }
  }
  SUBCASE("agrees with Monte Carlo") {
    const TargetFunction f(CodedAddressing(SetFamily::from_indices(6, {{0, 1, 2}, {2, 3, 4, 5}})));
    const auto p = random_biases(f.arity(), 0.2, 21);
    const double e = expectation(f, p);
    Rng rng(5);
    BitString x(f.arity());
    const int draws = 1000000;
    double hits = 0.0;
    for (int i = 0; i < draws; ++i) {
      sample_input_into(p, rng, x);
      hits += f.eval(x);
    }
    const double sigma = std::sqrt(e * (1 - e) / draws);
    CHECK(std::abs(hits / draws - e) <= 4.0 * sigma);
  }
  SUBCASE("truth tables, negation and address juntas") {
    const TargetFunction t(TruthTableJunta::random(7, {0, 3, 6}, 9));
    const auto p = random_biases(7, 0.1, 10);
    CHECK(expectation(t, p) == doctest::Approx(oracle::expect(p, as_fn(t))).epsilon(1e-12));
    CHECK(expectation(t.negation(), p) == doctest::Approx(1.0 - oracle::expect(p, as_fn(t))).epsilon(1e-12));

    const auto s = SetFamily::from_indices(5, {{0, 1}, {1, 2, 4}});
    const TargetFunction g(AddressJunta(s, {0, 1, 1, 0}));
    const auto q = random_biases(g.arity(), 0.1, 11);
    CHECK(expectation(g, q) == doctest::Approx(oracle::expect(q, as_fn(g))).epsilon(1e-12));
  }
  SUBCASE("brute force cap") {
    const TargetFunction f(DisjointParityAddressing(2, 3));  // 36 + 8 bits
    const auto p = ProductDistribution::uniform(f.arity());
    CHECK_THROWS_AS(brute_force_expectation(f, p.biases()), Error);
  }
}

TEST_CASE("split means match conditional enumeration") {
  const std::vector<TargetFunction> targets = {
      TargetFunction(DisjointParityAddressing(1, 2)),
      TargetFunction(CodedAddressing(SetFamily::from_indices(7, {{0, 1, 2}, {2, 3, 5}, {4, 6}}))),
      TargetFunction(AddressJunta(SetFamily::from_indices(4, {{0, 1}, {2, 3}}), {1, 0, 0, 1})),
      TargetFunction(TruthTableJunta::random(9, {1, 5, 8}, 4)),
  };
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const auto& f = targets[ti];
    auto p = random_biases(f.arity(), 0.1, 40 + ti);
    p[0] = 1.0;  // one point mass
    const auto sm = split_means(f, p);
    CHECK(sm.mean == doctest::Approx(oracle::expect(p, as_fn(f))).epsilon(1e-12));
    for (std::size_t v = 1; v < f.arity(); ++v) {
      for (std::uint8_t b : {0, 1}) {
        CHECK(sm.given[v][b] ==
              doctest::Approx(oracle::conditional(p, as_fn(f), v, b)).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("restriction composition") {
  const TargetFunction f(CodedAddressing(SetFamily::from_indices(5, {{0, 2}, {1, 3, 4}})));
  const Restriction pi({{0, 1}, {6, 0}});
  const Restriction rho({{3, 1}, {8, 1}});
  const auto composed = f.restricted(pi).restricted(rho);
  Restriction both = pi;
  for (const auto& [v, b] : rho) both.fix(v, b);
  const auto direct = f.restricted(both);
  for (std::uint64_t mask = 0; mask < (1u << f.arity()); ++mask) {
    const auto x = oracle::bits_of(mask, f.arity());
    CHECK(composed.eval(x) == direct.eval(x));
    auto y = x;
    y[0] = 1;
    y[6] = 0;
    CHECK(f.restricted(pi).eval(x) == f.eval(y));
  }
}

TEST_CASE("agnostic construction") {
  SUBCASE("band arithmetic") {
    const auto size = agnostic_free_size(4, 0.5);
    CHECK(size >= 2);
    CHECK(size <= 4);
    CHECK((16 - size) % 2 == 0);
    const auto inst = make_agnostic_restriction(CodedAddressing(SetFamily::disjoint_blocks(4, 2)), 0.5);
    CHECK(inst.partition.afree.size() == size);
    CHECK(inst.partition.a0.size() == inst.partition.a1.size());
    CHECK(inst.partition.a0.size() == (16 - size) / 2);
  }
  SUBCASE("infeasible epsilon") {
    try {
      (void)agnostic_free_size(1, 1.0);
      FAIL("expected infeasible epsilon");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::infeasible_epsilon);
    }
    CHECK_THROWS_AS(agnostic_free_size(4, 0.1), Error);
    // k = 2, eps = 1: |Afree| = 2 leaves one address on each side.
    CHECK(agnostic_free_size(2, 1.0) == 2);
  }
  SUBCASE("seeded partition is a permutation of the addresses") {
    const CodedAddressing base(SetFamily::disjoint_blocks(4, 3));
    const auto inst = make_agnostic_restriction(base, 0.25, 77);
    std::vector<int> seen(16, 0);
    for (auto a : inst.partition.a0) ++seen[a];
    for (auto a : inst.partition.a1) ++seen[a];
    for (auto a : inst.partition.afree) ++seen[a];
    for (int v : seen) CHECK(v == 1);
    CHECK(inst.restriction.size() == inst.partition.a0.size() + inst.partition.a1.size());
  }
  SUBCASE("f_pi agrees with the junta off the free addresses") {
    const auto s = SetFamily::from_indices(6, {{0, 1, 2}, {2, 3, 4}, {4, 5, 0}});
    REQUIRE(distance(s) >= 2);
    const CodedAddressing base(s);
    const auto inst = make_agnostic_restriction(base, 0.5);
    const auto sets = s.to_indices();
    std::vector<bool> is_free(8, false);
    for (auto a : inst.partition.afree) is_free[a] = true;
    REQUIRE(base.arity() == 14);
    for (std::uint64_t mask = 0; mask < (1u << 14); ++mask) {
      const auto x = oracle::bits_of(mask, 14);
      if (is_free[oracle::address(sets, x)]) continue;
      CHECK(inst.restricted_target.eval(x) == inst.junta.eval(x));
    }
  }
  SUBCASE("junta distance") {
    const auto base = CodedAddressing(SetFamily::disjoint_blocks(4, 1));
    const TargetFunction f(base);
    const auto d = ProductDistribution::uniform(f.arity());
    CHECK(junta_distance(f, f, d) == 0.0);
    CHECK(junta_distance(f, f.negation(), d) == doctest::Approx(1.0));

    const auto inst = make_agnostic_restriction(base, 0.25);
    const double dist = junta_distance(inst.restricted_target, inst.junta, d);
    const double bound = static_cast<double>(inst.partition.afree.size()) * (1.0 / 16 + std::pow(5.0, -4));
    CHECK(dist <= bound);
    CHECK(dist < 0.25);
    const std::vector<double> p(d.biases().begin(), d.biases().end());
    const double brute = oracle::expect(p, [&](const oracle::Bits& x) {
      return inst.restricted_target.eval(x) != inst.junta.eval(x) ? 1.0 : 0.0;
    });
    CHECK(dist == doctest::Approx(brute).epsilon(1e-12));
  }
}
