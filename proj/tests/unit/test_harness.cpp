#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "treelb/error.hpp"
#include "treelb/harness.hpp"

using namespace treelb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("treelb_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const Json& config) {
  try {
    (void)parse_config(config);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("minimal learn config passes") {
  const Json config = {{"experiment", "learn"}, {"target", {{"family", "dictator"}, {"n", 4}, {"var", 2}}}};
  const auto parsed = parse_config(config);
  const auto record = run(parsed);
  CHECK(record.verdict == "pass");
  CHECK(exit_code(record) == 0);
  CHECK(record.payload["tree_error"]["error"].get<double>() == 0.0);
  CHECK(record.payload["depth"].get<int>() == 1);
}

TEST_CASE("same config twice gives byte-identical verdicts") {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  Json config = {{"experiment", "verify-thm4"}, {"seed", 5}, {"params", {{"k", 3}, {"delta", 0.5}}}};
  config["output"] = a.string();
  const auto ra = run(parse_config(config));
  config["output"] = b.string();
  const auto rb = run(parse_config(config));
  CHECK(ra.config_hash == rb.config_hash);
  CHECK(slurp(a / "verdict.json") == slurp(b / "verdict.json"));
  CHECK(slurp(a / "tree.json") == slurp(b / "tree.json"));
  CHECK(fs::exists(a / "run.json"));
  CHECK(fs::exists(a / "audits.csv"));
  CHECK(fs::exists(a / "curve.csv"));
  // No temporaries are left behind.
  for (const auto& entry : fs::directory_iterator(a)) CHECK(entry.path().extension() != ".tmp");
}

TEST_CASE("invalid configs report the offending field") {
  SUBCASE("delta above one half") {
    const Json config = {{"experiment", "verify-thm4"}, {"params", {{"delta", 0.6}}}};
    CHECK(code_of(config) == ErrorCode::invalid_config);
    try {
      (void)parse_config(config);
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("params.delta") != std::string::npos);
    }
  }
  SUBCASE("several problems are listed together") {
    const Json config = {{"experiment", "learn"},
                         {"impurity", "gain-ratio"},
                         {"target", {{"family", "fck"}, {"c", 0}, {"k", 2}}},
                         {"policy", {{"ties", "first"}}}};
    try {
      (void)parse_config(config);
      FAIL("expected invalid config");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("impurity") != std::string::npos);
      CHECK(msg.find("target.c") != std::string::npos);
      CHECK(msg.find("policy.ties") != std::string::npos);
    }
  }
  SUBCASE("distribution delta is bounded") {
    const Json config = {{"experiment", "learn"},
                         {"target", {{"family", "dictator"}, {"n", 2}, {"var", 0}}},
                         {"distribution", {{"kind", "fixed"}, {"biases", {0.5, 0.5}}, {"delta", 0.6}}}};
    CHECK(code_of(config) == ErrorCode::invalid_config);
  }
  SUBCASE("unknown fields and kinds") {
    CHECK(code_of({{"experiment", "fly"}}) == ErrorCode::invalid_config);
    CHECK(code_of({{"experiment", "parity-example"}, {"bogus", 1}}) == ErrorCode::invalid_config);
    CHECK(code_of({{"experiment", "parity-example"}, {"params", {{"q", 1}}}}) == ErrorCode::invalid_config);
    CHECK(code_of({{"experiment", "learn"}}) == ErrorCode::invalid_config);
    CHECK(code_of(Json::array()) == ErrorCode::invalid_config);
  }
}

TEST_CASE("component errors are recorded") {
  const Json config = {{"experiment", "verify-thm5"}, {"params", {{"k", 1}, {"epsilon", 1.0}}}};
  const auto record = run(parse_config(config));
  CHECK(record.verdict == "error");
  REQUIRE(record.error_code.has_value());
  CHECK(*record.error_code == ErrorCode::infeasible_epsilon);
  CHECK(exit_code(record) == 2);
}

TEST_CASE("target JSON round trip") {
  const std::vector<Json> specs = {
      {{"family", "fck"}, {"c", 2}, {"k", 3}},
      {{"family", "fcks"}, {"sets", {{0, 1}, {1, 2, 3}}}, {"ground", 5}, {"restriction", Json::array({Json::array({0, 1})})}},
      {{"family", "junta"}, {"sets", {{0}, {1}}}, {"accept", {0, 1, 1, 0}}},
      {{"family", "table"}, {"n", 3}, {"vars", {0, 2}}, {"table", {0, 1, 1, 1}}, {"negated", true}},
      {{"family", "parity"}, {"n", 4}, {"vars", {1, 3}}},
      {{"family", "restricted"}, {"base", {{"family", "fck"}, {"c", 1}, {"k", 3}}}, {"epsilon", 0.5}},
  };
  for (const auto& spec : specs) {
    const auto f = parse_target(spec);
    const auto g = parse_target(target_to_json(f));
    CHECK(f == g);
  }
  // A restricted target built from epsilon fixes the non-free memory bits.
  const auto r = parse_target(specs.back());
  CHECK(r.restriction().size() == 8 - agnostic_free_size(3, 0.5));
}

TEST_CASE("distribution JSON") {
  CHECK(parse_distribution({{"kind", "uniform"}}, 4).size() == 4);
  CHECK_THROWS_AS(parse_distribution({{"kind", "uniform"}}), Error);
  const auto fixed = parse_distribution({{"kind", "fixed"}, {"biases", {0.3, 0.6}}});
  CHECK(fixed.delta() == doctest::Approx(0.3));
  const auto smoothed =
      parse_distribution({{"kind", "smoothed"}, {"biases", {0.5, 0.5}}, {"sigma", 0.1}, {"delta", 0.2}, {"seed", 3}});
  for (double p : smoothed.biases()) CHECK(std::abs(p - 0.5) <= 0.1);
  const auto back = parse_distribution(distribution_to_json(smoothed));
  CHECK(std::equal(back.biases().begin(), back.biases().end(), smoothed.biases().begin()));
  CHECK_THROWS_AS(parse_distribution({{"kind", "smoothed"}, {"biases", {0.5}}, {"sigma", 0.5}, {"delta", 0.2}}),
                  Error);
}

TEST_CASE("tree and audit round trips") {
  const TargetFunction f(DisjointParityAddressing(2, 2));
  GrowthPolicy policy;
  policy.depth_budget = 4;
  const auto build = build_tree_exact(f, ProductDistribution::uniform(f.arity()), gini_impurity(), policy);
  const auto tree = tree_from_json(tree_to_json(build.tree));
  REQUIRE(tree.size() == build.tree.size());
  CHECK(tree_to_json(tree) == tree_to_json(build.tree));

  const auto audits = audits_from_csv(audits_to_csv(build.audits));
  REQUIRE(audits.size() == build.audits.size());
  for (std::size_t i = 0; i < audits.size(); ++i) {
    CHECK(audits[i].node_id == build.audits[i].node_id);
    CHECK(audits[i].chosen_var == build.audits[i].chosen_var);
    CHECK(audits[i].chosen_class == build.audits[i].chosen_class);
    CHECK(audits[i].margin == build.audits[i].margin);
  }
  CHECK_THROWS_AS(audits_from_csv("a,b\n"), Error);

  const auto s = SetFamily::from_indices(7, {{0, 3}, {2, 6}});
  CHECK(set_family_from_json(set_family_to_json(s)) == s);
}

TEST_CASE("depth error curve is nonincreasing and ends at the tree error") {
  const TargetFunction f(DisjointParityAddressing(2, 2));
  const ProductDistribution d({0.3, 0.4, 0.5, 0.6, 0.7, 0.3, 0.4, 0.5, 0.35, 0.65, 0.45, 0.55}, 0.3);
  GrowthPolicy policy;
  policy.depth_budget = 5;
  const auto build = build_tree_exact(f, d, gini_impurity(), policy);
  const auto curve = depth_error_curve(build.tree, d);
  REQUIRE(curve.size() == build.tree.depth() + 1);
  for (std::size_t h = 1; h < curve.size(); ++h) CHECK(curve[h] <= curve[h - 1] + 1e-15);
  CHECK(curve.back() == doctest::Approx(tree_error_exact(build.tree, f, d).error).epsilon(1e-12));
}

TEST_CASE("dataset export") {
  const auto dir = scratch("dataset");
  const TargetFunction f(DisjointParityAddressing(1, 2));
  const auto d = ProductDistribution::uniform(f.arity());
  CHECK_THROWS_AS(export_dataset(f, d, 0, 1, dir / "x.csv"), Error);

  export_dataset(f, d, 10, 7, dir / "a.csv");
  export_dataset(f, d, 10, 7, dir / "b.csv");
  const auto a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(a.substr(0, a.find('\n')) == "x_1,x_2,x_3,x_4,x_5,x_6,x_7,x_8,label");
  std::size_t rows = 0;
  for (char ch : a) rows += ch == '\n';
  CHECK(rows == 11);
}

TEST_CASE("exported labels match the exact mean") {
  const auto dir = scratch("dataset_big");
  const Json config = {{"experiment", "export-dataset"},
                       {"seed", 3},
                       {"target", {{"family", "fck"}, {"c", 4}, {"k", 3}}},
                       {"distribution", {{"kind", "fixed"},
                                         {"biases", std::vector<double>(44, 0.3)},
                                         {"delta", 0.3}}},
                       {"params", {{"m", 100000}}},
                       {"output", dir.string()}};
  const auto record = run(parse_config(config));
  CHECK(record.verdict == "pass");
  CHECK(std::abs(record.payload["z"].get<double>()) <= 4.0);
  CHECK(fs::exists(dir / "dataset.csv"));
}

TEST_CASE("other experiment kinds run") {
  CHECK(run(parse_config({{"experiment", "parity-example"}})).verdict == "pass");
  const auto gv = run(parse_config({{"experiment", "gv-search"}, {"params", {{"k", 4}, {"c", 6}, {"d", 8}}}}));
  CHECK(gv.verdict == "pass");
  CHECK(set_family_from_json(gv.payload["family"]).k() == 4);
  const auto pmf = run(parse_config({{"experiment", "address-pmf"},
                                     {"target", {{"family", "fck"}, {"c", 4}, {"k", 3}}},
                                     {"params", {{"restriction", Json::array({Json::array({0, 1})})}}}}));
  CHECK(pmf.verdict == "pass");
  const auto gains = run(parse_config(
      {{"experiment", "gains"}, {"target", {{"family", "parity"}, {"n", 3}, {"vars", {0, 1}}}}}));
  CHECK(gains.verdict == "pass");
  for (const auto& row : gains.payload["gains"]) CHECK(std::abs(row["gain"].get<double>()) <= 1e-12);
  const auto junta = run(parse_config({{"experiment", "junta-sanity"}, {"params", {{"trials", 5}}}}));
  CHECK(junta.verdict == "pass");
}

TEST_CASE("config hash") {
  const auto a = parse_config({{"experiment", "parity-example"}, {"seed", 1}});
  const auto b = parse_config({{"experiment", "parity-example"}, {"seed", 1}, {"params", {{"n", 4}}}});
  const auto c = parse_config({{"experiment", "parity-example"}, {"seed", 2}});
  CHECK(config_hash(a.canonical) == config_hash(b.canonical));
  CHECK(config_hash(a.canonical) != config_hash(c.canonical));
  CHECK(config_hash(a.canonical).size() == 16);
}
