// treelb: command-line front end for the experiment harness.
#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "treelb/harness.hpp"

namespace {

using treelb::Json;

constexpr int kExitInvalid = 2;
constexpr int kExitInternal = 3;

Json read_json_arg(const std::string& text, const std::string& what) {
  std::string body = text;
  if (!body.empty() && body.front() == '@') {
    std::ifstream in(body.substr(1));
    if (!in) throw treelb::Error(treelb::ErrorCode::invalid_config, what + ": cannot read " + body.substr(1));
    body.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  try {
    return Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw treelb::Error(treelb::ErrorCode::invalid_config, what + ": " + e.what());
  }
}

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;

  // Experiment fields collected from subcommand flags; only set ones override.
  Json overrides = Json::object();
  Json params = Json::object();
  Json policy = Json::object();
};

template <class T>
void add_param(CLI::App* app, Options& opts, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option_function<T>(flag, [&opts, key](const T& v) { opts.params[key] = v; }, help);
}

void add_target_flags(CLI::App* app, Options& opts) {
  app->add_option_function<std::string>("--target", [&opts](const std::string& v) {
    opts.overrides["target"] = read_json_arg(v, "target");
  }, "Target spec as JSON or @file");
  app->add_option_function<std::string>("--dist", [&opts](const std::string& v) {
    opts.overrides["distribution"] = read_json_arg(v, "distribution");
  }, "Distribution spec as JSON or @file");
}

void add_impurity_flag(CLI::App* app, Options& opts) {
  app->add_option_function<std::string>("--impurity", [&opts](const std::string& v) { opts.overrides["impurity"] = v; },
                                        "gini, entropy or km");
}

void add_ties_flag(CLI::App* app, Options& opts) {
  app->add_option_function<std::string>("--ties", [&opts](const std::string& v) { opts.policy["ties"] = v; },
                                        "lexicographic, prefer-addressing or seeded-random");
}

void add_restriction_flag(CLI::App* app, Options& opts) {
  app->add_option_function<std::string>("--restriction", [&opts](const std::string& v) {
    opts.params["restriction"] = read_json_arg(v, "restriction");
  }, "Conditioning as [[index, bit], ...]");
}

Json merged_config(const Json& base, const Options& opts, const std::string& experiment) {
  Json cfg = base.is_null() ? Json::object() : base;
  if (!experiment.empty()) cfg["experiment"] = experiment;
  for (const auto& [key, value] : opts.overrides.items()) cfg[key] = value;
  if (!opts.params.empty()) {
    if (!cfg.contains("params")) cfg["params"] = Json::object();
    for (const auto& [key, value] : opts.params.items()) cfg["params"][key] = value;
  }
  if (!opts.policy.empty()) {
    if (!cfg.contains("policy")) cfg["policy"] = Json::object();
    for (const auto& [key, value] : opts.policy.items()) cfg["policy"][key] = value;
  }
  if (opts.seed) cfg["seed"] = *opts.seed;
  return cfg;
}

int run_batch(std::vector<Json> configs, const Options& opts) {
  // Parse everything first so a bad entry stops the batch before any compute.
  std::vector<treelb::ExperimentConfig> parsed;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    try {
      parsed.push_back(treelb::parse_config(configs[i]));
    } catch (const treelb::Error& e) {
      std::cerr << "config";
      if (configs.size() > 1) std::cerr << "[" << i << "]";
      std::cerr << ": " << e.what() << "\n";
      return kExitInvalid;
    }
    if (!opts.out_dir.empty()) {
      std::filesystem::path dir = opts.out_dir;
      // Each job owns its own subdirectory in a batch.
      if (configs.size() > 1) dir /= std::to_string(i) + "-" + std::string(treelb::to_string(parsed.back().kind));
      parsed.back().output_dir = dir;
    }
  }

  std::vector<treelb::RunRecord> records(parsed.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < parsed.size(); i = next++) records[i] = treelb::run(parsed[i]);
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(parsed.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (opts.out_dir.empty() && records.size() == 1) {
      Json out = {{"config_hash", r.config_hash}, {"verdict", r.verdict}, {"payload", r.payload}};
      if (r.error) out["error"] = *r.error;
      std::cout << out.dump(2) << "\n";
    } else {
      std::cout << treelb::to_string(parsed[i].kind) << " " << r.config_hash << " " << r.verdict;
      if (!parsed[i].output_dir.empty()) std::cout << " " << parsed[i].output_dir.string();
      std::cout << "\n";
    }
    if (r.error) std::cerr << "error: " << *r.error << "\n";
    code = std::max(code, treelb::exit_code(r));
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Greedy impurity-based decision trees on adversarial addressing targets"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Options opts;
  app.add_option("--config", opts.config_path, "Experiment config JSON (object or array of objects)");
  app.add_option("--out", opts.out_dir, "Output directory for verdict, tree and audit files");
  app.add_option("--seed", opts.seed, "Master seed (overrides the config)");
  app.add_option("--jobs", opts.jobs, "Parallel workers for config arrays")->check(CLI::PositiveNumber);

  auto* learn = app.add_subcommand("learn", "Grow a tree with exact or sampled gains");
  add_target_flags(learn, opts);
  add_impurity_flag(learn, opts);
  add_ties_flag(learn, opts);
  learn->add_option_function<std::size_t>("--depth", [&](std::size_t v) { opts.policy["depth"] = v; }, "Depth budget");
  learn->add_option_function<std::size_t>("--nodes", [&](std::size_t v) { opts.policy["nodes"] = v; }, "Internal node budget");
  learn->add_option_function<std::string>("--expansion", [&](const std::string& v) { opts.policy["expansion"] = v; },
                                          "full or paths");
  learn->add_option_function<std::size_t>("--paths", [&](std::size_t v) { opts.policy["paths"] = v; }, "Sampled paths");
  learn->add_option_function<std::size_t>("--samples", [&](std::size_t v) { opts.overrides["samples"] = v; },
                                          "Use the sampled learner with this many examples");

  auto* gains = app.add_subcommand("gains", "Purity gain of every variable");
  add_target_flags(gains, opts);
  add_impurity_flag(gains, opts);
  add_restriction_flag(gains, opts);

  auto* thm4 = app.add_subcommand("verify-thm4", "Memory-first order and error floor on an addressing target");
  add_param<std::size_t>(thm4, opts, "--k", "k", "Address width");
  add_param<double>(thm4, opts, "--delta", "delta", "Balance parameter");
  add_param<bool>(thm4, opts, "--coded", "coded", "Use a searched set family");
  add_param<std::size_t>(thm4, opts, "--paths", "paths", "Sampled paths above k = 4");
  add_param<std::size_t>(thm4, opts, "--mc-leaves", "mc_leaves", "Sampled leaves for MC error");
  add_param<std::size_t>(thm4, opts, "--gv-budget", "gv_budget", "Set family search budget");
  add_impurity_flag(thm4, opts);
  add_ties_flag(thm4, opts);

  auto* thm5 = app.add_subcommand("verify-thm5", "Agnostic junta-closeness experiment");
  add_param<std::size_t>(thm5, opts, "--k", "k", "Address width");
  add_param<double>(thm5, opts, "--delta", "delta", "Balance parameter");
  add_param<double>(thm5, opts, "--epsilon", "epsilon", "Closeness");
  add_param<std::size_t>(thm5, opts, "--mc-leaves", "mc_leaves", "Sampled leaves for MC error");
  add_param<std::size_t>(thm5, opts, "--gv-budget", "gv_budget", "Set family search budget");
  add_impurity_flag(thm5, opts);
  add_ties_flag(thm5, opts);

  auto* junta = app.add_subcommand("junta-sanity", "Random juntas under smoothed distributions");
  add_param<std::size_t>(junta, opts, "--j", "junta_size", "Junta size");
  add_param<std::size_t>(junta, opts, "--n", "n", "Number of variables");
  add_param<double>(junta, opts, "--sigma", "sigma", "Smoothing radius");
  add_param<double>(junta, opts, "--delta", "delta", "Balance parameter");
  add_param<std::size_t>(junta, opts, "--trials", "trials", "Trials");
  add_param<bool>(junta, opts, "--uniform-parity", "uniform_parity", "Parity juntas under the uniform law");
  add_impurity_flag(junta, opts);

  auto* parity = app.add_subcommand("parity-example", "Gains for x_i xor x_j under the uniform law");
  add_param<std::size_t>(parity, opts, "--n", "n", "Number of variables");
  add_param<std::size_t>(parity, opts, "--i", "i", "First index (0-based)");
  add_param<std::size_t>(parity, opts, "--j", "j", "Second index (0-based)");

  auto* gv = app.add_subcommand("gv-search", "Search for a set family with large symmetric-difference distance");
  add_param<std::size_t>(gv, opts, "--k", "k", "Number of sets");
  add_param<std::size_t>(gv, opts, "--c", "c", "Ground set is c k (0 scales automatically)");
  add_param<std::size_t>(gv, opts, "--d", "d", "Target distance (0 derives it from delta)");
  add_param<double>(gv, opts, "--delta", "delta", "Balance parameter used when d is 0");
  add_param<std::uint64_t>(gv, opts, "--budget", "budget", "Trial budget");

  auto* dataset = app.add_subcommand("export-dataset", "Write i.i.d. labeled examples as CSV");
  add_target_flags(dataset, opts);
  add_param<std::size_t>(dataset, opts, "--m", "m", "Number of examples");

  auto* pmf = app.add_subcommand("address-pmf", "Exact law of the decoded address");
  add_target_flags(pmf, opts);
  add_restriction_flag(pmf, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  } catch (const treelb::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    std::string experiment;
    for (const auto* sub : app.get_subcommands()) experiment = sub->get_name();

    Json base;
    if (!opts.config_path.empty()) base = read_json_arg("@" + opts.config_path, "config");
    if (experiment.empty() && base.is_null()) {
      std::cerr << app.help();
      return kExitInvalid;
    }
    std::vector<Json> configs;
    if (base.is_array()) {
      for (const auto& entry : base) configs.push_back(merged_config(entry, opts, experiment));
    } else {
      configs.push_back(merged_config(base, opts, experiment));
    }
    if (configs.empty()) {
      std::cerr << "config: empty array\n";
      return kExitInvalid;
    }
    return run_batch(std::move(configs), opts);
  } catch (const treelb::Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == treelb::ErrorCode::io_failure ? kExitInternal : kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
