// rrds: command-line driver for the sampling simulator.
//
//   rrds simulate --config configs/study.yaml --seed 42 --reps 50 --out out
//   rrds generate --rep 0 --out out        (then recruit, estimate, metrics)
//
// Exit status: 0 success, 1 invalid configuration, 2 runtime or data error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rrds/errors.hpp"
#include "rrds/io.hpp"
#include "rrds/scenario.hpp"

namespace fs = std::filesystem;
using namespace rrds;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::optional<std::string> arm;
  std::optional<std::string> estimator;
  std::size_t rep = 0;
};

ScenarioConfig resolve(const Options& o) {
  ScenarioConfig c;
  try {
    c = o.config_path.empty() ? parse_config("") : load_config(o.config_path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  if (o.seed) c.master_seed = *o.seed;
  if (o.reps) c.reps = *o.reps;
  if (o.workers) c.workers = *o.workers;
  if (o.out) c.output_dir = *o.out;
  if (o.arm) {
    c.run_rds = *o.arm != "rrds";
    c.run_rrds = *o.arm != "rds";
  }
  if (o.estimator) {
    c.estimate_vh = *o.estimator != "treeboot";
    c.estimate_treeboot = *o.estimator != "vh";
  }
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Options& o, bool with_rep) {
  cmd->add_option("--config", o.config_path, "Scenario config (YAML)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master RNG seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--arm", o.arm, "Recruitment arm")->check(CLI::IsMember({"rds", "rrds", "both"}));
  cmd->add_option("--estimator", o.estimator, "Estimator")
      ->check(CLI::IsMember({"vh", "treeboot", "both"}));
  if (with_rep) cmd->add_option("--rep", o.rep, "Replication index");
}

int cmd_generate(const Options& o) {
  ScenarioConfig c = resolve(o);
  c.write_graph = true;
  const auto seeds = ReplicationSeeds::derive(c.master_seed, o.rep);
  const fs::path dir = replication_dir(c.output_dir, o.rep);
  const SocialGraph graph = stage_generate(c, seeds);
  write_generate_outputs(dir, graph, c);
  const auto seed_ids = stage_select_seeds(graph, c, seeds);
  io::write_file(dir / "seeds.csv", io::seeds_csv(seed_ids));
  std::cout << fmt::format("{}: {} nodes, {} edges, {} seeds\n", dir.string(), graph.size(),
                           graph.edge_count(), seed_ids.size());
  return 0;
}

int cmd_recruit(const Options& o) {
  const ScenarioConfig c = resolve(o);
  const auto seeds = ReplicationSeeds::derive(c.master_seed, o.rep);
  const fs::path dir = replication_dir(c.output_dir, o.rep);
  const SocialGraph graph = io::read_graph(dir / "nodes.csv", dir / "edges.csv");
  const auto seed_ids = io::read_seeds(dir / "seeds.csv");
  for (Method m : c.arms()) {
    const auto forest = stage_recruit(graph, seed_ids, c, m, seeds);
    write_recruit_outputs(dir, graph, forest, c);
    std::cout << fmt::format("{} {}: sample size {}, last wave {}\n", dir.string(), to_string(m),
                             forest.sample_size(), forest.last_wave());
  }
  return 0;
}

int cmd_estimate(const Options& o) {
  const ScenarioConfig c = resolve(o);
  const auto seeds = ReplicationSeeds::derive(c.master_seed, o.rep);
  const fs::path dir = replication_dir(c.output_dir, o.rep);
  for (Method m : c.arms()) {
    const fs::path arm_dir = dir / std::string(to_string(m));
    const auto forest = io::read_forest(arm_dir / "forest.csv", arm_dir / "seeds.csv", m);
    const auto sample = io::read_sample(arm_dir / "sample.csv");
    const auto reports = stage_estimate(forest, sample, c, m, seeds);
    write_estimate_outputs(arm_dir, reports, c);
    std::cout << fmt::format("{}: {} reports\n", (arm_dir / "estimates.json").string(),
                             reports.size());
  }
  return 0;
}

int cmd_metrics(const Options& o) {
  const ScenarioConfig c = resolve(o);
  std::vector<ReplicationResult> results;
  for (std::size_t i = 0; i < c.reps; ++i) results.push_back(read_replication(c.output_dir, i, c));
  write_aggregates(c.output_dir, results, c);
  for (const auto& cell : metrics_grid(results, c))
    std::cout << fmt::format("{:5} {:9} rmse={:.4f} coverage={}/{}\n", cell.recruitment,
                             cell.estimator, cell.rmse, cell.coverage_count, cell.coverage_total);
  return 0;
}

int cmd_simulate(const Options& o) {
  const ScenarioConfig c = resolve(o);
  const RunManifest m = run_scenario(c);
  std::cout << fmt::format("{}: {} replication(s), status {}\n", c.output_dir.string(), c.reps,
                           m.complete ? "complete" : "partial");
  if (!m.complete) {
    for (const auto& r : m.json.at("replications"))
      if (r.contains("error"))
        std::cerr << fmt::format("replication {}: {}\n", r.at("index").get<std::size_t>(),
                                 r.at("error").get<std::string>());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chain-referral sampling simulator: RDS vs randomized recruitment"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "Population, graph and seed set for one replication");
  add_common(generate, o, true);
  auto* recruit = app.add_subcommand("recruit", "Run recruitment arms on a generated replication");
  add_common(recruit, o, true);
  auto* estimate = app.add_subcommand("estimate", "Estimates from a forest and sample");
  add_common(estimate, o, true);
  auto* metrics = app.add_subcommand("metrics", "Aggregate metrics over replications");
  add_common(metrics, o, false);
  metrics->add_option("--reps", o.reps, "Number of replications");
  auto* simulate = app.add_subcommand("simulate", "Full pipeline over all replications");
  add_common(simulate, o, false);
  simulate->add_option("--reps", o.reps, "Number of replications");
  simulate->add_option("--workers", o.workers, "Parallel workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) return cmd_generate(o);
    if (*recruit) return cmd_recruit(o);
    if (*estimate) return cmd_estimate(o);
    if (*metrics) return cmd_metrics(o);
    return cmd_simulate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
