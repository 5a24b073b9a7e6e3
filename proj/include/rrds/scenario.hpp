#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rrds/estimators.hpp"
#include "rrds/metrics.hpp"
#include "rrds/network.hpp"
#include "rrds/recruitment.hpp"

namespace rrds {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.3.0";

struct ScenarioConfig {
  PopulationSpec population;
  SeedSpec seeds;
  RecruitConfig rds;
  RecruitConfig rrds;
  std::size_t bootstrap_reps = 1000;
  double level = 0.95;
  std::vector<std::string> attributes{"age", "female"};
  bool write_replicates = false;

  std::size_t reps = 1;
  std::uint64_t master_seed = 42;
  fs::path output_dir = "out";
  std::size_t workers = 1;
  bool run_rds = true;
  bool run_rrds = true;
  bool estimate_vh = true;
  bool estimate_treeboot = true;
  bool write_graph = true;

  /// Defaults reproducing the simulation-study setup.
  static ScenarioConfig study();

  const RecruitConfig& recruit(Method m) const { return m == Method::rds ? rds : rrds; }
  std::vector<Method> arms() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Reads environment variables; injectable for tests.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Parses YAML text over study() defaults, then applies RRDS_<SECTION>_<KEY>
/// environment overrides. Unknown keys and ill-typed values are ConfigErrors.
ScenarioConfig parse_config(const std::string& yaml_text, const EnvLookup& env = process_env());
ScenarioConfig load_config(const fs::path& path, const EnvLookup& env = process_env());

/// Every config key as "section.key", in schema order.
std::vector<std::string> config_keys();
/// Environment variable name overriding `key` ("population.n" -> RRDS_POPULATION_N).
std::string env_var_for(const std::string& key);

nlohmann::ordered_json to_json(const ScenarioConfig& config);

/// Seeds for each stage of one replication, pure in (master, index).
struct ReplicationSeeds {
  std::uint64_t replication = 0;
  std::uint64_t population = 0;
  std::uint64_t edges = 0;
  std::uint64_t seeds = 0;
  std::uint64_t recruit_rds = 0;
  std::uint64_t recruit_rrds = 0;
  std::uint64_t bootstrap_rds = 0;
  std::uint64_t bootstrap_rrds = 0;

  static ReplicationSeeds derive(std::uint64_t master, std::size_t index);
  std::uint64_t recruit(Method m) const { return m == Method::rds ? recruit_rds : recruit_rrds; }
  std::uint64_t bootstrap(Method m) const {
    return m == Method::rds ? bootstrap_rds : bootstrap_rrds;
  }
};

// Pipeline stages. Each is a pure function of its inputs and derived seeds,
// so running them separately reproduces `simulate` exactly.

SocialGraph stage_generate(const ScenarioConfig& config, const ReplicationSeeds& seeds);
std::vector<NodeId> stage_select_seeds(const SocialGraph& graph, const ScenarioConfig& config,
                                       const ReplicationSeeds& seeds);
RecruitmentForest stage_recruit(const SocialGraph& graph, std::span<const NodeId> seed_ids,
                                const ScenarioConfig& config, Method arm,
                                const ReplicationSeeds& seeds);
/// Reports for every attribute: vh and treeboot (as enabled) plus naive.
std::vector<EstimateReport> stage_estimate(const RecruitmentForest& forest,
                                           const SurveyedSample& sample,
                                           const ScenarioConfig& config, Method arm,
                                           const ReplicationSeeds& seeds);

/// What the metrics stage needs from one replication and arm.
struct ArmResult {
  Method method = Method::rrds;
  std::vector<WaveStats> waves;
  std::vector<EstimateReport> estimates;
};

struct ReplicationResult {
  std::size_t index = 0;
  Baseline baseline;
  std::vector<ArmResult> arms;
};

// File writers shared by the stage subcommands and `simulate`.
void write_generate_outputs(const fs::path& dir, const SocialGraph& graph,
                            const ScenarioConfig& config);
void write_recruit_outputs(const fs::path& dir, const SocialGraph& graph,
                           const RecruitmentForest& forest, const ScenarioConfig& config);
void write_estimate_outputs(const fs::path& arm_dir, std::span<const EstimateReport> reports,
                            const ScenarioConfig& config);

/// Directory of replication `index` under `out`.
fs::path replication_dir(const fs::path& out, std::size_t index);

/// Loads one replication's files as written by the stages.
ReplicationResult read_replication(const fs::path& out, std::size_t index,
                                   const ScenarioConfig& config);

/// Writes metrics.json, summary.json and plot_data.csv under `out`.
void write_aggregates(const fs::path& out, std::span<const ReplicationResult> results,
                      const ScenarioConfig& config);

/// Table-1 style grid over (arm, estimator), pooled across replications.
std::vector<MetricsCell> metrics_grid(std::span<const ReplicationResult> results,
                                      const ScenarioConfig& config);

struct RunManifest {
  nlohmann::ordered_json json;
  bool complete = true;
};

/// Full pipeline over config.reps replications on config.workers threads.
/// Writes every file and the manifest; never throws for per-replication
/// failures (they are recorded and the manifest is flagged partial).
RunManifest run_scenario(const ScenarioConfig& config);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

}  // namespace rrds
