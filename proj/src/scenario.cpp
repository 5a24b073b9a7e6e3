#include "rrds/scenario.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "rrds/errors.hpp"
#include "rrds/io.hpp"
#include "rrds/rng.hpp"

namespace rrds {

namespace {

// ---------------------------------------------------------------------------
// Config schema

const std::vector<std::string> kRecruitKeys = {
    "max_recruits",  "max_waves",       "selection_alpha", "homophilic_pool",
    "nomination",    "nomination_prob", "degree_source",
};

const std::vector<std::pair<std::string, std::vector<std::string>>>& schema() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> s = {
      {"population",
       {"n", "age_mean", "age_sd", "age_min", "age_max", "female_prop", "mean_degree",
        "homophily_alpha", "age_scale_tau"}},
      {"seeds", {"count", "gender", "max_age", "fill_with_youngest"}},
      {"recruitment", kRecruitKeys},
      {"rds", kRecruitKeys},
      {"rrds", kRecruitKeys},
      {"estimation", {"bootstrap_reps", "level", "attributes", "write_replicates"}},
      {"run", {"reps", "seed", "workers", "out", "arms", "estimators", "write_graph"}},
  };
  return s;
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& key, const char* type) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(key + ": expected " + type);
  }
}

double real(const YAML::Node& node, const std::string& key) {
  return scalar<double>(node, key, "a number");
}

std::size_t count(const YAML::Node& node, const std::string& key) {
  const auto v = scalar<long long>(node, key, "a non-negative integer");
  if (v < 0) throw ConfigError(key + ": expected a non-negative integer, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

bool flag(const YAML::Node& node, const std::string& key) {
  return scalar<bool>(node, key, "true or false");
}

std::string text(const YAML::Node& node, const std::string& key) {
  return scalar<std::string>(node, key, "a string");
}

template <typename F>
auto rethrow_named(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void apply_recruit(RecruitConfig& rc, const std::string& key, const YAML::Node& v,
                   const std::string& full) {
  if (key == "max_recruits") rc.max_recruits = count(v, full);
  else if (key == "max_waves") rc.max_waves = count(v, full);
  else if (key == "selection_alpha") rc.selection_alpha = real(v, full);
  else if (key == "homophilic_pool")
    rc.homophilic_pool = rethrow_named(full, [&] { return parse_homophilic_pool(text(v, full)); });
  else if (key == "nomination")
    rc.nomination.kind = rethrow_named(full, [&] { return parse_nomination_kind(text(v, full)); });
  else if (key == "nomination_prob") rc.nomination.prob = real(v, full);
  else if (key == "degree_source")
    rc.degree_source = rethrow_named(full, [&] { return parse_degree_source(text(v, full)); });
}

void apply_key(ScenarioConfig& c, const std::string& section, const std::string& key,
               const YAML::Node& v) {
  const std::string full = section + "." + key;
  if (section == "population") {
    auto& p = c.population;
    if (key == "n") p.n = count(v, full);
    else if (key == "age_mean") p.age_mean = real(v, full);
    else if (key == "age_sd") p.age_sd = real(v, full);
    else if (key == "age_min") p.age_min = real(v, full);
    else if (key == "age_max") p.age_max = real(v, full);
    else if (key == "female_prop") p.female_prop = real(v, full);
    else if (key == "mean_degree") p.target_mean_degree = real(v, full);
    else if (key == "homophily_alpha") p.homophily_alpha = real(v, full);
    else if (key == "age_scale_tau") p.age_scale_tau = real(v, full);
  } else if (section == "seeds") {
    auto& s = c.seeds;
    if (key == "count") s.count = count(v, full);
    else if (key == "gender") {
      const std::string g = v.IsNull() ? "any" : text(v, full);
      if (g == "any") s.gender.reset();
      else s.gender = rethrow_named(full, [&] {
        try {
          return parse_gender(g);
        } catch (const InputError& e) {
          throw ConfigError(e.what());
        }
      });
    } else if (key == "max_age") {
      if (v.IsNull()) s.max_age.reset();
      else s.max_age = real(v, full);
    } else if (key == "fill_with_youngest") s.fill_with_youngest = flag(v, full);
  } else if (section == "recruitment") {
    apply_recruit(c.rds, key, v, full);
    apply_recruit(c.rrds, key, v, full);
  } else if (section == "rds") {
    apply_recruit(c.rds, key, v, full);
  } else if (section == "rrds") {
    apply_recruit(c.rrds, key, v, full);
  } else if (section == "estimation") {
    if (key == "bootstrap_reps") c.bootstrap_reps = count(v, full);
    else if (key == "level") c.level = real(v, full);
    else if (key == "write_replicates") c.write_replicates = flag(v, full);
    else if (key == "attributes") {
      c.attributes.clear();
      if (v.IsSequence()) {
        for (const auto& item : v) c.attributes.push_back(text(item, full));
      } else {
        // Comma-separated scalar, as supplied through the environment.
        std::string all = text(v, full);
        std::size_t start = 0;
        while (start <= all.size()) {
          const std::size_t comma = std::min(all.find(',', start), all.size());
          if (comma > start) c.attributes.push_back(all.substr(start, comma - start));
          start = comma + 1;
        }
      }
    }
  } else if (section == "run") {
    if (key == "reps") c.reps = count(v, full);
    else if (key == "seed") c.master_seed = scalar<std::uint64_t>(v, full, "an unsigned integer");
    else if (key == "workers") c.workers = count(v, full);
    else if (key == "out") c.output_dir = text(v, full);
    else if (key == "write_graph") c.write_graph = flag(v, full);
    else if (key == "arms" || key == "estimators") {
      const std::string choice = text(v, full);
      const bool arms = key == "arms";
      const std::string a = arms ? "rds" : "vh";
      const std::string b = arms ? "rrds" : "treeboot";
      if (choice != a && choice != b && choice != "both")
        throw ConfigError(full + ": expected " + a + ", " + b + " or both, got '" + choice + "'");
      const bool first = choice == a || choice == "both";
      const bool second = choice == b || choice == "both";
      if (arms) {
        c.run_rds = first;
        c.run_rrds = second;
      } else {
        c.estimate_vh = first;
        c.estimate_treeboot = second;
      }
    }
  }
}

std::string upper(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json recruit_json(const RecruitConfig& rc) {
  nlohmann::ordered_json j;
  j["max_recruits"] = rc.max_recruits;
  j["max_waves"] = rc.max_waves;
  j["selection_alpha"] = rc.selection_alpha;
  j["homophilic_pool"] = std::string(to_string(rc.homophilic_pool));
  j["nomination"] = std::string(to_string(rc.nomination.kind));
  j["nomination_prob"] = rc.nomination.prob;
  j["degree_source"] = std::string(to_string(rc.degree_source));
  return j;
}

// Mean and sample standard deviation.
struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

nlohmann::ordered_json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

const char* kRmseConvention =
    "errors standardized by each estimator's own standard error (CI half-width / z); "
    "not calibrated to reproduce published field-data values";
const char* kPercentileConvention =
    "inclusive cumulative-weight threshold: first sorted replicate whose normalized "
    "cumulative weight reaches the tail mass";

const ArmResult* find_arm(const ReplicationResult& r, Method m) {
  for (const auto& a : r.arms) {
    if (a.method == m) return &a;
  }
  return nullptr;
}

const EstimateReport* find_estimate(const ArmResult& arm, const std::string& estimator,
                                    const std::string& attribute) {
  for (const auto& e : arm.estimates) {
    if (e.estimator == estimator && e.attribute == attribute) return &e;
  }
  return nullptr;
}

std::vector<std::string> enabled_estimators(const ScenarioConfig& c) {
  std::vector<std::string> out;
  if (c.estimate_vh) out.push_back("vh");
  if (c.estimate_treeboot) out.push_back("treeboot");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ScenarioConfig ScenarioConfig::study() {
  ScenarioConfig c;
  c.seeds.count = 76;
  c.seeds.gender = Gender::male;
  c.seeds.max_age = 22.0;
  c.seeds.fill_with_youngest = true;
  return c;
}

std::vector<Method> ScenarioConfig::arms() const {
  std::vector<Method> out;
  if (run_rds) out.push_back(Method::rds);
  if (run_rrds) out.push_back(Method::rrds);
  return out;
}

void ScenarioConfig::validate() const {
  population.validate();
  rethrow_named("seeds", [&] { seeds.validate(); });
  rethrow_named("rds", [&] { rds.validate(); });
  rethrow_named("rrds", [&] { rrds.validate(); });
  if (bootstrap_reps < 1) throw ConfigError("estimation.bootstrap_reps: must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("estimation.level: must be in (0, 1)");
  if (attributes.empty()) throw ConfigError("estimation.attributes: must not be empty");
  std::set<std::string> seen;
  for (const auto& a : attributes) {
    if (!is_known_attribute(a))
      throw ConfigError("estimation.attributes: unknown attribute '" + a +
                        "' (known: age, female, male)");
    if (!seen.insert(a).second)
      throw ConfigError("estimation.attributes: '" + a + "' listed twice");
  }
  if (reps < 1) throw ConfigError("run.reps: must be at least 1");
  if (workers < 1) throw ConfigError("run.workers: must be at least 1");
  if (!run_rds && !run_rrds) throw ConfigError("run.arms: no arm selected");
  if (!estimate_vh && !estimate_treeboot) throw ConfigError("run.estimators: none selected");
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [section, keys] : schema()) {
    for (const auto& k : keys) out.push_back(section + "." + k);
  }
  return out;
}

std::string env_var_for(const std::string& key) {
  std::string name = "RRDS_" + upper(key);
  std::replace(name.begin(), name.end(), '.', '_');
  return name;
}

ScenarioConfig parse_config(const std::string& yaml_text, const EnvLookup& env) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("config", static_cast<std::size_t>(e.mark.line + 1),
                     static_cast<std::size_t>(e.mark.column + 1), e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");

  for (const auto& section : root) {
    const auto name = section.first.as<std::string>();
    auto it = std::find_if(schema().begin(), schema().end(),
                           [&](const auto& s) { return s.first == name; });
    if (it == schema().end()) throw ConfigError("unknown config section '" + name + "'");
    if (section.second.IsNull()) continue;
    if (!section.second.IsMap()) throw ConfigError(name + ": expected a mapping");
    for (const auto& kv : section.second) {
      const auto key = kv.first.as<std::string>();
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError("unknown config key '" + name + "." + key + "'");
    }
  }

  for (const auto& [section, keys] : schema()) {
    for (const auto& key : keys) {
      if (auto value = env(env_var_for(section + "." + key))) {
        if (!root[section] || !root[section].IsMap())
          root[section] = YAML::Node(YAML::NodeType::Map);
        try {
          root[section][key] = YAML::Load(*value);
        } catch (const YAML::Exception&) {
          root[section][key] = *value;
        }
      }
    }
  }

  ScenarioConfig config = ScenarioConfig::study();
  for (const auto& [section, keys] : schema()) {
    const YAML::Node node = root[section];
    if (!node || !node.IsMap()) continue;
    for (const auto& key : keys) {
      if (node[key]) apply_key(config, section, key, node[key]);
    }
  }
  config.validate();
  return config;
}

ScenarioConfig load_config(const fs::path& path, const EnvLookup& env) {
  std::string content;
  try {
    content = io::read_file(path);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse_config(content, env);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.column(),
                     std::string(e.what()).substr(std::string("config:").size()));
  }
}

nlohmann::ordered_json to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j;
  const auto& p = c.population;
  j["population"] = {{"n", p.n},
                     {"age_mean", p.age_mean},
                     {"age_sd", p.age_sd},
                     {"age_min", p.age_min},
                     {"age_max", p.age_max},
                     {"female_prop", p.female_prop},
                     {"mean_degree", p.target_mean_degree},
                     {"homophily_alpha", p.homophily_alpha},
                     {"age_scale_tau", p.age_scale_tau}};
  nlohmann::ordered_json seeds;
  seeds["count"] = c.seeds.count;
  seeds["gender"] = c.seeds.gender ? std::string(to_string(*c.seeds.gender)) : "any";
  seeds["max_age"] = c.seeds.max_age ? nlohmann::ordered_json(*c.seeds.max_age) : nlohmann::ordered_json(nullptr);
  seeds["fill_with_youngest"] = c.seeds.fill_with_youngest;
  j["seeds"] = seeds;
  j["rds"] = recruit_json(c.rds);
  j["rrds"] = recruit_json(c.rrds);
  j["estimation"] = {{"bootstrap_reps", c.bootstrap_reps},
                     {"level", c.level},
                     {"attributes", c.attributes},
                     {"write_replicates", c.write_replicates}};
  j["run"] = {{"reps", c.reps},
              {"seed", c.master_seed},
              {"workers", c.workers},
              {"out", c.output_dir.string()},
              {"arms", c.run_rds && c.run_rrds ? "both" : (c.run_rds ? "rds" : "rrds")},
              {"estimators",
               c.estimate_vh && c.estimate_treeboot ? "both" : (c.estimate_vh ? "vh" : "treeboot")},
              {"write_graph", c.write_graph}};
  return j;
}

// ---------------------------------------------------------------------------
// Stages

ReplicationSeeds ReplicationSeeds::derive(std::uint64_t master, std::size_t index) {
  ReplicationSeeds s;
  s.replication = derive_seed(master, static_cast<std::uint64_t>(index));
  s.population = derive_seed(s.replication, Stream::population);
  s.edges = derive_seed(s.replication, Stream::edges);
  s.seeds = derive_seed(s.replication, Stream::seeds);
  s.recruit_rds = derive_seed(s.replication, Stream::recruit_rds);
  s.recruit_rrds = derive_seed(s.replication, Stream::recruit_rrds);
  s.bootstrap_rds = derive_seed(s.replication, Stream::bootstrap_rds);
  s.bootstrap_rrds = derive_seed(s.replication, Stream::bootstrap_rrds);
  return s;
}

SocialGraph stage_generate(const ScenarioConfig& config, const ReplicationSeeds& seeds) {
  Rng pop_rng = make_rng(seeds.population);
  auto people = generate_population(config.population, pop_rng);
  Rng edge_rng = make_rng(seeds.edges);
  return generate_edges(std::move(people), config.population, edge_rng);
}

std::vector<NodeId> stage_select_seeds(const SocialGraph& graph, const ScenarioConfig& config,
                                       const ReplicationSeeds& seeds) {
  Rng rng = make_rng(seeds.seeds);
  return select_seeds(graph, config.seeds, rng);
}

RecruitmentForest stage_recruit(const SocialGraph& graph, std::span<const NodeId> seed_ids,
                                const ScenarioConfig& config, Method arm,
                                const ReplicationSeeds& seeds) {
  Rng rng = make_rng(seeds.recruit(arm));
  return run_recruitment(graph, seed_ids, config.recruit(arm), arm, rng);
}

std::vector<EstimateReport> stage_estimate(const RecruitmentForest& forest,
                                           const SurveyedSample& sample,
                                           const ScenarioConfig& config, Method arm,
                                           const ReplicationSeeds& seeds) {
  SurveyedSample usable = sample;
  const auto dropped = drop_zero_degree(usable);
  std::string warning;
  if (!dropped.empty()) {
    warning = "excluded " + std::to_string(dropped.size()) + " degree-0 respondent(s)";
  }
  std::vector<EstimateReport> out;
  for (std::size_t a = 0; a < config.attributes.size(); ++a) {
    const std::string& attr = config.attributes[a];
    if (config.estimate_vh) out.push_back(vh_normal_interval(usable, attr, config.level));
    if (config.estimate_treeboot)
      out.push_back(tree_bootstrap(forest, sample, attr, config.bootstrap_reps, config.level,
                                   derive_seed(seeds.bootstrap(arm), a)));
    out.push_back(naive_mean_ci(usable, attr, config.level));
  }
  if (!warning.empty()) {
    for (auto& r : out) {
      if (r.estimator != "treeboot") r.warnings.push_back(warning);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

fs::path replication_dir(const fs::path& out, std::size_t index) {
  return out / fmt::format("rep_{:04d}", index);
}

void write_generate_outputs(const fs::path& dir, const SocialGraph& graph,
                            const ScenarioConfig& config) {
  if (config.write_graph) {
    io::write_file(dir / "nodes.csv", io::nodes_csv(graph));
    io::write_file(dir / "edges.csv", io::edges_csv(graph));
  }
  static const std::vector<std::string> all = {"age", "female", "male"};
  const Baseline baseline = population_baseline(graph.individuals(), all);
  nlohmann::ordered_json j;
  for (const auto& a : all) j[a] = baseline.values.at(a);
  const auto components = component_report(graph);
  nlohmann::ordered_json g;
  g["nodes"] = graph.size();
  g["edges"] = graph.edge_count();
  g["mean_degree"] = graph.mean_degree();
  g["components"] = components.size();
  g["largest_component"] = components.empty() ? 0 : components.front();
  g["gender_assortativity"] = gender_assortativity(graph);
  nlohmann::ordered_json doc;
  doc["baseline"] = j;
  doc["graph"] = g;
  io::write_file(dir / "population.json", doc.dump(2) + "\n");
}

void write_recruit_outputs(const fs::path& dir, const SocialGraph& graph,
                           const RecruitmentForest& forest, const ScenarioConfig& config) {
  const fs::path arm_dir = dir / std::string(to_string(forest.method));
  const auto& rc = config.recruit(forest.method);
  io::write_file(arm_dir / "forest.csv", io::forest_csv(forest));
  io::write_file(arm_dir / "seeds.csv", io::seeds_csv(forest.seeds));
  const auto sample =
      build_sample(forest, graph.individuals(), config.attributes, rc.degree_source);
  io::write_file(arm_dir / "sample.csv", io::sample_csv(sample));
  io::write_file(arm_dir / "waves.csv", io::waves_csv(wave_stats(forest, graph.individuals())));
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(forest.method));
  j["config"] = recruit_json(rc);
  j["seeds"] = forest.seeds.size();
  j["recruits"] = forest.events.size();
  j["last_wave"] = forest.last_wave();
  io::write_file(arm_dir / "recruit.json", j.dump(2) + "\n");
}

void write_estimate_outputs(const fs::path& arm_dir, std::span<const EstimateReport> reports,
                            const ScenarioConfig& config) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    j.push_back(io::to_json(r));
    if (config.write_replicates && r.estimator == "treeboot")
      io::write_file(arm_dir / ("replicates_" + r.attribute + ".csv"), io::replicates_csv(r));
  }
  io::write_file(arm_dir / "estimates.json", j.dump(2) + "\n");
}

ReplicationResult read_replication(const fs::path& out, std::size_t index,
                                   const ScenarioConfig& config) {
  const fs::path dir = replication_dir(out, index);
  ReplicationResult r;
  r.index = index;
  nlohmann::json pop;
  try {
    pop = nlohmann::json::parse(io::read_file(dir / "population.json"));
    for (const auto& [a, v] : pop.at("baseline").items()) r.baseline.values[a] = v.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError((dir / "population.json").string() + ": " + e.what());
  }
  for (Method m : config.arms()) {
    const fs::path arm_dir = dir / std::string(to_string(m));
    ArmResult arm;
    arm.method = m;
    arm.waves = io::read_waves(arm_dir / "waves.csv");
    nlohmann::json est;
    try {
      est = nlohmann::json::parse(io::read_file(arm_dir / "estimates.json"));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError((arm_dir / "estimates.json").string() + ": " + e.what());
    }
    for (const auto& item : est) arm.estimates.push_back(io::estimate_from_json(item));
    r.arms.push_back(std::move(arm));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Aggregation

std::vector<MetricsCell> metrics_grid(std::span<const ReplicationResult> results,
                                      const ScenarioConfig& config) {
  std::vector<MetricsCell> cells;
  for (Method m : config.arms()) {
    for (const auto& estimator : enabled_estimators(config)) {
      MetricsCell cell;
      cell.recruitment = std::string(to_string(m));
      cell.estimator = estimator;
      double rmse_sum = 0.0;
      std::size_t rmse_n = 0;
      Coverage cov;
      for (const auto& rep : results) {
        const ArmResult* arm = find_arm(rep, m);
        if (!arm) continue;
        std::vector<PointEstimate> points;
        std::vector<AttributeInterval> intervals;
        bool scales_ok = true;
        for (const auto& attr : config.attributes) {
          const EstimateReport* e = find_estimate(*arm, estimator, attr);
          if (!e) throw InputError("replication " + std::to_string(rep.index) + " lacks " +
                                   estimator + " estimate for " + attr);
          const double se = e->standard_error();
          scales_ok = scales_ok && se > 0.0 && std::isfinite(se);
          points.push_back({attr, e->point, se});
          intervals.push_back({attr, e->ci_low, e->ci_high});
        }
        cov += ci_coverage(intervals, rep.baseline);
        if (scales_ok) {
          rmse_sum += standardized_rmse(points, rep.baseline);
          ++rmse_n;
        }
      }
      cell.rmse = rmse_n ? rmse_sum / static_cast<double>(rmse_n)
                         : std::numeric_limits<double>::quiet_NaN();
      cell.coverage_count = cov.count;
      cell.coverage_total = cov.total;
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_aggregates(const fs::path& out, std::span<const ReplicationResult> results,
                      const ScenarioConfig& config) {
  // metrics.json
  nlohmann::ordered_json metrics;
  metrics["standardization"] = kRmseConvention;
  metrics["replications"] = results.size();
  metrics["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : metrics_grid(results, config)) {
    nlohmann::ordered_json cell;
    cell["recruitment"] = c.recruitment;
    cell["estimator"] = c.estimator;
    cell["rmse"] = number_or_null(c.rmse);
    cell["coverage_count"] = c.coverage_count;
    cell["coverage_total"] = c.coverage_total;
    cell["coverage_rate"] =
        c.coverage_total ? static_cast<double>(c.coverage_count) / c.coverage_total : 0.0;
    metrics["cells"].push_back(cell);
  }
  io::write_file(out / "metrics.json", metrics.dump(2) + "\n");

  // summary.json and plot_data.csv
  nlohmann::ordered_json summary;
  summary["replications"] = results.size();
  summary["conventions"] = {{"rmse", kRmseConvention}, {"percentile", kPercentileConvention}};
  std::string plot = "wave,method,metric,value\n";
  std::map<Method, double> final_means;
  std::map<Method, double> per_wave_means;
  nlohmann::ordered_json arms_json;
  for (Method m : config.arms()) {
    const std::size_t waves = config.recruit(m).max_waves;
    std::vector<double> finals;
    std::vector<double> per_wave;
    std::vector<std::vector<double>> series(6, std::vector<double>());
    // [metric][wave] -> values across replications
    std::vector<std::vector<std::vector<double>>> by_wave(
        6, std::vector<std::vector<double>>(waves + 1));
    std::map<std::string, Coverage> coverage;
    for (const auto& rep : results) {
      const ArmResult* arm = find_arm(rep, m);
      if (!arm || arm->waves.empty()) continue;
      const auto padded = pad_waves(arm->waves, waves);
      const auto trace = convergence_trace(padded, rep.baseline);
      finals.push_back(static_cast<double>(padded.back().cumulative_n));
      if (waves > 0)
        per_wave.push_back(static_cast<double>(padded.back().cumulative_n - padded[0].new_unique) /
                           static_cast<double>(waves));
      for (std::size_t w = 0; w <= waves && w < padded.size(); ++w) {
        by_wave[0][w].push_back(static_cast<double>(padded[w].new_unique));
        by_wave[1][w].push_back(static_cast<double>(padded[w].cumulative_n));
        by_wave[2][w].push_back(padded[w].mean_age);
        by_wave[3][w].push_back(padded[w].prop_female);
        by_wave[4][w].push_back(trace[w].age_bias);
        by_wave[5][w].push_back(trace[w].female_bias);
      }
      for (const auto& e : arm->estimates) {
        const AttributeInterval ci{e.attribute, e.ci_low, e.ci_high};
        coverage[e.estimator + "." + e.attribute] +=
            ci_coverage(std::span<const AttributeInterval>(&ci, 1), rep.baseline);
      }
    }
    static const std::array<const char*, 6> names = {
        "new_unique", "cumulative_n", "mean_age", "prop_female", "age_bias", "female_bias"};
    nlohmann::ordered_json arm_json;
    const Moments fm = moments(finals);
    const Moments pw = moments(per_wave);
    final_means[m] = fm.mean;
    per_wave_means[m] = pw.mean;
    arm_json["final_size_mean"] = fm.mean;
    arm_json["final_size_sd"] = fm.sd;
    arm_json["new_per_wave_mean"] = pw.mean;
    arm_json["new_per_wave_sd"] = pw.sd;
    nlohmann::ordered_json waves_json;
    for (std::size_t k = 0; k < names.size(); ++k) {
      std::vector<double> means;
      std::vector<double> sds;
      for (std::size_t w = 0; w <= waves; ++w) {
        const Moments mw = moments(by_wave[k][w]);
        means.push_back(mw.mean);
        sds.push_back(mw.sd);
        plot += fmt::format("{},{},{},{}\n", w, to_string(m), names[k], io::format_double(mw.mean));
      }
      waves_json[names[k]] = {{"mean", means}, {"sd", sds}};
    }
    arm_json["waves"] = waves_json;
    nlohmann::ordered_json cov_json;
    for (const auto& [key, cov] : coverage)
      cov_json[key] = {{"count", cov.count}, {"total", cov.total}, {"rate", cov.rate()}};
    arm_json["coverage"] = cov_json;
    arms_json[std::string(to_string(m))] = arm_json;
  }
  summary["arms"] = arms_json;
  if (config.run_rds && config.run_rrds) {
    const double fr = final_means[Method::rds];
    const double pr = per_wave_means[Method::rds];
    summary["ratios"] = {
        {"final_size_rrds_over_rds", number_or_null(fr > 0 ? final_means[Method::rrds] / fr : NAN)},
        {"new_per_wave_rrds_over_rds",
         number_or_null(pr > 0 ? per_wave_means[Method::rrds] / pr : NAN)}};
  }
  io::write_file(out / "summary.json", summary.dump(2) + "\n");
  io::write_file(out / "plot_data.csv", plot);
}

// ---------------------------------------------------------------------------
// Orchestration

std::string sha256_file(const fs::path& path) {
  const std::string bytes = io::read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-256 failed for " + path.string());
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

namespace {

void run_replication(const ScenarioConfig& config, std::size_t index) {
  const auto seeds = ReplicationSeeds::derive(config.master_seed, index);
  const fs::path dir = replication_dir(config.output_dir, index);
  const SocialGraph graph = stage_generate(config, seeds);
  write_generate_outputs(dir, graph, config);
  const auto seed_ids = stage_select_seeds(graph, config, seeds);
  io::write_file(dir / "seeds.csv", io::seeds_csv(seed_ids));
  for (Method m : config.arms()) {
    const auto forest = stage_recruit(graph, seed_ids, config, m, seeds);
    write_recruit_outputs(dir, graph, forest, config);
    const auto sample = build_sample(forest, graph.individuals(), config.attributes,
                                     config.recruit(m).degree_source);
    const auto reports = stage_estimate(forest, sample, config, m, seeds);
    write_estimate_outputs(dir / std::string(to_string(m)), reports, config);
  }
}

}  // namespace

RunManifest run_scenario(const ScenarioConfig& config) {
  config.validate();
  const std::string started = utc_timestamp();
  fs::create_directories(config.output_dir);

  std::vector<std::string> errors(config.reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.reps; i = next++) {
      try {
        run_replication(config, i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t threads = std::min(config.workers, config.reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<ReplicationResult> results;
  for (std::size_t i = 0; i < config.reps; ++i) {
    if (!errors[i].empty()) continue;
    try {
      results.push_back(read_replication(config.output_dir, i, config));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  std::string aggregate_error;
  if (!results.empty()) {
    try {
      write_aggregates(config.output_dir, results, config);
    } catch (const std::exception& e) {
      aggregate_error = e.what();
    }
  }

  RunManifest manifest;
  auto& j = manifest.json;
  j["tool"] = "rrds";
  j["version"] = kToolVersion;
  j["config"] = to_json(config);
  j["started_at"] = started;
  nlohmann::ordered_json reps = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < config.reps; ++i) {
    const auto s = ReplicationSeeds::derive(config.master_seed, i);
    nlohmann::ordered_json r;
    r["index"] = i;
    r["seed"] = s.replication;
    r["status"] = errors[i].empty() ? "ok" : "failed";
    if (!errors[i].empty()) r["error"] = errors[i];
    reps.push_back(r);
    if (!errors[i].empty()) manifest.complete = false;
  }
  if (results.empty() || !aggregate_error.empty()) manifest.complete = false;
  j["replications"] = reps;
  if (!aggregate_error.empty()) j["aggregate_error"] = aggregate_error;
  j["status"] = manifest.complete ? "complete" : "partial";

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(config.output_dir)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
      files.push_back(fs::relative(entry.path(), config.output_dir));
  }
  std::sort(files.begin(), files.end());
  nlohmann::ordered_json inventory = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    inventory.push_back({{"path", f.generic_string()},
                         {"bytes", fs::file_size(config.output_dir / f)},
                         {"sha256", sha256_file(config.output_dir / f)}});
  }
  j["files"] = inventory;
  j["finished_at"] = utc_timestamp();
  io::write_file(config.output_dir / "manifest.json", j.dump(2) + "\n");
  return manifest;
}

}  // namespace rrds
