#include "rrds/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <boost/math/distributions/normal.hpp>

#include "rrds/errors.hpp"
#include "rrds/rng.hpp"

namespace rrds {

namespace {

std::string join_ids(std::span<const NodeId> ids, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
    if (i) out += ", ";
    out += std::to_string(ids[i]);
  }
  if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("level: must be in (0, 1), got " + std::to_string(level));
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(std::span<const double> xs) {
  MeanSd out;
  if (xs.empty()) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::vector<double> column(const SurveyedSample& sample, std::string_view attribute) {
  const std::size_t col = sample.attribute_index(attribute);
  std::vector<double> xs;
  xs.reserve(sample.records.size());
  for (const auto& r : sample.records) xs.push_back(r.values[col]);
  return xs;
}

}  // namespace

std::size_t SurveyedSample::attribute_index(std::string_view name) const {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i] == name) return i;
  }
  throw InputError("sample has no attribute '" + std::string(name) + "'");
}

void SurveyedSample::validate() const {
  std::unordered_set<NodeId> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second)
      throw InputError("sample lists id " + std::to_string(r.id) + " twice");
    if (r.values.size() != attributes.size())
      throw InputError("sample record " + std::to_string(r.id) + " has " +
                       std::to_string(r.values.size()) + " values for " +
                       std::to_string(attributes.size()) + " attributes");
  }
}

bool is_known_attribute(std::string_view attribute) {
  return attribute == "age" || attribute == "female" || attribute == "male";
}

double attribute_value(const Individual& person, std::string_view attribute) {
  if (attribute == "age") return person.age;
  if (attribute == "female") return person.female() ? 1.0 : 0.0;
  if (attribute == "male") return person.female() ? 0.0 : 1.0;
  throw ConfigError("unknown attribute '" + std::string(attribute) + "'");
}

SurveyedSample build_sample(const RecruitmentForest& forest,
                            std::span<const Individual> population,
                            std::span<const std::string> attributes, DegreeSource source) {
  if (forest.surveys.size() != forest.sample_size())
    throw InputError("forest carries no survey records; build the sample from a file instead");
  SurveyedSample sample;
  sample.attributes.assign(attributes.begin(), attributes.end());
  sample.records.reserve(forest.surveys.size());
  for (const auto& s : forest.surveys) {
    if (s.id >= population.size())
      throw InputError("surveyed id " + std::to_string(s.id) + " not in population");
    SampleRecord rec{s.id, s.reported_degree(source), {}};
    for (const auto& a : attributes) rec.values.push_back(attribute_value(population[s.id], a));
    sample.records.push_back(std::move(rec));
  }
  return sample;
}

std::vector<NodeId> drop_zero_degree(SurveyedSample& sample) {
  std::vector<NodeId> dropped;
  std::erase_if(sample.records, [&](const SampleRecord& r) {
    if (r.degree >= 1) return false;
    dropped.push_back(r.id);
    return true;
  });
  return dropped;
}

double vh_estimate(const SurveyedSample& sample, std::string_view attribute) {
  if (sample.records.empty()) throw EstimationError("VH estimate of an empty sample");
  const std::size_t col = sample.attribute_index(attribute);
  std::vector<NodeId> bad;
  for (const auto& r : sample.records) {
    if (r.degree < 1) bad.push_back(r.id);
  }
  if (!bad.empty()) throw InputError("degree below 1 for ids: " + join_ids(bad));
  // Accumulate deviations from the first value so a constant attribute
  // comes back exactly.
  const double ref = sample.records.front().values[col];
  double num = 0.0;
  double den = 0.0;
  for (const auto& r : sample.records) {
    const double inv = 1.0 / static_cast<double>(r.degree);
    num += (r.values[col] - ref) * inv;
    den += inv;
  }
  return ref + num / den;
}

double normal_critical_value(double level) {
  check_level(level);
  return boost::math::quantile(boost::math::normal(), 1.0 - (1.0 - level) / 2.0);
}

Interval weighted_percentile_ci(std::span<const double> replicates,
                                std::span<const double> weights, double level) {
  check_level(level);
  if (replicates.empty()) throw InputError("weighted percentile of no replicates");
  if (replicates.size() != weights.size())
    throw InputError("replicate/weight length mismatch: " + std::to_string(replicates.size()) +
                     " vs " + std::to_string(weights.size()));
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InputError("bootstrap weights must be positive");
    total += w;
  }

  std::vector<std::size_t> order(replicates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return replicates[a] < replicates[b]; });

  constexpr double slack = 1e-12;
  const double lo_target = (1.0 - level) / 2.0;
  const double hi_target = 1.0 - lo_target;
  Interval out{replicates[order.back()], replicates[order.back()]};
  bool have_lo = false;
  double cum = 0.0;
  for (std::size_t idx : order) {
    cum += weights[idx] / total;
    if (!have_lo && cum >= lo_target - slack) {
      out.lo = replicates[idx];
      have_lo = true;
    }
    if (cum >= hi_target - slack) {
      out.hi = replicates[idx];
      break;
    }
  }
  return out;
}

double EstimateReport::standard_error() const {
  return (ci_high - ci_low) / 2.0 / normal_critical_value(level);
}

EstimateReport tree_bootstrap(const RecruitmentForest& forest, const SurveyedSample& sample,
                              std::string_view attribute, std::size_t replicates, double level,
                              std::uint64_t seed) {
  if (replicates < 1) throw ConfigError("bootstrap_reps: must be at least 1");
  check_level(level);
  forest.validate();
  sample.validate();
  const std::size_t col = sample.attribute_index(attribute);

  std::unordered_map<NodeId, const SampleRecord*> by_id;
  for (const auto& r : sample.records) by_id.emplace(r.id, &r);

  // Dense local numbering over forest nodes.
  const std::vector<NodeId> nodes = forest.surveyed_ids();
  std::unordered_map<NodeId, std::size_t> local;
  std::vector<NodeId> missing;
  for (NodeId id : nodes) {
    local.emplace(id, local.size());
    if (!by_id.contains(id)) missing.push_back(id);
  }
  if (!missing.empty())
    throw InputError("forest nodes without a sample record: " + join_ids(missing));

  const std::size_t m = nodes.size();
  std::vector<double> value(m);
  std::vector<double> inv_degree(m);
  std::vector<char> excluded(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const SampleRecord& rec = *by_id.at(nodes[i]);
    value[i] = rec.values[col];
    inv_degree[i] = rec.degree >= 1 ? 1.0 / static_cast<double>(rec.degree) : 0.0;
    excluded[i] = rec.degree < 1;
  }

  std::vector<std::vector<std::size_t>> kids(m);
  for (const auto& e : forest.events) {
    const std::size_t parent = local.at(e.recruiter);
    const std::size_t child = local.at(e.recruit);
    if (excluded[parent])
      throw InputError("respondent " + std::to_string(e.recruiter) +
                       " has degree 0 but recruited " + std::to_string(e.recruit));
    if (!excluded[child]) kids[parent].push_back(child);
  }

  EstimateReport report;
  report.attribute = std::string(attribute);
  report.estimator = "treeboot";
  report.level = level;
  report.bootstrap_reps = replicates;

  std::vector<std::size_t> roots;
  std::vector<NodeId> dropped;
  for (NodeId s : forest.seeds) {
    const std::size_t i = local.at(s);
    if (excluded[i]) {
      dropped.push_back(s);
    } else {
      roots.push_back(i);
    }
  }
  for (const auto& e : forest.events) {
    if (excluded[local.at(e.recruit)]) dropped.push_back(e.recruit);
  }
  if (!dropped.empty())
    report.warnings.push_back("excluded degree-0 respondents: " + join_ids(dropped));
  if (roots.empty()) throw EstimationError("no seed with positive degree; cannot bootstrap");

  // Same centering as vh_estimate.
  const double ref = value[roots.front()];
  for (double& v : value) v -= ref;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    num += value[i] * inv_degree[i];
    den += inv_degree[i];
  }
  report.point = ref + num / den;

  report.replicates.reserve(replicates);
  report.weights.reserve(replicates);
  std::vector<std::size_t> frontier;
  std::vector<std::size_t> next;
  for (std::size_t b = 0; b < replicates; ++b) {
    Rng rng(derive_seed(seed, b));
    num = 0.0;
    den = 0.0;
    frontier.clear();
    for (std::size_t k = 0; k < roots.size(); ++k)
      frontier.push_back(roots[uniform_index(rng, roots.size())]);
    while (!frontier.empty()) {
      next.clear();
      for (std::size_t node : frontier) {
        num += value[node] * inv_degree[node];
        den += inv_degree[node];
        const auto& c = kids[node];
        for (std::size_t k = 0; k < c.size(); ++k) next.push_back(c[uniform_index(rng, c.size())]);
      }
      frontier.swap(next);
    }
    report.replicates.push_back(ref + num / den);
    report.weights.push_back(den);
  }

  const Interval ci = weighted_percentile_ci(report.replicates, report.weights, level);
  report.ci_low = ci.lo;
  report.ci_high = ci.hi;
  return report;
}

EstimateReport vh_normal_interval(const SurveyedSample& sample, std::string_view attribute,
                                  double level) {
  check_level(level);
  EstimateReport report;
  report.attribute = std::string(attribute);
  report.estimator = "vh";
  report.level = level;
  report.point = vh_estimate(sample, attribute);
  const auto xs = column(sample, attribute);
  const double half =
      normal_critical_value(level) * mean_sd(xs).sd / std::sqrt(static_cast<double>(xs.size()));
  report.ci_low = report.point - half;
  report.ci_high = report.point + half;
  if (xs.size() == 1) report.warnings.push_back("interval width undefined for n = 1");
  return report;
}

EstimateReport naive_mean_ci(const SurveyedSample& sample, std::string_view attribute,
                             double level) {
  check_level(level);
  if (sample.records.empty()) throw EstimationError("mean of an empty sample");
  EstimateReport report;
  report.attribute = std::string(attribute);
  report.estimator = "naive";
  report.level = level;
  const auto xs = column(sample, attribute);
  const MeanSd ms = mean_sd(xs);
  report.point = ms.mean;
  const double half =
      normal_critical_value(level) * ms.sd / std::sqrt(static_cast<double>(xs.size()));
  report.ci_low = ms.mean - half;
  report.ci_high = ms.mean + half;
  if (xs.size() == 1) report.warnings.push_back("interval width undefined for n = 1");
  return report;
}

}  // namespace rrds
