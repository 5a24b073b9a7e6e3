#include "rrds/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/binomial.hpp>

#include "rrds/errors.hpp"
#include "rrds/estimators.hpp"

namespace rrds {

double Baseline::at(const std::string& attribute) const {
  auto it = values.find(attribute);
  if (it == values.end()) throw InputError("no baseline for attribute '" + attribute + "'");
  return it->second;
}

Baseline population_baseline(std::span<const Individual> population,
                             std::span<const std::string> attributes) {
  if (population.empty()) throw EstimationError("baseline of an empty population");
  Baseline out;
  for (const auto& a : attributes) {
    double sum = 0.0;
    for (const auto& person : population) sum += attribute_value(person, a);
    out.values[a] = sum / static_cast<double>(population.size());
  }
  return out;
}

std::vector<WaveStats> wave_stats(const RecruitmentForest& forest,
                                  std::span<const Individual> population) {
  std::vector<WaveStats> out;
  if (forest.seeds.empty()) return out;

  const std::size_t waves = forest.last_wave();
  std::vector<std::vector<NodeId>> by_wave(waves + 1);
  by_wave[0] = forest.seeds;
  for (const auto& e : forest.events) by_wave[e.wave].push_back(e.recruit);

  double age_sum = 0.0;
  double female_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t w = 0; w <= waves; ++w) {
    for (NodeId id : by_wave[w]) {
      if (id >= population.size())
        throw InputError("forest id " + std::to_string(id) + " not in population");
      age_sum += population[id].age;
      female_sum += population[id].female() ? 1.0 : 0.0;
    }
    n += by_wave[w].size();
    WaveStats s;
    s.wave = w;
    s.new_unique = by_wave[w].size();
    s.cumulative_n = n;
    s.mean_age = n ? age_sum / static_cast<double>(n) : 0.0;
    s.prop_female = n ? female_sum / static_cast<double>(n) : 0.0;
    out.push_back(s);
  }
  return out;
}

std::vector<WaveStats> pad_waves(std::vector<WaveStats> stats, std::size_t waves) {
  if (stats.empty()) return stats;
  while (stats.size() < waves + 1) {
    WaveStats s = stats.back();
    s.wave += 1;
    s.new_unique = 0;
    stats.push_back(s);
  }
  return stats;
}

double se_from_interval(double lo, double hi, double level) {
  return (hi - lo) / 2.0 / normal_critical_value(level);
}

double standardized_rmse(std::span<const PointEstimate> estimates, const Baseline& baseline) {
  if (estimates.empty()) throw InputError("standardized RMSE of no estimates");
  double sum_sq = 0.0;
  for (const auto& e : estimates) {
    const double truth = baseline.at(e.attribute);
    double scale = 0.0;
    if (e.se) {
      scale = *e.se;
    } else if (auto it = baseline.scales.find(e.attribute); it != baseline.scales.end()) {
      scale = it->second;
    } else {
      throw InputError("no standardization scale for attribute '" + e.attribute + "'");
    }
    if (!(scale > 0.0))
      throw InputError("nonpositive standardization scale for attribute '" + e.attribute + "'");
    const double z = (e.point - truth) / scale;
    sum_sq += z * z;
  }
  return std::sqrt(sum_sq / static_cast<double>(estimates.size()));
}

Coverage ci_coverage(std::span<const AttributeInterval> intervals, const Baseline& baseline) {
  Coverage out;
  for (const auto& ci : intervals) {
    if (ci.lo > ci.hi)
      throw InputError("interval for '" + ci.attribute + "' has lo > hi");
    const double truth = baseline.at(ci.attribute);
    if (ci.lo <= truth && truth <= ci.hi) ++out.count;
    ++out.total;
  }
  return out;
}

std::vector<ConvergencePoint> convergence_trace(std::span<const WaveStats> stats,
                                                const Baseline& baseline) {
  const double age = baseline.at("age");
  const double female = baseline.at("female");
  std::vector<ConvergencePoint> out;
  out.reserve(stats.size());
  for (const auto& s : stats)
    out.push_back({s.wave, std::abs(s.mean_age - age), std::abs(s.prop_female - female)});
  return out;
}

double sign_test_p_value(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0 || wins == 0) return 1.0;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(wins - 1)));
}

}  // namespace rrds
