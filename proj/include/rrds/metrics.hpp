#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrds/network.hpp"
#include "rrds/recruitment.hpp"

namespace rrds {

/// Per-wave recruitment summary; demographics are cumulative through `wave`.
struct WaveStats {
  std::size_t wave = 0;
  std::size_t new_unique = 0;
  std::size_t cumulative_n = 0;
  double mean_age = 0.0;
  double prop_female = 0.0;
};

/// Known population values per attribute, with optional standardization scales.
struct Baseline {
  std::map<std::string, double> values;
  std::map<std::string, double> scales;

  /// Throws InputError if `attribute` has no baseline value.
  double at(const std::string& attribute) const;
};

/// Population means of the named attributes.
Baseline population_baseline(std::span<const Individual> population,
                             std::span<const std::string> attributes);

struct PointEstimate {
  std::string attribute;
  double point = 0.0;
  /// Standardization scale; falls back to Baseline::scales when absent.
  std::optional<double> se;
};

struct AttributeInterval {
  std::string attribute;
  double lo = 0.0;
  double hi = 0.0;
};

struct Coverage {
  std::size_t count = 0;
  std::size_t total = 0;

  double rate() const { return total == 0 ? 0.0 : static_cast<double>(count) / total; }
  Coverage& operator+=(const Coverage& other) {
    count += other.count;
    total += other.total;
    return *this;
  }
};

struct ConvergencePoint {
  std::size_t wave = 0;
  double age_bias = 0.0;
  double female_bias = 0.0;
};

/// One Table-1 style cell.
struct MetricsCell {
  std::string recruitment;
  std::string estimator;
  double rmse = 0.0;
  std::size_t coverage_count = 0;
  std::size_t coverage_total = 0;
};

/// Wave 0 is the seeds. Waves run through the last wave with a recruit.
std::vector<WaveStats> wave_stats(const RecruitmentForest& forest,
                                  std::span<const Individual> population);

/// Pads a wave trace to `waves` entries past wave 0 by carrying the final
/// cumulative values forward with zero new recruits.
std::vector<WaveStats> pad_waves(std::vector<WaveStats> stats, std::size_t waves);

/// Half-width of a CI divided by the normal critical value at `level`.
double se_from_interval(double lo, double hi, double level);

/// sqrt(mean_v ((point_v - baseline_v) / scale_v)^2).
double standardized_rmse(std::span<const PointEstimate> estimates, const Baseline& baseline);

Coverage ci_coverage(std::span<const AttributeInterval> intervals, const Baseline& baseline);

/// |cumulative statistic - baseline| per wave. Baseline keys: "age", "female".
std::vector<ConvergencePoint> convergence_trace(std::span<const WaveStats> stats,
                                                const Baseline& baseline);

/// One-sided exact sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
/// Returns 1 when there are no discordant pairs.
double sign_test_p_value(std::size_t wins, std::size_t losses);

}  // namespace rrds
