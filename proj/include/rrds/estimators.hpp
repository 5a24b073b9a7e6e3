#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrds/network.hpp"
#include "rrds/recruitment.hpp"

namespace rrds {

/// One surveyed respondent: reported degree and attribute values in the
/// column order of SurveyedSample::attributes.
struct SampleRecord {
  NodeId id = 0;
  std::size_t degree = 0;
  std::vector<double> values;
};

struct SurveyedSample {
  std::vector<std::string> attributes;
  std::vector<SampleRecord> records;

  /// Column index of `name`; throws InputError if absent.
  std::size_t attribute_index(std::string_view name) const;
  /// Throws InputError on duplicate ids or ragged rows.
  void validate() const;
};

/// Attribute value read off an Individual. Known names: age, female, male.
double attribute_value(const Individual& person, std::string_view attribute);
bool is_known_attribute(std::string_view attribute);

/// Sample of everyone in the forest, in survey order, using the degrees the
/// engine recorded. Requires forest.surveys to be populated.
SurveyedSample build_sample(const RecruitmentForest& forest,
                            std::span<const Individual> population,
                            std::span<const std::string> attributes, DegreeSource source);

/// Drops records with degree 0 (the estimator is undefined there).
/// Returns the ids removed.
std::vector<NodeId> drop_zero_degree(SurveyedSample& sample);

/// Volz-Heckathorn: sum(x/d) / sum(1/d).
double vh_estimate(const SurveyedSample& sample, std::string_view attribute);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Two-sided standard normal critical value for a confidence level.
double normal_critical_value(double level);

/// Sort replicates carrying their weights, normalize weights, and take the
/// first replicate whose cumulative weight reaches (1-level)/2, respectively
/// 1-(1-level)/2. Cumulative comparisons allow a relative slack of 1e-12.
Interval weighted_percentile_ci(std::span<const double> replicates,
                                std::span<const double> weights, double level);

struct EstimateReport {
  std::string attribute;
  std::string estimator;
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  /// Bootstrap replicate count; 0 for closed-form estimators.
  std::size_t bootstrap_reps = 0;
  std::vector<double> replicates;
  std::vector<double> weights;
  std::vector<std::string> warnings;

  /// Standard error implied by the interval: half-width over the critical value.
  double standard_error() const;
};

/// Hierarchical resampling of the recruitment trees: seeds with replacement,
/// then for every drawn node |C(s)| draws with replacement from its original
/// children, level by level. Replicate b uses the substream derive_seed(seed, b).
EstimateReport tree_bootstrap(const RecruitmentForest& forest, const SurveyedSample& sample,
                              std::string_view attribute, std::size_t replicates, double level,
                              std::uint64_t seed);

/// VH point estimate with an interval that treats respondents as independent
/// draws: point +/- z * sd / sqrt(n).
EstimateReport vh_normal_interval(const SurveyedSample& sample, std::string_view attribute,
                                  double level);

/// Unweighted mean +/- z * sd / sqrt(n), sd with n-1 denominator. For n = 1 the
/// interval collapses to the point and a warning is attached.
EstimateReport naive_mean_ci(const SurveyedSample& sample, std::string_view attribute,
                             double level);

}  // namespace rrds
