#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rrds/network.hpp"
#include "rrds/rng.hpp"

namespace rrds {

enum class Method { rds, rrds };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

/// How a respondent's contact list relates to their neighborhood.
struct NominationMode {
  enum class Kind { exhaustive, approx_exhaustive, selective };

  Kind kind = Kind::exhaustive;
  /// Dropout probability for approx_exhaustive, inclusion probability for
  /// selective; unused for exhaustive.
  double prob = 0.0;

  static NominationMode exhaustive() { return {Kind::exhaustive, 0.0}; }
  static NominationMode approx_exhaustive(double dropout) {
    return {Kind::approx_exhaustive, dropout};
  }
  static NominationMode selective(double inclusion) { return {Kind::selective, inclusion}; }

  void validate() const;
};

std::string_view to_string(NominationMode::Kind k);
NominationMode::Kind parse_nomination_kind(std::string_view text);

struct NominationList {
  NodeId respondent = 0;
  std::vector<NodeId> contacts;
  NominationMode mode;
};

/// Which quantity is carried forward as the respondent's reported degree.
enum class DegreeSource {
  network,     // true graph degree k_i
  nomination,  // contact-list length m_i
};

std::string_view to_string(DegreeSource s);
DegreeSource parse_degree_source(std::string_view text);

/// Which contacts a homophilic RDS referral slot may take.
enum class HomophilicPool {
  /// Only contacts sharing the recruiter's gender; the slot goes unused when
  /// none remain.
  same_gender,
  /// The top-ranked remaining contact of either gender.
  any,
};

std::string_view to_string(HomophilicPool p);
HomophilicPool parse_homophilic_pool(std::string_view text);

struct SeedSpec {
  std::size_t count = 76;
  std::optional<Gender> gender;
  /// Strict upper bound on age.
  std::optional<double> max_age;
  /// When fewer than `count` individuals pass the age bound, top up with the
  /// youngest individuals of the requested gender instead of failing.
  bool fill_with_youngest = false;

  void validate() const;
};

struct RecruitConfig {
  std::size_t max_recruits = 3;
  std::size_t max_waves = 12;
  /// Per-slot probability of homophilic choice; RDS only.
  double selection_alpha = 0.9;
  HomophilicPool homophilic_pool = HomophilicPool::same_gender;
  NominationMode nomination = NominationMode::exhaustive();
  DegreeSource degree_source = DegreeSource::network;

  void validate() const;
};

struct RecruitEvent {
  std::size_t wave = 0;
  NodeId recruiter = 0;
  NodeId recruit = 0;

  friend bool operator==(const RecruitEvent&, const RecruitEvent&) = default;
};

/// What the survey recorded about one respondent.
struct SurveyRecord {
  NodeId id = 0;
  std::size_t wave = 0;
  std::size_t network_degree = 0;
  std::size_t list_size = 0;

  std::size_t reported_degree(DegreeSource source) const {
    return source == DegreeSource::network ? network_degree : list_size;
  }
};

/// Recruitment trees rooted at the seeds. Seeds are wave 0.
struct RecruitmentForest {
  Method method = Method::rrds;
  std::vector<NodeId> seeds;
  std::vector<RecruitEvent> events;
  /// Filled by the engine in survey order; empty for forests loaded from disk.
  std::vector<SurveyRecord> surveys;

  /// Seeds, then recruits in event order.
  std::vector<NodeId> surveyed_ids() const;
  std::size_t sample_size() const { return seeds.size() + events.size(); }
  std::size_t last_wave() const;

  /// Children of each recruiter, in event order.
  std::unordered_map<NodeId, std::vector<NodeId>> children() const;

  /// Throws InputError if the forest violates its structural invariants:
  /// unique recruits, seeds never recruited, recruiter surveyed in the
  /// previous wave.
  void validate() const;
  /// Additionally checks that every forest edge is a graph edge.
  void validate(const SocialGraph& graph) const;
};

/// Uniform sample without replacement of the individuals passing the filters.
std::vector<NodeId> select_seeds(const SocialGraph& graph, const SeedSpec& spec, Rng& rng);

NominationList nominate(NodeId respondent, const SocialGraph& graph, const NominationMode& mode,
                        Rng& rng);

/// True when `a` ranks ahead of `b` as a referral for `recruiter`: same gender
/// first, then smaller age gap, then smaller id.
bool more_similar(const Individual& recruiter, const Individual& a, const Individual& b);

/// Homophilic selection over min(max_k, |eligible|) slots. Each slot, with
/// probability alpha, takes the top-ranked remaining candidate (under
/// HomophilicPool::same_gender only if that candidate shares the recruiter's
/// gender, else the slot is lost); otherwise it takes a uniformly random
/// remaining candidate.
std::vector<NodeId> rds_select(const Individual& recruiter, std::span<const Individual> eligible,
                               double alpha, std::size_t max_k, Rng& rng,
                               HomophilicPool pool = HomophilicPool::same_gender);

/// Uniform subset of size min(max_k, |eligible|), without replacement.
std::vector<NodeId> rrds_select(std::span<const NodeId> eligible, std::size_t max_k, Rng& rng);

RecruitmentForest run_recruitment(const SocialGraph& graph, std::span<const NodeId> seeds,
                                  const RecruitConfig& config, Method method, Rng& rng);

}  // namespace rrds
