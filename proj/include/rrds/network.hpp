#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rrds/rng.hpp"

namespace rrds {

using NodeId = std::uint32_t;

enum class Gender : std::uint8_t { female, male };

std::string_view to_string(Gender g);
Gender parse_gender(std::string_view text);

struct Individual {
  NodeId id = 0;
  double age = 0.0;
  Gender gender = Gender::female;

  bool female() const { return gender == Gender::female; }
};

struct PopulationSpec {
  std::size_t n = 10000;
  double age_mean = 41.5;
  double age_sd = 10.0;
  double age_min = 18.0;
  double age_max = 65.0;
  double female_prop = 0.70;
  double target_mean_degree = 2.0;
  double homophily_alpha = 0.9;
  double age_scale_tau = 5.0;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Undirected simple graph over a population whose ids are 0..n-1.
/// Immutable once built; adjacency lists are sorted ascending.
class SocialGraph {
 public:
  using Edge = std::pair<NodeId, NodeId>;

  SocialGraph() = default;

  /// Builds from an edge list. Throws InputError on self-loops, duplicate
  /// edges, out-of-range endpoints, or ids that are not 0..n-1 in order.
  SocialGraph(std::vector<Individual> individuals, std::span<const Edge> edges);

  std::size_t size() const { return individuals_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  const std::vector<Individual>& individuals() const { return individuals_; }
  const Individual& individual(NodeId id) const { return individuals_.at(id); }
  bool contains(NodeId id) const { return id < individuals_.size(); }

  std::span<const NodeId> neighbors(NodeId id) const { return adjacency_.at(id); }
  std::size_t degree(NodeId id) const { return adjacency_.at(id).size(); }
  bool has_edge(NodeId a, NodeId b) const;

  /// Each edge once as (lo, hi), sorted lexicographically.
  std::vector<Edge> edges() const;

  double mean_degree() const;

 private:
  std::vector<Individual> individuals_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Truncated-normal ages (rejection re-draw) and Bernoulli genders.
std::vector<Individual> generate_population(const PopulationSpec& spec, Rng& rng);

/// 0.5 * [same gender] + 0.5 * exp(-|age gap| / tau).
double similarity(const Individual& a, const Individual& b, double tau);

/// Number of edges generate_edges will place: floor(n * target / 2).
std::size_t target_edge_count(std::size_t n, double target_mean_degree);

/// Homophily-biased Erdos-Renyi: uniform candidate pairs accepted with
/// probability alpha * similarity + (1 - alpha) until the edge target is met.
SocialGraph generate_edges(std::vector<Individual> population, const PopulationSpec& spec,
                           Rng& rng);

/// Connected component sizes, largest first.
std::vector<std::size_t> component_report(const SocialGraph& graph);

/// Newman's categorical assortativity coefficient for gender. Returns 0 for
/// graphs without edges or with a single gender present.
double gender_assortativity(const SocialGraph& graph);

}  // namespace rrds
