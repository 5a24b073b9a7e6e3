#include "rrds/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>

#include "rrds/errors.hpp"

namespace rrds {

namespace {

std::uint64_t edge_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

template <typename T>
std::string str(T value) {
  std::ostringstream os;
  os << value;
  return os.str();
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::female ? "female" : "male"; }

Gender parse_gender(std::string_view text) {
  if (text == "female" || text == "F" || text == "f") return Gender::female;
  if (text == "male" || text == "M" || text == "m") return Gender::male;
  throw InputError("unknown gender '" + std::string(text) + "'");
}

void PopulationSpec::validate() const {
  auto fail = [](const char* field, const std::string& why) {
    throw ConfigError(std::string("population.") + field + ": " + why);
  };
  if (!(female_prop >= 0.0 && female_prop <= 1.0))
    fail("female_prop", "must be in [0, 1], got " + str(female_prop));
  if (!(age_min < age_max))
    fail("age_min", "must be below age_max (" + str(age_min) + " >= " + str(age_max) + ")");
  if (!(age_sd > 0.0)) fail("age_sd", "must be positive, got " + str(age_sd));
  if (!std::isfinite(age_mean)) fail("age_mean", "must be finite");
  if (!(target_mean_degree > 0.0))
    fail("mean_degree", "must be positive, got " + str(target_mean_degree));
  if (!(homophily_alpha >= 0.0 && homophily_alpha <= 1.0))
    fail("homophily_alpha", "must be in [0, 1], got " + str(homophily_alpha));
  if (!(age_scale_tau > 0.0))
    fail("age_scale_tau", "must be positive, got " + str(age_scale_tau));
  if (n > std::numeric_limits<NodeId>::max()) fail("n", "too large");
}

SocialGraph::SocialGraph(std::vector<Individual> individuals, std::span<const Edge> edges)
    : individuals_(std::move(individuals)), adjacency_(individuals_.size()) {
  for (std::size_t i = 0; i < individuals_.size(); ++i) {
    if (individuals_[i].id != i)
      throw InputError("individual at position " + std::to_string(i) + " has id " +
                       std::to_string(individuals_[i].id) + "; ids must be 0..n-1 in order");
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    if (a >= size() || b >= size())
      throw InputError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") references an unknown id");
    if (a == b) throw InputError("self-loop at " + std::to_string(a));
    if (!seen.insert(edge_key(a, b)).second)
      throw InputError("duplicate edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
  edge_count_ = edges.size();
}

bool SocialGraph::has_edge(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b)) return false;
  const auto& list = adjacency_[a];
  return std::binary_search(list.begin(), list.end(), b);
}

std::vector<SocialGraph::Edge> SocialGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (NodeId a = 0; a < adjacency_.size(); ++a) {
    for (NodeId b : adjacency_[a]) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  return out;
}

double SocialGraph::mean_degree() const {
  if (individuals_.empty()) return 0.0;
  return 2.0 * static_cast<double>(edge_count_) / static_cast<double>(individuals_.size());
}

std::vector<Individual> generate_population(const PopulationSpec& spec, Rng& rng) {
  spec.validate();
  std::normal_distribution<double> age_dist(spec.age_mean, spec.age_sd);
  std::vector<Individual> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double age = age_dist(rng);
    while (age < spec.age_min || age > spec.age_max) age = age_dist(rng);
    const Gender gender = bernoulli(rng, spec.female_prop) ? Gender::female : Gender::male;
    out.push_back({static_cast<NodeId>(i), age, gender});
  }
  return out;
}

double similarity(const Individual& a, const Individual& b, double tau) {
  const double same = a.gender == b.gender ? 1.0 : 0.0;
  return 0.5 * same + 0.5 * std::exp(-std::abs(a.age - b.age) / tau);
}

std::size_t target_edge_count(std::size_t n, double target_mean_degree) {
  return static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * target_mean_degree / 2.0));
}

SocialGraph generate_edges(std::vector<Individual> population, const PopulationSpec& spec,
                           Rng& rng) {
  spec.validate();
  const std::size_t n = population.size();
  const std::size_t wanted = target_edge_count(n, spec.target_mean_degree);
  const std::size_t max_edges = n < 2 ? 0 : n * (n - 1) / 2;
  if (wanted > max_edges)
    throw ConfigError("population.mean_degree: " + std::to_string(wanted) +
                      " edges requested but a simple graph on " + std::to_string(n) +
                      " nodes holds at most " + std::to_string(max_edges));

  std::vector<SocialGraph::Edge> edges;
  edges.reserve(wanted);
  std::unordered_set<std::uint64_t> present;
  present.reserve(wanted * 2);
  const double alpha = spec.homophily_alpha;
  while (edges.size() < wanted) {
    // Ordered distinct pair, uniform; hence a uniform unordered pair.
    auto a = static_cast<NodeId>(uniform_index(rng, n));
    auto b = static_cast<NodeId>(uniform_index(rng, n - 1));
    if (b >= a) ++b;
    const double accept =
        alpha * similarity(population[a], population[b], spec.age_scale_tau) + (1.0 - alpha);
    if (!bernoulli(rng, accept)) continue;
    if (!present.insert(edge_key(a, b)).second) continue;
    edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  return SocialGraph(std::move(population), edges);
}

std::vector<std::size_t> component_report(const SocialGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<bool> visited(n, false);
  std::vector<std::size_t> sizes;
  std::vector<NodeId> stack;
  for (NodeId start = 0; start < n; ++start) {
    if (visited[start]) continue;
    std::size_t count = 0;
    visited[start] = true;
    stack.push_back(start);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      ++count;
      for (NodeId w : graph.neighbors(v)) {
        if (!visited[w]) {
          visited[w] = true;
          stack.push_back(w);
        }
      }
    }
    sizes.push_back(count);
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

double gender_assortativity(const SocialGraph& graph) {
  if (graph.edge_count() == 0) return 0.0;
  // Symmetric mixing matrix over ordered edge ends.
  double mix[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (const auto& [a, b] : graph.edges()) {
    const auto ga = static_cast<int>(graph.individual(a).gender);
    const auto gb = static_cast<int>(graph.individual(b).gender);
    mix[ga][gb] += 1.0;
    mix[gb][ga] += 1.0;
  }
  const double total = 2.0 * static_cast<double>(graph.edge_count());
  double trace = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < 2; ++i) {
    trace += mix[i][i] / total;
    const double row = (mix[i][0] + mix[i][1]) / total;
    sum_sq += row * row;
  }
  if (sum_sq >= 1.0) return 0.0;
  return (trace - sum_sq) / (1.0 - sum_sq);
}

}  // namespace rrds
