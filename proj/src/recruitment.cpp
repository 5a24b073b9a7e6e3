#include "rrds/recruitment.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "rrds/errors.hpp"

namespace rrds {

std::string_view to_string(Method m) { return m == Method::rds ? "rds" : "rrds"; }

Method parse_method(std::string_view text) {
  if (text == "rds" || text == "RDS") return Method::rds;
  if (text == "rrds" || text == "RRDS") return Method::rrds;
  throw ConfigError("unknown recruitment method '" + std::string(text) + "'");
}

std::string_view to_string(NominationMode::Kind k) {
  switch (k) {
    case NominationMode::Kind::exhaustive: return "exhaustive";
    case NominationMode::Kind::approx_exhaustive: return "approx_exhaustive";
    case NominationMode::Kind::selective: return "selective";
  }
  return "?";
}

NominationMode::Kind parse_nomination_kind(std::string_view text) {
  if (text == "exhaustive") return NominationMode::Kind::exhaustive;
  if (text == "approx_exhaustive") return NominationMode::Kind::approx_exhaustive;
  if (text == "selective") return NominationMode::Kind::selective;
  throw ConfigError("unknown nomination mode '" + std::string(text) + "'");
}

std::string_view to_string(DegreeSource s) {
  return s == DegreeSource::network ? "network" : "nomination";
}

DegreeSource parse_degree_source(std::string_view text) {
  if (text == "network") return DegreeSource::network;
  if (text == "nomination") return DegreeSource::nomination;
  throw ConfigError("unknown degree source '" + std::string(text) + "'");
}

std::string_view to_string(HomophilicPool p) {
  return p == HomophilicPool::same_gender ? "same_gender" : "any";
}

HomophilicPool parse_homophilic_pool(std::string_view text) {
  if (text == "same_gender") return HomophilicPool::same_gender;
  if (text == "any") return HomophilicPool::any;
  throw ConfigError("unknown homophilic pool '" + std::string(text) + "'");
}

void NominationMode::validate() const {
  if (kind != Kind::exhaustive && !(prob >= 0.0 && prob <= 1.0))
    throw ConfigError("nomination_prob: must be in [0, 1], got " + std::to_string(prob));
}

void SeedSpec::validate() const {
  if (count < 1) throw ConfigError("seeds.count: must be at least 1");
}

void RecruitConfig::validate() const {
  if (max_recruits < 1) throw ConfigError("max_recruits: must be at least 1");
  if (!(selection_alpha >= 0.0 && selection_alpha <= 1.0))
    throw ConfigError("selection_alpha: must be in [0, 1], got " +
                      std::to_string(selection_alpha));
  nomination.validate();
}

std::vector<NodeId> RecruitmentForest::surveyed_ids() const {
  std::vector<NodeId> out(seeds);
  out.reserve(seeds.size() + events.size());
  for (const auto& e : events) out.push_back(e.recruit);
  return out;
}

std::size_t RecruitmentForest::last_wave() const {
  std::size_t w = 0;
  for (const auto& e : events) w = std::max(w, e.wave);
  return w;
}

std::unordered_map<NodeId, std::vector<NodeId>> RecruitmentForest::children() const {
  std::unordered_map<NodeId, std::vector<NodeId>> out;
  for (const auto& e : events) out[e.recruiter].push_back(e.recruit);
  return out;
}

void RecruitmentForest::validate() const {
  std::unordered_map<NodeId, std::size_t> wave_of;
  for (NodeId s : seeds) {
    if (!wave_of.emplace(s, 0).second)
      throw InputError("seed " + std::to_string(s) + " listed twice");
  }
  // Events may arrive in any order across waves; check in wave order.
  std::vector<RecruitEvent> ordered(events);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.wave < b.wave; });
  for (const auto& e : ordered) {
    if (e.wave < 1) throw InputError("recruit " + std::to_string(e.recruit) + " has wave 0");
    auto parent = wave_of.find(e.recruiter);
    if (parent == wave_of.end())
      throw InputError("recruiter " + std::to_string(e.recruiter) + " of " +
                       std::to_string(e.recruit) + " was never surveyed");
    if (parent->second + 1 != e.wave)
      throw InputError("recruiter " + std::to_string(e.recruiter) + " (wave " +
                       std::to_string(parent->second) + ") cannot recruit in wave " +
                       std::to_string(e.wave));
    if (!wave_of.emplace(e.recruit, e.wave).second)
      throw InputError("individual " + std::to_string(e.recruit) + " recruited twice");
  }
}

void RecruitmentForest::validate(const SocialGraph& graph) const {
  validate();
  for (NodeId s : seeds) {
    if (!graph.contains(s)) throw InputError("seed " + std::to_string(s) + " not in graph");
  }
  for (const auto& e : events) {
    if (!graph.has_edge(e.recruiter, e.recruit))
      throw InputError("forest edge (" + std::to_string(e.recruiter) + "," +
                       std::to_string(e.recruit) + ") is not a graph edge");
  }
}

std::vector<NodeId> select_seeds(const SocialGraph& graph, const SeedSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<NodeId> qualifying;
  std::vector<NodeId> gender_only;
  for (const auto& person : graph.individuals()) {
    if (spec.gender && person.gender != *spec.gender) continue;
    if (spec.max_age && !(person.age < *spec.max_age)) {
      gender_only.push_back(person.id);
      continue;
    }
    qualifying.push_back(person.id);
  }

  if (qualifying.size() < spec.count) {
    const std::size_t shortfall = spec.count - qualifying.size();
    if (!spec.fill_with_youngest || gender_only.size() < shortfall)
      throw InsufficientSeedsError(
          spec.count, qualifying.size() + (spec.fill_with_youngest ? gender_only.size() : 0));
    std::sort(gender_only.begin(), gender_only.end(), [&](NodeId a, NodeId b) {
      const double age_a = graph.individual(a).age;
      const double age_b = graph.individual(b).age;
      return age_a != age_b ? age_a < age_b : a < b;
    });
    qualifying.insert(qualifying.end(), gender_only.begin(),
                      gender_only.begin() + static_cast<std::ptrdiff_t>(shortfall));
  }

  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::size_t j = i + uniform_index(rng, qualifying.size() - i);
    std::swap(qualifying[i], qualifying[j]);
  }
  qualifying.resize(spec.count);
  return qualifying;
}

NominationList nominate(NodeId respondent, const SocialGraph& graph, const NominationMode& mode,
                        Rng& rng) {
  NominationList list{respondent, {}, mode};
  const auto neighborhood = graph.neighbors(respondent);
  list.contacts.reserve(neighborhood.size());
  for (NodeId contact : neighborhood) {
    bool keep = true;
    switch (mode.kind) {
      case NominationMode::Kind::exhaustive: break;
      case NominationMode::Kind::approx_exhaustive: keep = !bernoulli(rng, mode.prob); break;
      case NominationMode::Kind::selective: keep = bernoulli(rng, mode.prob); break;
    }
    if (keep) list.contacts.push_back(contact);
  }
  std::shuffle(list.contacts.begin(), list.contacts.end(), rng);
  return list;
}

bool more_similar(const Individual& recruiter, const Individual& a, const Individual& b) {
  const bool a_same = a.gender == recruiter.gender;
  const bool b_same = b.gender == recruiter.gender;
  if (a_same != b_same) return a_same;
  const double gap_a = std::abs(a.age - recruiter.age);
  const double gap_b = std::abs(b.age - recruiter.age);
  if (gap_a != gap_b) return gap_a < gap_b;
  return a.id < b.id;
}

std::vector<NodeId> rds_select(const Individual& recruiter, std::span<const Individual> eligible,
                               double alpha, std::size_t max_k, Rng& rng,
                               HomophilicPool pool) {
  std::vector<Individual> remaining(eligible.begin(), eligible.end());
  const std::size_t picks = std::min(max_k, remaining.size());
  std::vector<NodeId> out;
  out.reserve(picks);
  for (std::size_t slot = 0; slot < picks; ++slot) {
    std::size_t chosen = 0;
    if (bernoulli(rng, alpha)) {
      for (std::size_t i = 1; i < remaining.size(); ++i) {
        if (more_similar(recruiter, remaining[i], remaining[chosen])) chosen = i;
      }
      // Ranking puts same-gender first, so no same-gender candidate is left.
      if (pool == HomophilicPool::same_gender &&
          remaining[chosen].gender != recruiter.gender)
        continue;
    } else {
      chosen = uniform_index(rng, remaining.size());
    }
    out.push_back(remaining[chosen].id);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(chosen));
  }
  return out;
}

std::vector<NodeId> rrds_select(std::span<const NodeId> eligible, std::size_t max_k, Rng& rng) {
  std::vector<NodeId> pool(eligible.begin(), eligible.end());
  const std::size_t picks = std::min(max_k, pool.size());
  for (std::size_t i = 0; i < picks; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(picks);
  return pool;
}

RecruitmentForest run_recruitment(const SocialGraph& graph, std::span<const NodeId> seeds,
                                  const RecruitConfig& config, Method method, Rng& rng) {
  config.validate();
  if (seeds.empty()) throw InputError("recruitment needs at least one seed");

  RecruitmentForest forest;
  forest.method = method;
  std::vector<char> surveyed(graph.size(), 0);
  std::vector<std::vector<NodeId>> contact_lists(graph.size());

  auto survey = [&](NodeId id, std::size_t wave) {
    surveyed[id] = 1;
    contact_lists[id] = nominate(id, graph, config.nomination, rng).contacts;
    forest.surveys.push_back({id, wave, graph.degree(id), contact_lists[id].size()});
  };

  for (NodeId s : seeds) {
    if (!graph.contains(s)) throw InputError("seed " + std::to_string(s) + " not in graph");
    if (surveyed[s]) throw InputError("seed " + std::to_string(s) + " listed twice");
    forest.seeds.push_back(s);
    survey(s, 0);
  }

  std::vector<NodeId> current(seeds.begin(), seeds.end());
  std::vector<NodeId> eligible;
  std::vector<Individual> eligible_people;
  for (std::size_t wave = 1; wave <= config.max_waves && !current.empty(); ++wave) {
    std::shuffle(current.begin(), current.end(), rng);
    std::vector<NodeId> next;
    for (NodeId recruiter : current) {
      // Marking on claim excludes both earlier waves and this wave's claims.
      eligible.clear();
      for (NodeId c : contact_lists[recruiter]) {
        if (!surveyed[c]) eligible.push_back(c);
      }
      std::vector<NodeId> picked;
      if (method == Method::rrds) {
        picked = rrds_select(eligible, config.max_recruits, rng);
      } else {
        eligible_people.clear();
        for (NodeId c : eligible) eligible_people.push_back(graph.individual(c));
        picked = rds_select(graph.individual(recruiter), eligible_people, config.selection_alpha,
                            config.max_recruits, rng, config.homophilic_pool);
      }
      for (NodeId p : picked) {
        forest.events.push_back({wave, recruiter, p});
        survey(p, wave);
        next.push_back(p);
      }
    }
    current = std::move(next);
  }
  return forest;
}

}  // namespace rrds
