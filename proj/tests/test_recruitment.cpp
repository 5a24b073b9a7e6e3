#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "rrds/errors.hpp"
#include "rrds/recruitment.hpp"

using namespace rrds;

namespace {

std::vector<Individual> people(std::size_t n, Gender g = Gender::female, double age = 30.0) {
  std::vector<Individual> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {static_cast<NodeId>(i), age, g};
  return out;
}

SocialGraph path(std::size_t n) {
  std::vector<SocialGraph::Edge> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return SocialGraph(people(n), e);
}

SocialGraph random_graph(std::uint64_t seed, std::size_t n = 1500, double degree = 3.0) {
  PopulationSpec spec;
  spec.n = n;
  spec.target_mean_degree = degree;
  Rng rng(seed);
  return generate_edges(generate_population(spec, rng), spec, rng);
}

}  // namespace

TEST_CASE("path graph recruits one node per wave") {
  const auto g = path(4);
  const std::vector<NodeId> seeds = {0};
  for (Method m : {Method::rrds, Method::rds}) {
    Rng rng(1);
    const auto f = run_recruitment(g, seeds, RecruitConfig{}, m, rng);
    const std::vector<RecruitEvent> expected = {{1, 0, 1}, {2, 1, 2}, {3, 2, 3}};
    CHECK(f.events == expected);
    CHECK(f.sample_size() == 4);
    CHECK(f.last_wave() == 3);
  }
}

TEST_CASE("zero waves leaves only the seeds") {
  const auto g = path(4);
  const std::vector<NodeId> seeds = {0, 2};
  RecruitConfig cfg;
  cfg.max_waves = 0;
  Rng rng(1);
  const auto f = run_recruitment(g, seeds, cfg, Method::rrds, rng);
  CHECK(f.events.empty());
  CHECK(f.seeds == seeds);
  CHECK(f.last_wave() == 0);
}

TEST_CASE("recruitment rejects bad seed lists") {
  const auto g = path(3);
  Rng rng(1);
  CHECK_THROWS_AS(run_recruitment(g, std::vector<NodeId>{}, RecruitConfig{}, Method::rds, rng),
                  InputError);
  CHECK_THROWS_AS(run_recruitment(g, std::vector<NodeId>{7}, RecruitConfig{}, Method::rds, rng),
                  InputError);
  CHECK_THROWS_AS(run_recruitment(g, std::vector<NodeId>{1, 1}, RecruitConfig{}, Method::rds, rng),
                  InputError);
}

TEST_CASE("forest invariants hold on random graphs") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto g = random_graph(s);
    Rng seed_rng(s + 100);
    SeedSpec spec;
    spec.count = 20;
    const auto seeds = select_seeds(g, spec, seed_rng);
    for (Method m : {Method::rds, Method::rrds}) {
      Rng rng(s + 200);
      const auto f = run_recruitment(g, seeds, RecruitConfig{}, m, rng);
      CHECK_NOTHROW(f.validate(g));
      std::set<NodeId> seen(f.seeds.begin(), f.seeds.end());
      std::map<NodeId, std::size_t> wave_of;
      for (NodeId s0 : f.seeds) wave_of[s0] = 0;
      std::map<NodeId, std::size_t> kids;
      for (const auto& e : f.events) {
        CHECK(seen.insert(e.recruit).second);
        REQUIRE(wave_of.count(e.recruiter));
        CHECK(wave_of[e.recruiter] + 1 == e.wave);
        CHECK(g.has_edge(e.recruiter, e.recruit));
        CHECK(++kids[e.recruiter] <= 3);
        CHECK(e.wave <= 12);
        wave_of[e.recruit] = e.wave;
      }
      CHECK(f.surveys.size() == f.sample_size());
      for (const auto& r : f.surveys) {
        CHECK(r.network_degree == g.degree(r.id));
        CHECK(r.list_size == r.network_degree);
      }
    }
  }
}

TEST_CASE("recruitment is deterministic in the seed") {
  const auto g = random_graph(3);
  const std::vector<NodeId> seeds = {1, 2, 3, 4, 5};
  Rng a(9), b(9);
  CHECK(run_recruitment(g, seeds, RecruitConfig{}, Method::rds, a).events ==
        run_recruitment(g, seeds, RecruitConfig{}, Method::rds, b).events);
}

TEST_CASE("forest validation catches broken structure") {
  RecruitmentForest f;
  f.seeds = {0};
  f.events = {{1, 0, 1}, {1, 0, 1}};
  CHECK_THROWS_AS(f.validate(), InputError);
  f.events = {{2, 0, 1}};
  CHECK_THROWS_AS(f.validate(), InputError);
  f.events = {{1, 0, 0}};
  CHECK_THROWS_AS(f.validate(), InputError);
  f.events = {{1, 0, 2}};
  CHECK_THROWS_AS(f.validate(path(3)), InputError);
  f.events = {{1, 0, 1}, {2, 1, 2}};
  CHECK_NOTHROW(f.validate(path(3)));
}

TEST_CASE("seed selection") {
  SUBCASE("single node") {
    const SocialGraph g(people(1), {});
    Rng rng(1);
    SeedSpec spec;
    spec.count = 1;
    CHECK(select_seeds(g, spec, rng) == std::vector<NodeId>{0});
  }
  SUBCASE("no qualifying individuals") {
    const SocialGraph g(people(10, Gender::male), {});
    Rng rng(1);
    SeedSpec spec;
    spec.count = 5;
    spec.gender = Gender::female;
    CHECK_THROWS_AS(select_seeds(g, spec, rng), InsufficientSeedsError);
    spec.fill_with_youngest = true;
    CHECK_THROWS_AS(select_seeds(g, spec, rng), InsufficientSeedsError);
  }
  SUBCASE("distinct, filtered, uniform") {
    auto pop = people(40, Gender::male, 20.0);
    for (std::size_t i = 0; i < 40; i += 2) pop[i].gender = Gender::female;
    pop[1].age = 22.0;
    const SocialGraph g(pop, {});
    SeedSpec spec;
    spec.count = 5;
    spec.gender = Gender::male;
    spec.max_age = 22.0;
    std::vector<std::size_t> hits(40, 0);
    for (std::uint64_t s = 0; s < 4000; ++s) {
      Rng rng(s);
      const auto ids = select_seeds(g, spec, rng);
      CHECK(std::set<NodeId>(ids.begin(), ids.end()).size() == 5);
      for (NodeId id : ids) {
        CHECK(g.individual(id).gender == Gender::male);
        CHECK(g.individual(id).age < 22.0);
        ++hits[id];
      }
    }
    std::vector<std::size_t> eligible;
    for (std::size_t i = 3; i < 40; i += 2) eligible.push_back(hits[i]);
    CHECK(hits[1] == 0);
    CHECK(oracle::chi_square_uniform_p(eligible) > 0.01);
  }
  SUBCASE("young-male seeds on the simulation population") {
    PopulationSpec ps;
    Rng pop_rng(42);
    const SocialGraph g(generate_population(ps, pop_rng), {});
    std::size_t young_males = 0;
    for (const auto& p : g.individuals()) young_males += !p.female() && p.age < 22.0;
    SeedSpec spec;
    spec.count = 76;
    spec.gender = Gender::male;
    spec.max_age = 22.0;
    Rng rng(1);
    if (young_males < 76) {
      CHECK_THROWS_AS(select_seeds(g, spec, rng), InsufficientSeedsError);
    }
    spec.fill_with_youngest = true;
    const auto ids = select_seeds(g, spec, rng);
    REQUIRE(ids.size() == 76);
    CHECK(std::set<NodeId>(ids.begin(), ids.end()).size() == 76);
    double oldest = 0.0;
    double mean = 0.0;
    std::size_t young = 0;
    for (NodeId id : ids) {
      CHECK(g.individual(id).gender == Gender::male);
      oldest = std::max(oldest, g.individual(id).age);
      mean += g.individual(id).age / 76.0;
      young += g.individual(id).age < 22.0;
    }
    CHECK(young == std::min<std::size_t>(young_males, 76));
    CHECK(mean < 22.0);
    // Top-up draws are the youngest males left.
    for (const auto& p : g.individuals()) {
      if (!p.female() && p.age < oldest)
        CHECK(std::find(ids.begin(), ids.end(), p.id) != ids.end());
    }
  }
}

TEST_CASE("nomination modes") {
  std::vector<SocialGraph::Edge> e = {{0, 2}, {0, 5}, {0, 9}};
  const SocialGraph g(people(10), e);
  Rng rng(3);
  auto sorted = [](std::vector<NodeId> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto ex = nominate(0, g, NominationMode::exhaustive(), rng);
  CHECK(sorted(ex.contacts) == std::vector<NodeId>{2, 5, 9});
  CHECK(ex.respondent == 0);
  for (int i = 0; i < 100; ++i)
    CHECK(sorted(nominate(0, g, NominationMode::approx_exhaustive(0.0), rng).contacts) ==
          std::vector<NodeId>{2, 5, 9});
  CHECK(nominate(0, g, NominationMode::approx_exhaustive(1.0), rng).contacts.empty());
  CHECK(nominate(0, g, NominationMode::selective(0.0), rng).contacts.empty());
  CHECK(nominate(1, g, NominationMode::exhaustive(), rng).contacts.empty());
}

TEST_CASE("selective nomination keeps half the neighborhood on average") {
  std::vector<SocialGraph::Edge> e;
  const std::size_t k = 10;
  for (NodeId j = 1; j <= k; ++j) e.emplace_back(0, j);
  const SocialGraph g(people(k + 1), e);
  Rng rng(17);
  const std::size_t draws = 100000;
  double total = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto list = nominate(0, g, NominationMode::selective(0.5), rng);
    for (NodeId c : list.contacts) CHECK_FALSE(c == 0);
    total += static_cast<double>(list.contacts.size());
  }
  const double sigma = std::sqrt(k * 0.25 / draws);
  CHECK(std::abs(total / draws - k / 2.0) < 3.0 * sigma);
}

TEST_CASE("nomination mode validation") {
  CHECK_THROWS_AS(NominationMode::selective(1.5).validate(), ConfigError);
  CHECK_NOTHROW(NominationMode::approx_exhaustive(0.2).validate());
  CHECK(parse_nomination_kind("selective") == NominationMode::Kind::selective);
  CHECK_THROWS_AS(parse_nomination_kind("every"), ConfigError);
}

TEST_CASE("rds_select hand example") {
  const Individual recruiter{100, 24.0, Gender::male};
  const std::vector<Individual> eligible = {
      {1, 25.0, Gender::male}, {2, 24.0, Gender::female}, {3, 40.0, Gender::male}};
  for (auto pool : {HomophilicPool::same_gender, HomophilicPool::any}) {
    Rng rng(1);
    auto picks = rds_select(recruiter, eligible, 1.0, 2, rng, pool);
    CHECK(picks == std::vector<NodeId>{1, 3});
  }
}

TEST_CASE("rds_select with alpha one follows the lexicographic rule") {
  Rng gen(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const Individual recruiter{1000, 18.0 + uniform_index(gen, 40),
                               bernoulli(gen, 0.5) ? Gender::male : Gender::female};
    std::vector<Individual> eligible(uniform_index(gen, 8));
    for (std::size_t i = 0; i < eligible.size(); ++i)
      eligible[i] = {static_cast<NodeId>(i), 18.0 + uniform_index(gen, 40),
                     bernoulli(gen, 0.7) ? Gender::female : Gender::male};
    const std::size_t k = 1 + uniform_index(gen, 4);
    Rng r1(trial), r2(trial);
    CHECK(rds_select(recruiter, eligible, 1.0, k, r1, HomophilicPool::any) ==
          oracle::lexicographic_choice(recruiter, eligible, k, false));
    CHECK(rds_select(recruiter, eligible, 1.0, k, r2, HomophilicPool::same_gender) ==
          oracle::lexicographic_choice(recruiter, eligible, k, true));
  }
}

TEST_CASE("rds_select with alpha zero is uniform") {
  const Individual recruiter{100, 30.0, Gender::male};
  std::vector<Individual> eligible;
  for (NodeId i = 0; i < 6; ++i)
    eligible.push_back({i, 20.0 + 5.0 * i, i % 2 ? Gender::male : Gender::female});
  Rng rng(5);
  std::vector<std::size_t> first(6, 0);
  std::map<std::size_t, std::size_t> subsets;
  for (int i = 0; i < 100000; ++i) {
    const auto one = rds_select(recruiter, eligible, 0.0, 1, rng);
    REQUIRE(one.size() == 1);
    ++first[one[0]];
    ++subsets[oracle::subset_mask(rds_select(recruiter, eligible, 0.0, 3, rng))];
  }
  CHECK(oracle::chi_square_uniform_p(first) > 0.01);
  REQUIRE(subsets.size() == 20);
  std::vector<std::size_t> counts;
  for (const auto& [mask, c] : subsets) counts.push_back(c);
  CHECK(oracle::chi_square_uniform_p(counts) > 0.01);
}

TEST_CASE("rds_select edge cases") {
  const Individual recruiter{100, 30.0, Gender::male};
  Rng rng(1);
  CHECK(rds_select(recruiter, {}, 0.9, 3, rng).empty());
  // Only opposite-gender contacts and every slot homophilic: nothing taken.
  const std::vector<Individual> women = {{1, 30.0, Gender::female}, {2, 31.0, Gender::female}};
  CHECK(rds_select(recruiter, women, 1.0, 3, rng, HomophilicPool::same_gender).empty());
  CHECK(rds_select(recruiter, women, 1.0, 3, rng, HomophilicPool::any) ==
        std::vector<NodeId>{1, 2});
}

TEST_CASE("rrds_select inclusion probabilities") {
  const std::vector<NodeId> eligible = {10, 11, 12, 13, 14};
  Rng rng(2026);
  const std::size_t draws = 100000;
  std::vector<std::size_t> hits(5, 0);
  std::map<std::size_t, std::size_t> subsets;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto picks = rrds_select(eligible, 3, rng);
    REQUIRE(picks.size() == 3);
    CHECK(std::set<NodeId>(picks.begin(), picks.end()).size() == 3);
    std::vector<NodeId> local;
    for (NodeId p : picks) {
      ++hits[p - 10];
      local.push_back(p - 10);
    }
    ++subsets[oracle::subset_mask(local)];
  }
  const double sigma = std::sqrt(0.6 * 0.4 / draws);
  for (std::size_t h : hits) CHECK(std::abs(static_cast<double>(h) / draws - 0.6) < 3.0 * sigma);
  REQUIRE(subsets.size() == 10);
  std::vector<std::size_t> counts;
  for (const auto& [mask, c] : subsets) counts.push_back(c);
  CHECK(oracle::chi_square_uniform_p(counts) > 0.01);
}

TEST_CASE("rrds_select small cases") {
  Rng rng(1);
  const std::vector<NodeId> two = {4, 9};
  for (int i = 0; i < 50; ++i) {
    auto picks = rrds_select(two, 3, rng);
    std::sort(picks.begin(), picks.end());
    CHECK(picks == two);
  }
  CHECK(rrds_select(std::vector<NodeId>{}, 3, rng).empty());
}

TEST_CASE("nomination degree source records list sizes") {
  const auto g = random_graph(12, 800, 4.0);
  const std::vector<NodeId> seeds = {0, 1, 2};
  RecruitConfig cfg;
  cfg.nomination = NominationMode::selective(0.5);
  cfg.degree_source = DegreeSource::nomination;
  Rng rng(4);
  const auto f = run_recruitment(g, seeds, cfg, Method::rrds, rng);
  bool smaller = false;
  for (const auto& r : f.surveys) {
    CHECK(r.list_size <= r.network_degree);
    CHECK(r.reported_degree(DegreeSource::nomination) == r.list_size);
    smaller = smaller || r.list_size < r.network_degree;
  }
  CHECK(smaller);
}
