#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "rrds/errors.hpp"
#include "rrds/estimators.hpp"

using namespace rrds;

namespace {

SurveyedSample make_sample(const std::vector<double>& x, const std::vector<std::size_t>& d) {
  SurveyedSample s;
  s.attributes = {"x"};
  for (std::size_t i = 0; i < x.size(); ++i) s.records.push_back({static_cast<NodeId>(i), d[i], {x[i]}});
  return s;
}

// Seeds 0 and 1; 0 recruits 2 and 3; 2 recruits 4.
RecruitmentForest small_forest() {
  RecruitmentForest f;
  f.seeds = {0, 1};
  f.events = {{1, 0, 2}, {1, 0, 3}, {2, 2, 4}};
  return f;
}

}  // namespace

TEST_CASE("VH hand example") {
  const auto s = make_sample({1, 0, 1}, {1, 2, 4});
  CHECK(vh_estimate(s, "x") == doctest::Approx(1.25 / 1.75).epsilon(1e-13));
  CHECK(std::abs(vh_estimate(s, "x") - 0.714285714285714) < 1e-12);
}

TEST_CASE("VH with constant degrees is the plain mean") {
  CHECK(vh_estimate(make_sample({10, 20, 30}, {4, 4, 4}), "x") == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(vh_estimate(make_sample({7}, {3}), "x") == 7.0);
}

TEST_CASE("VH is exact for a constant attribute") {
  CHECK(vh_estimate(make_sample({0.3, 0.3, 0.3, 0.3}, {1, 3, 7, 11}), "x") == 0.3);
}

TEST_CASE("VH input errors") {
  CHECK_THROWS_AS(vh_estimate(make_sample({}, {}), "x"), EstimationError);
  CHECK_THROWS_WITH_AS(vh_estimate(make_sample({1, 2}, {1, 0}), "x"), doctest::Contains("1"),
                       InputError);
  CHECK_THROWS_AS(vh_estimate(make_sample({1}, {1}), "age"), InputError);
}

TEST_CASE("sample validation") {
  auto s = make_sample({1, 2}, {1, 1});
  s.records[1].id = 0;
  CHECK_THROWS_AS(s.validate(), InputError);
  s = make_sample({1, 2}, {1, 1});
  s.records[1].values.push_back(3);
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("drop_zero_degree") {
  auto s = make_sample({1, 2, 3}, {0, 2, 0});
  CHECK(drop_zero_degree(s) == std::vector<NodeId>{0, 2});
  REQUIRE(s.records.size() == 1);
  CHECK(s.records[0].id == 1);
}

TEST_CASE("weighted percentile basics") {
  const std::vector<double> c(5, 2.5);
  const std::vector<double> w = {1, 2, 3, 4, 5};
  const auto ci = weighted_percentile_ci(c, w, 0.95);
  CHECK(ci.lo == 2.5);
  CHECK(ci.hi == 2.5);
  const std::vector<double> one = {4.0};
  const std::vector<double> w1 = {0.3};
  CHECK(weighted_percentile_ci(one, w1, 0.9).lo == 4.0);
  CHECK(weighted_percentile_ci(one, w1, 0.9).hi == 4.0);
  const std::vector<double> bad = {1.0, 0.0};
  CHECK_THROWS_AS(weighted_percentile_ci(one, bad, 0.9), InputError);
  CHECK_THROWS_AS(weighted_percentile_ci(c, w, 1.0), ConfigError);
  const std::vector<double> zero = {0.0};
  CHECK_THROWS_AS(weighted_percentile_ci(one, zero, 0.9), InputError);
}

TEST_CASE("weighted percentile follows the weights") {
  // Half the mass on the largest value pulls the upper tail onto it.
  const std::vector<double> v = {1, 2, 3, 4};
  const std::vector<double> w = {1, 1, 1, 3};
  const auto ci = weighted_percentile_ci(v, w, 0.5);
  CHECK(ci.lo == 2.0);  // cumulative 1/6, 2/6 reaches 0.25
  CHECK(ci.hi == 4.0);  // 0.75 needs the last value
}

TEST_CASE("equal weights reproduce the unweighted percentile interval") {
  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 300);
    std::vector<double> v(n);
    for (auto& x : v) x = std::round(uniform01(rng) * 50.0) / 10.0;
    const double w0 = 0.1 + uniform01(rng);
    const std::vector<double> w(n, w0);
    const double level = trial % 3 == 0 ? 0.95 : (trial % 3 == 1 ? 0.9 : 0.8);
    const auto ci = weighted_percentile_ci(v, w, level);
    CHECK(ci.lo == oracle::unweighted_percentile(v, (1 - level) / 2));
    CHECK(ci.hi == oracle::unweighted_percentile(v, 1 - (1 - level) / 2));
  }
}

namespace {

std::map<long long, std::size_t> tabulate(const std::vector<double>& replicates) {
  std::map<long long, std::size_t> out;
  for (double r : replicates) ++out[oracle::TreeResampleEnumerator::key(r)];
  return out;
}

double total_variation(const std::map<long long, double>& truth,
                       const std::map<long long, std::size_t>& counts, std::size_t n) {
  double tv = 0.0;
  for (const auto& [k, p] : truth) {
    auto it = counts.find(k);
    tv += std::abs(p - (it == counts.end() ? 0.0 : static_cast<double>(it->second) / n));
  }
  for (const auto& [k, c] : counts)
    if (!truth.count(k)) tv += static_cast<double>(c) / n;
  return tv / 2.0;
}

}  // namespace

TEST_CASE("tree bootstrap matches exhaustive enumeration") {
  // Seeds A=0 and C=1; A recruited 2 and 3; C recruited nobody.
  RecruitmentForest forest;
  forest.seeds = {0, 1};
  forest.events = {{1, 0, 2}, {1, 0, 3}};
  const std::vector<double> x = {0.3, 1.7, 2.9, 4.1};
  const std::vector<std::size_t> d = {2, 3, 1, 4};
  const auto sample = make_sample(x, d);
  const std::size_t B = 100000;
  const auto report = tree_bootstrap(forest, sample, "x", B, 0.95, 77);
  REQUIRE(report.replicates.size() == B);
  REQUIRE(report.weights.size() == B);
  for (double w : report.weights) CHECK(w > 0.0);
  CHECK(report.point == doctest::Approx(vh_estimate(sample, "x")));

  oracle::TreeResampleEnumerator exact({0, 1}, {{2, 3}, {}, {}, {}}, x,
                                       std::vector<double>(d.begin(), d.end()));
  const auto truth = exact.distribution();
  double mass = 0.0;
  for (const auto& [k, p] : truth) mass += p;
  CHECK(mass == doctest::Approx(1.0));
  const double tv = total_variation(truth, tabulate(report.replicates), B);
  MESSAGE("total variation " << tv << " over " << truth.size() << " support points");
  CHECK(tv < 0.01);
}

TEST_CASE("tree bootstrap fits the enumeration on a deeper forest") {
  // Seeds 0, 1, 2; 0 recruits 3 and 4; 1 recruits 5; 3 recruits 6 and 7.
  RecruitmentForest forest;
  forest.seeds = {0, 1, 2};
  forest.events = {{1, 0, 3}, {1, 0, 4}, {1, 1, 5}, {2, 3, 6}, {2, 3, 7}};
  const std::vector<double> x = {0.3, 1.7, 2.9, 4.1, 5.6, 0.8, 3.3, 6.2};
  const std::vector<std::size_t> d = {2, 3, 1, 4, 2, 5, 1, 3};
  const std::size_t B = 100000;
  const auto report = tree_bootstrap(forest, make_sample(x, d), "x", B, 0.95, 78);
  oracle::TreeResampleEnumerator exact({0, 1, 2}, {{3, 4}, {5}, {}, {6, 7}, {}, {}, {}, {}}, x,
                                       std::vector<double>(d.begin(), d.end()));
  const auto truth = exact.distribution();
  CHECK(truth.size() > 100);
  CHECK(oracle::chi_square_fit_p(truth, tabulate(report.replicates), B) > 0.001);
}

TEST_CASE("tree bootstrap on constant data has zero width") {
  RecruitmentForest f;
  f.seeds = {0, 1, 2, 3};
  const auto sample = make_sample({0.7, 0.7, 0.7, 0.7}, {1, 3, 5, 9});
  const auto r = tree_bootstrap(f, sample, "x", 500, 0.95, 1);
  CHECK(r.ci_low == 0.7);
  CHECK(r.ci_high == 0.7);
  CHECK(r.point == 0.7);
  for (double v : r.replicates) CHECK(v == 0.7);
  const auto deep = tree_bootstrap(small_forest(), make_sample({3, 3, 3, 3, 3}, {2, 3, 1, 4, 2}),
                                   "x", 500, 0.9, 2);
  CHECK(deep.ci_low == 3.0);
  CHECK(deep.ci_high == 3.0);
}

TEST_CASE("tree bootstrap is reproducible and replicate-indexed") {
  const auto sample = make_sample({1, 0, 1, 0, 1}, {2, 3, 1, 4, 2});
  const auto a = tree_bootstrap(small_forest(), sample, "x", 200, 0.95, 5);
  const auto b = tree_bootstrap(small_forest(), sample, "x", 300, 0.95, 5);
  for (std::size_t i = 0; i < 200; ++i) CHECK(a.replicates[i] == b.replicates[i]);
  CHECK(a.ci_low <= a.ci_high);
}

TEST_CASE("tree bootstrap input handling") {
  const auto forest = small_forest();
  CHECK_THROWS_AS(tree_bootstrap(forest, make_sample({1, 0, 1}, {1, 1, 1}), "x", 10, 0.95, 1),
                  InputError);
  CHECK_THROWS_AS(tree_bootstrap(forest, make_sample({1, 0, 1, 0, 1}, {1, 1, 1, 1, 1}), "x", 0,
                                 0.95, 1),
                  ConfigError);
  // Degree-0 leaf: excluded with a warning.
  const auto r = tree_bootstrap(forest, make_sample({1, 0, 1, 0, 1}, {2, 3, 1, 0, 2}), "x", 50,
                                0.95, 1);
  CHECK_FALSE(r.warnings.empty());
  // Degree-0 recruiter with children cannot be resampled.
  CHECK_THROWS_AS(tree_bootstrap(forest, make_sample({1, 0, 1, 0, 1}, {0, 3, 1, 4, 2}), "x", 50,
                                 0.95, 1),
                  InputError);
}

TEST_CASE("naive normal interval closed form") {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < 100; ++i) x[i] = i % 2;
  const auto r = naive_mean_ci(make_sample(x, std::vector<std::size_t>(100, 1)), "x", 0.95);
  const double half = 1.959963984540054 * std::sqrt(25.0 / 99.0) / 10.0;
  CHECK(r.point == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.ci_low == doctest::Approx(0.5 - half).epsilon(1e-12));
  CHECK(r.ci_high == doctest::Approx(0.5 + half).epsilon(1e-12));
  CHECK(r.estimator == "naive");
}

TEST_CASE("naive interval degenerate cases") {
  const auto c = naive_mean_ci(make_sample({4, 4, 4}, {1, 2, 3}), "x", 0.95);
  CHECK(c.ci_low == 4.0);
  CHECK(c.ci_high == 4.0);
  const auto one = naive_mean_ci(make_sample({9}, {1}), "x", 0.95);
  CHECK(one.ci_low == 9.0);
  CHECK(one.ci_high == 9.0);
  REQUIRE(one.warnings.size() == 1);
  CHECK(one.warnings[0].find("undefined") != std::string::npos);
}

TEST_CASE("VH normal interval is centered on the VH point") {
  const auto s = make_sample({1, 0, 1, 1, 0}, {1, 2, 4, 2, 3});
  const auto r = vh_normal_interval(s, "x", 0.95);
  CHECK(r.point == vh_estimate(s, "x"));
  CHECK((r.ci_low + r.ci_high) / 2 == doctest::Approx(r.point));
  CHECK(r.standard_error() > 0.0);
}

TEST_CASE("build_sample uses recorded degrees") {
  std::vector<Individual> pop = {{0, 20, Gender::male}, {1, 30, Gender::female}, {2, 40, Gender::female}};
  RecruitmentForest f;
  f.seeds = {0};
  f.events = {{1, 0, 2}};
  f.surveys = {{0, 0, 3, 2}, {2, 1, 5, 1}};
  const std::vector<std::string> attrs = {"age", "female"};
  const auto net = build_sample(f, pop, attrs, DegreeSource::network);
  REQUIRE(net.records.size() == 2);
  CHECK(net.records[1].id == 2);
  CHECK(net.records[1].degree == 5);
  CHECK(net.records[1].values == std::vector<double>{40, 1});
  CHECK(build_sample(f, pop, attrs, DegreeSource::nomination).records[0].degree == 2);
}

TEST_CASE("critical value") {
  CHECK(normal_critical_value(0.95) == doctest::Approx(1.959963984540054));
  CHECK(normal_critical_value(0.9) == doctest::Approx(1.6448536269514722));
}
