#include "rrds/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "rrds/errors.hpp"

namespace rrds::io {

namespace {

struct Field {
  std::string_view text;
  std::size_t column = 1;
};

/// Line-oriented reader over a small CSV dialect: comma separated, no quoting.
class CsvReader {
 public:
  CsvReader(const fs::path& path, std::string_view expected_header)
      : name_(path.string()), content_(read_file(path)) {
    std::vector<Field> header;
    if (!next(header)) throw ParseError(name_, 1, 1, "empty file, expected header");
    std::string got;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) got += ",";
      got += header[i].text;
    }
    if (!expected_header.empty() && got != expected_header)
      throw ParseError(name_, 1, 1,
                       "header '" + got + "' does not match '" + std::string(expected_header) + "'");
    header_ = header;
  }

  const std::vector<Field>& header() const { return header_; }

  /// Next non-empty row; false at end of file.
  bool next(std::vector<Field>& row) {
    while (pos_ < content_.size()) {
      std::size_t end = content_.find('\n', pos_);
      if (end == std::string::npos) end = content_.size();
      std::string_view line(content_.data() + pos_, end - pos_);
      pos_ = end + 1;
      ++line_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      row.clear();
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line.find(',', start);
        const std::size_t stop = comma == std::string_view::npos ? line.size() : comma;
        row.push_back({line.substr(start, stop - start), start + 1});
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      return true;
    }
    return false;
  }

  void expect_width(const std::vector<Field>& row, std::size_t width) const {
    if (row.size() != width)
      throw ParseError(name_, line_, 1,
                       "expected " + std::to_string(width) + " fields, found " +
                           std::to_string(row.size()));
  }

  template <typename T>
  T number(const Field& f) const {
    T value{};
    const char* first = f.text.data();
    const char* last = first + f.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || f.text.empty())
      throw ParseError(name_, line_, f.column, "invalid number '" + std::string(f.text) + "'");
    return value;
  }

  [[noreturn]] void fail(const Field& f, const std::string& what) const {
    throw ParseError(name_, line_, f.column, what);
  }

  const std::string& name() const { return name_; }
  std::size_t line() const { return line_; }

 private:
  std::string name_;
  std::string content_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
  std::vector<Field> header_;
};

}  // namespace

std::string format_double(double value) { return fmt::format("{}", value); }

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string nodes_csv(const SocialGraph& graph) {
  std::string out = "id,age,gender,degree\n";
  for (const auto& p : graph.individuals())
    out += fmt::format("{},{},{},{}\n", p.id, format_double(p.age), to_string(p.gender),
                       graph.degree(p.id));
  return out;
}

std::string edges_csv(const SocialGraph& graph) {
  std::string out = "src,dst\n";
  for (const auto& [a, b] : graph.edges()) out += fmt::format("{},{}\n", a, b);
  return out;
}

SocialGraph read_graph(const fs::path& nodes, const fs::path& edges) {
  std::vector<Individual> people;
  std::vector<std::size_t> declared_degree;
  {
    CsvReader csv(nodes, "id,age,gender,degree");
    std::vector<Field> row;
    while (csv.next(row)) {
      csv.expect_width(row, 4);
      Individual p;
      p.id = csv.number<NodeId>(row[0]);
      if (p.id != people.size())
        csv.fail(row[0], "ids must be 0..n-1 in order, expected " + std::to_string(people.size()));
      p.age = csv.number<double>(row[1]);
      try {
        p.gender = parse_gender(row[2].text);
      } catch (const InputError& e) {
        csv.fail(row[2], e.what());
      }
      declared_degree.push_back(csv.number<std::size_t>(row[3]));
      people.push_back(p);
    }
  }
  std::vector<SocialGraph::Edge> list;
  {
    CsvReader csv(edges, "src,dst");
    std::vector<Field> row;
    while (csv.next(row)) {
      csv.expect_width(row, 2);
      const auto a = csv.number<NodeId>(row[0]);
      const auto b = csv.number<NodeId>(row[1]);
      if (a >= b) csv.fail(row[0], "edges must satisfy src < dst");
      if (b >= people.size()) csv.fail(row[1], "unknown node id " + std::to_string(b));
      list.emplace_back(a, b);
    }
  }
  SocialGraph graph(std::move(people), list);
  for (NodeId id = 0; id < graph.size(); ++id) {
    if (graph.degree(id) != declared_degree[id])
      throw ParseError(nodes.string(), id + 2, 1,
                       "degree column says " + std::to_string(declared_degree[id]) +
                           " but edges give " + std::to_string(graph.degree(id)));
  }
  return graph;
}

std::string seeds_csv(std::span<const NodeId> seeds) {
  std::string out = "id\n";
  for (NodeId s : seeds) out += fmt::format("{}\n", s);
  return out;
}

std::vector<NodeId> read_seeds(const fs::path& path) {
  CsvReader csv(path, "id");
  std::vector<NodeId> out;
  std::vector<Field> row;
  while (csv.next(row)) {
    csv.expect_width(row, 1);
    out.push_back(csv.number<NodeId>(row[0]));
  }
  return out;
}

std::string forest_csv(const RecruitmentForest& forest) {
  std::string out = "wave,recruiter_id,recruit_id\n";
  for (const auto& e : forest.events)
    out += fmt::format("{},{},{}\n", e.wave, e.recruiter, e.recruit);
  return out;
}

RecruitmentForest read_forest(const fs::path& forest_path, const fs::path& seeds,
                              Method method) {
  RecruitmentForest forest;
  forest.method = method;
  forest.seeds = read_seeds(seeds);
  CsvReader csv(forest_path, "wave,recruiter_id,recruit_id");
  std::vector<Field> row;
  while (csv.next(row)) {
    csv.expect_width(row, 3);
    RecruitEvent e;
    e.wave = csv.number<std::size_t>(row[0]);
    e.recruiter = csv.number<NodeId>(row[1]);
    e.recruit = csv.number<NodeId>(row[2]);
    forest.events.push_back(e);
  }
  forest.validate();
  return forest;
}

std::string sample_csv(const SurveyedSample& sample) {
  std::string out = "id,degree";
  for (const auto& a : sample.attributes) out += "," + a;
  out += "\n";
  for (const auto& r : sample.records) {
    out += fmt::format("{},{}", r.id, r.degree);
    for (double v : r.values) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

SurveyedSample read_sample(const fs::path& path) {
  CsvReader csv(path, "");
  const auto& header = csv.header();
  if (header.size() < 2 || header[0].text != "id" || header[1].text != "degree")
    throw ParseError(csv.name(), 1, 1, "sample header must start with 'id,degree'");
  SurveyedSample sample;
  for (std::size_t i = 2; i < header.size(); ++i) sample.attributes.emplace_back(header[i].text);
  std::vector<Field> row;
  while (csv.next(row)) {
    csv.expect_width(row, header.size());
    SampleRecord r;
    r.id = csv.number<NodeId>(row[0]);
    r.degree = csv.number<std::size_t>(row[1]);
    for (std::size_t i = 2; i < row.size(); ++i) r.values.push_back(csv.number<double>(row[i]));
    sample.records.push_back(std::move(r));
  }
  sample.validate();
  return sample;
}

std::string waves_csv(std::span<const WaveStats> stats) {
  std::string out = "wave,new_unique,cumulative_n,mean_age,prop_female\n";
  for (const auto& s : stats)
    out += fmt::format("{},{},{},{},{}\n", s.wave, s.new_unique, s.cumulative_n,
                       format_double(s.mean_age), format_double(s.prop_female));
  return out;
}

std::vector<WaveStats> read_waves(const fs::path& path) {
  CsvReader csv(path, "wave,new_unique,cumulative_n,mean_age,prop_female");
  std::vector<WaveStats> out;
  std::vector<Field> row;
  while (csv.next(row)) {
    csv.expect_width(row, 5);
    WaveStats s;
    s.wave = csv.number<std::size_t>(row[0]);
    s.new_unique = csv.number<std::size_t>(row[1]);
    s.cumulative_n = csv.number<std::size_t>(row[2]);
    s.mean_age = csv.number<double>(row[3]);
    s.prop_female = csv.number<double>(row[4]);
    out.push_back(s);
  }
  return out;
}

std::string replicates_csv(const EstimateReport& report) {
  std::string out = "replicate,value,weight\n";
  for (std::size_t b = 0; b < report.replicates.size(); ++b)
    out += fmt::format("{},{},{}\n", b, format_double(report.replicates[b]),
                       format_double(report.weights[b]));
  return out;
}

nlohmann::ordered_json to_json(const EstimateReport& report) {
  nlohmann::ordered_json j;
  j["attribute"] = report.attribute;
  j["estimator"] = report.estimator;
  j["point"] = report.point;
  j["ci_low"] = report.ci_low;
  j["ci_high"] = report.ci_high;
  j["level"] = report.level;
  j["B"] = report.bootstrap_reps;
  if (!report.warnings.empty()) j["warnings"] = report.warnings;
  return j;
}

EstimateReport estimate_from_json(const nlohmann::json& j) {
  EstimateReport r;
  try {
    r.attribute = j.at("attribute").get<std::string>();
    r.estimator = j.at("estimator").get<std::string>();
    r.point = j.at("point").get<double>();
    r.ci_low = j.at("ci_low").get<double>();
    r.ci_high = j.at("ci_high").get<double>();
    r.level = j.at("level").get<double>();
    r.bootstrap_reps = j.at("B").get<std::size_t>();
    if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed estimate report: ") + e.what());
  }
  return r;
}

}  // namespace rrds::io
