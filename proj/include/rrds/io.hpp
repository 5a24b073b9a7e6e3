#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rrds/estimators.hpp"
#include "rrds/metrics.hpp"
#include "rrds/network.hpp"
#include "rrds/recruitment.hpp"

namespace rrds::io {

namespace fs = std::filesystem;

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// Writes `content` to `path`, creating parent directories. Throws
/// std::runtime_error on I/O failure.
void write_file(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

// Tabular files. Every reader checks the header exactly and reports
// malformed rows as ParseError with line and column.

std::string nodes_csv(const SocialGraph& graph);    // id,age,gender,degree
std::string edges_csv(const SocialGraph& graph);    // src,dst with src < dst, sorted
SocialGraph read_graph(const fs::path& nodes, const fs::path& edges);

std::string seeds_csv(std::span<const NodeId> seeds);  // id
std::vector<NodeId> read_seeds(const fs::path& path);

std::string forest_csv(const RecruitmentForest& forest);  // wave,recruiter_id,recruit_id
RecruitmentForest read_forest(const fs::path& forest, const fs::path& seeds, Method method);

std::string sample_csv(const SurveyedSample& sample);  // id,degree,<attributes...>
SurveyedSample read_sample(const fs::path& path);

std::string waves_csv(std::span<const WaveStats> stats);
std::vector<WaveStats> read_waves(const fs::path& path);

std::string replicates_csv(const EstimateReport& report);  // replicate,value,weight

nlohmann::ordered_json to_json(const EstimateReport& report);
EstimateReport estimate_from_json(const nlohmann::json& j);

}  // namespace rrds::io
