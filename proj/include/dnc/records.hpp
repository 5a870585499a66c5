#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dnc/costmodel.hpp"
#include "dnc/degradation.hpp"
#include "dnc/estimator.hpp"
#include "dnc/orchestrator.hpp"
#include "dnc/tasks.hpp"

namespace dnc {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

Json to_json(const TaskParams& params);
TaskParams task_params_from_json(TaskKind kind, const Json& j);

/// Dataset line: kind, seed, params, query, ground_truth, payload.
Json instance_to_json(const TaskInstance& instance);
/// Rebuilds the instance and checks the stored ground truth against exact_solve.
TaskInstance instance_from_json(const Json& j);

Json to_json(const ChunkPlan& plan);
Json to_json(const Artifact& artifact);
Json to_json(const DecomposedScores& scores);
Json to_json(const FidelityTriple& triple);
Json to_json(const LossBreakdown& losses);
DecomposedScores decomposed_scores_from_json(const Json& j);

/// One JSONL run record ("type": "dc").
Json run_to_json(const PipelineRun& run);
/// One JSONL single-shot record ("type": "single").
Json single_to_json(const TaskInstance& instance, const SingleRun& run, const std::string& backend);

Json to_json(const CrossoverResult& result);
Json to_json(const FitResult& result);
Json to_json(const CostReport& report);
Json to_json(const EstimateReport& report);

struct RunManifest {
    std::string command;
    Json config = Json::object();
    std::uint64_t seed = 0;
    std::string dataset;
    std::vector<std::string> outputs;
    std::string tool_version = kToolVersion;
    std::string timestamp;
};

/// {"manifest": {...}}
Json to_json(const RunManifest& manifest);
bool is_manifest_line(const Json& j);

/// UTC ISO-8601, or the epoch when `normalized`.
std::string timestamp_now(bool normalized);

/// Parses every line; the first must be a manifest. Throws FormatError otherwise.
std::vector<Json> read_jsonl(const std::string& path, bool require_manifest = true);

}  // namespace dnc
