#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dnc/chunker.hpp"
#include "dnc/fidelity.hpp"
#include "dnc/prompts.hpp"
#include "dnc/tasks.hpp"
#include "dnc/workers.hpp"

namespace dnc {

struct PipelineConfig {
    ChunkPlan plan;
    WorkerBackend worker = OracleBackend{};
    ManagerBackend manager = OracleBackend{};
    std::size_t max_parallel_workers = 1;
    std::optional<PromptBundle> prompt_bundle;
    MetricKind metric = MetricKind::ExactMatch;
    RegimeThresholds thresholds;
};

enum class RunStatus { Complete, Aborted };
std::string_view to_string(RunStatus status);

struct Timings {
    double worker_critical_path = 0.0;
    double manager = 0.0;
    /// True when latencies come from the backends' latency curves rather than a clock.
    bool modeled = true;
};

struct TokenTotals {
    std::size_t input = 0;
    std::size_t worker_output = 0;
    std::size_t aggregation_input = 0;  // L_agg
    std::size_t final_output = 0;
};

struct PipelineRun {
    std::string instance_id;
    TaskKind kind = TaskKind::KV;
    RunStatus status = RunStatus::Complete;
    std::string error;
    PipelineConfig config;
    std::vector<WorkerOutput> worker_outputs;  // ordered by chunk_id
    ManagerOutput manager;
    Score final_score{kScoreFloor};
    /// Simulator mode only.
    std::optional<DecomposedScores> scores;
    std::optional<Measurement> measurement;
    std::optional<LossBreakdown> losses;
    std::optional<RegimeLabel> regime;
    Timings timings;
    TokenTotals tokens;
    std::size_t worker_calls = 0;
    std::size_t manager_calls = 0;
    std::vector<std::string> flags;

    const Answer& manager_answer() const noexcept { return manager.answer; }
    bool simulated() const noexcept { return scores.has_value(); }
};

/// Greedy in-order assignment of jobs to `lanes` parallel lanes; returns the makespan.
double critical_path(const std::vector<double>& latencies, std::size_t lanes);

/// Workers (up to max_parallel_workers at once), then one manager call. With
/// non-live backends the oracle ladder S(y*), S(h*(a*)), S(h(a*)), S(h(â)) is
/// evaluated as well. A worker exception yields an Aborted run holding the
/// outputs that completed.
PipelineRun run_pipeline(const TaskInstance& instance, const PipelineConfig& config);

struct SingleRun {
    Answer answer;
    double error = 1.0;  // 1 - S
    Score score{kScoreFloor};
    bool corrupted = false;
    bool parse_failure = false;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    double latency = 0.0;
};

/// The whole payload in one call. Noisy backends corrupt with p(T).
SingleRun run_single(const TaskInstance& instance, const WorkerBackend& backend,
                     MetricKind metric = MetricKind::ExactMatch);

struct PlannedPrompts {
    PromptBundle bundle;
    /// The planner reply could not be used; bundle holds the fallback.
    bool fallback = false;
    std::string planner_response;
};

/// Built-in planner-style templates without a planner; otherwise one planner
/// call whose reply must contain both templates.
PlannedPrompts plan_prompts(const TaskParams& task, std::string_view task_description, ChatModel* planner);

using FailureCase = std::pair<const TaskInstance*, Answer>;

/// Exactly one refinement round. No failures: returns `current` without a call.
PlannedPrompts refine_prompts(const PromptBundle& current, const std::vector<FailureCase>& failures,
                              ChatModel* planner);

}  // namespace dnc
