#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "dnc/costmodel.hpp"
#include "dnc/degradation.hpp"
#include "dnc/llm_client.hpp"
#include "dnc/prompts.hpp"
#include "dnc/tasks.hpp"

namespace dnc {

/// Produces ideal artifacts / ideal aggregates. `latency` models the call
/// time reported in run records.
struct OracleBackend {
    LatencyCurve latency;
};

/// Ideal output, corrupted with probability 1 - exp(-g(L)).
struct NoisyBackend {
    DegradationModel model = Linear{};
    std::uint64_t seed = 0;
    LatencyCurve latency;
};

struct LiveBackend {
    std::shared_ptr<ChatModel> client;
    PromptStyle prompt_style = PromptStyle::PlannerBased;
    std::size_t max_output_tokens = 512;
};

using Backend = std::variant<OracleBackend, NoisyBackend, LiveBackend>;
using WorkerBackend = Backend;
using ManagerBackend = Backend;

bool is_live(const Backend& backend);
std::string describe(const Backend& backend);

struct WorkerOutput {
    std::size_t chunk_id = 0;
    Artifact artifact;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    double latency = 0.0;
    bool corrupted = false;
    bool parse_failure = false;

    friend bool operator==(const WorkerOutput&, const WorkerOutput&) = default;
};

struct ManagerOutput {
    Answer answer;
    /// Aggregation input length: artifact token costs plus template overhead.
    std::size_t l_agg = 0;
    std::size_t output_tokens = 0;
    double latency = 0.0;
    bool corrupted = false;
    bool parse_failure = false;
    /// Artifacts disagreed on a unique KV key; the answer is null.
    bool conflict = false;

    friend bool operator==(const ManagerOutput&, const ManagerOutput&) = default;
};

/// 1 - exp(-loss_at(model, length)).
double corruption_probability(const DegradationModel& model, double length);

/// The seeded Bernoulli draw behind every noisy call. `purpose` separates
/// worker, manager and single-shot streams.
bool noisy_draw(const NoisyBackend& backend, std::uint64_t instance_seed, std::uint64_t index,
                std::string_view purpose, double length);

enum class CorruptionOp { FlipToAbsent, FlipToFound, PerturbValue, RemoveValue, AdjustValue, DropPair };

struct Corruption {
    CorruptionOp op = CorruptionOp::FlipToAbsent;
    std::size_t index = 0;
    int delta = 0;
    std::uint64_t salt = 0;  // picks the fake value for FlipToFound

    friend bool operator==(const Corruption&, const Corruption&) = default;
};

std::vector<Corruption> applicable_corruptions(const Artifact& artifact);
Artifact apply_corruption(const Artifact& artifact, const Corruption& corruption);

/// One corruption chosen uniformly from the applicable ones by `draw`.
/// Content with no applicable corruption is returned unchanged.
Artifact corrupt_artifact(const Artifact& artifact, TaskKind kind, std::uint64_t draw);

/// Oracle/noisy worker step applied to an already computed ideal artifact.
WorkerOutput worker_from_ideal(const WorkerBackend& backend, const TaskInstance& instance, const Artifact& ideal,
                               std::size_t chunk_length);

/// `prompts` overrides the backend's built-in templates for live calls.
WorkerOutput run_worker(const WorkerBackend& backend, const TaskInstance& instance, const TokenSpan& chunk,
                        std::size_t chunk_id, const PromptBundle* prompts = nullptr);

/// `prompts`, when set, also contributes its template overhead to l_agg.
ManagerOutput run_manager(const ManagerBackend& backend, const TaskInstance& instance,
                          const std::vector<Artifact>& artifacts, const PromptBundle* prompts = nullptr);

}  // namespace dnc
