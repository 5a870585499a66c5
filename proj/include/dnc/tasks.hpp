#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dnc/chunker.hpp"
#include "dnc/fidelity.hpp"

namespace dnc {

enum class TaskKind { KV, Math, AliasChain };
enum class Direction { Smallest, Largest };
enum class MetricKind { ExactMatch, TokenF1 };

std::string_view to_string(TaskKind kind);
std::string_view to_string(Direction direction);
std::string_view to_string(MetricKind metric);
TaskKind task_kind_from_string(std::string_view name);
Direction direction_from_string(std::string_view name);
MetricKind metric_from_string(std::string_view name);

struct KvParams {
    std::size_t pair_count = 1;
    /// Aligned: each pair is the single token "key:value". Unaligned: a header
    /// token followed by "key:" "value" token pairs, so even chunk boundaries
    /// fall inside pairs.
    bool aligned = true;
};

struct MathParams {
    std::size_t count = 1;
    std::size_t k = 1;
    Direction direction = Direction::Smallest;
    double sigma = 1e6;
};

/// Facts "x->y" link alias names (a + 8 hex) along a chain ending at an
/// entity name (E + 8 hex). A walk that stops at an alias is unresolved.
struct AliasParams {
    std::size_t chain_length = 2;
    std::size_t filler_tokens = 0;
    /// Pairs an artifact may carry; 0 picks max(1, chain_length / 4).
    std::size_t artifact_budget = 0;
    std::size_t distractor_pairs = 0;
};

using TaskParams = std::variant<KvParams, MathParams, AliasParams>;

/// A task answer; nullopt is the distinguished null answer.
using Answer = std::optional<std::string>;

struct TaskInstance {
    TaskKind kind = TaskKind::KV;
    TaskParams params;
    std::uint64_t seed = 0;
    TokenSequence payload;
    std::string query;
    /// KV: the queried key. AliasChain: the start name. Math: empty.
    std::string subject;
    Answer ground_truth;
    std::size_t total_length = 0;
    std::size_t artifact_budget = 0;

    /// "<kind>:<seed>"
    std::string id() const;
};

TaskInstance gen_kv(std::size_t pair_count, std::uint64_t seed, bool aligned = true);
TaskInstance gen_math(std::size_t count, std::size_t k, Direction direction, std::uint64_t seed,
                      double sigma = 1e6);
TaskInstance gen_alias_chain(std::size_t chain_length, std::size_t filler_tokens, std::uint64_t seed,
                             std::size_t artifact_budget = 0, std::size_t distractor_pairs = 0);
TaskInstance generate(const TaskParams& params, std::uint64_t seed);

/// Rebuilds an instance around an explicit payload (hand-written fixtures,
/// dataset loading). Math payload tokens must be integers. The ground truth is
/// recomputed with exact_solve.
TaskInstance make_instance(const TaskParams& params, std::uint64_t seed, TokenSequence payload,
                           std::string subject);

/// Brute-force answer straight from the payload tokens.
Answer exact_solve(const TaskInstance& instance);

struct KvContent {
    std::optional<std::string> value;  // nullopt: absent
    friend bool operator==(const KvContent&, const KvContent&) = default;
};

struct MathContent {
    std::vector<std::int64_t> values;  // sorted in the task direction
    friend bool operator==(const MathContent&, const MathContent&) = default;
};

struct AliasContent {
    std::vector<std::pair<std::string, std::string>> pairs;  // alias -> referent
    friend bool operator==(const AliasContent&, const AliasContent&) = default;
};

using ArtifactContent = std::variant<KvContent, MathContent, AliasContent>;

struct Artifact {
    std::size_t chunk_id = 0;
    ArtifactContent content;
    std::size_t token_cost = 1;

    friend bool operator==(const Artifact&, const Artifact&) = default;
};

/// Whitespace-token text a worker would emit for this content; "NONE" when empty.
std::string render_content(const ArtifactContent& content);
std::size_t content_token_cost(const ArtifactContent& content);
Artifact make_artifact(std::size_t chunk_id, ArtifactContent content);

Artifact ideal_artifact(const TaskInstance& instance, const TokenSpan& chunk, std::size_t chunk_id);

/// Throws InstanceCorruption when KV artifacts report different values.
Answer ideal_aggregate(const TaskInstance& instance, const std::vector<Artifact>& artifacts);

/// Metric value before flooring, in [0, 1].
double raw_score(const TaskInstance& instance, const Answer& prediction, MetricKind metric);
Score score(const TaskInstance& instance, const Answer& prediction, MetricKind metric,
            bool* clamped = nullptr);

/// Harmonic mean of whitespace-token precision and recall (multiset overlap).
double token_f1(std::string_view prediction, std::string_view truth);

/// Name of the k-th rank, e.g. "2nd".
std::string ordinal(std::size_t k);

}  // namespace dnc
