#include "dnc/workers.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "dnc/errors.hpp"
#include "dnc/seed.hpp"

namespace dnc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

TaskKind kind_of(const ArtifactContent& content) {
    return std::visit(overloaded{[](const KvContent&) { return TaskKind::KV; },
                                 [](const MathContent&) { return TaskKind::Math; },
                                 [](const AliasContent&) { return TaskKind::AliasChain; }},
                      content);
}

// Changes the last hex digit; anything else gets a suffix. Never returns the input.
std::string perturb_value(const std::string& value) {
    std::string out = value;
    if (!out.empty()) {
        const char c = out.back();
        int digit = -1;
        if (c >= '0' && c <= '9') digit = c - '0';
        if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        if (digit >= 0) {
            out.back() = "0123456789abcdef"[(digit + 1) % 16];
            return out;
        }
    }
    out.push_back('x');
    return out;
}

const PromptBundle& pick_prompts(const LiveBackend& live, const TaskInstance& instance, const PromptBundle* prompts,
                                 PromptBundle& storage) {
    if (prompts != nullptr) return *prompts;
    storage = builtin_prompts(instance.params, live.prompt_style);
    return storage;
}

void require_client(const LiveBackend& live) {
    if (!live.client) throw ConfigError("live backend has no client");
}

}  // namespace

bool is_live(const Backend& backend) { return std::holds_alternative<LiveBackend>(backend); }

std::string describe(const Backend& backend) {
    return std::visit(overloaded{
                          [](const OracleBackend&) { return std::string("oracle"); },
                          [](const NoisyBackend& b) { return fmt::format("noisy({})", format_model(b.model)); },
                          [](const LiveBackend& b) { return fmt::format("live({})", to_string(b.prompt_style)); },
                      },
                      backend);
}

double corruption_probability(const DegradationModel& model, double length) {
    return -std::expm1(-loss_at(model, length));
}

bool noisy_draw(const NoisyBackend& backend, std::uint64_t instance_seed, std::uint64_t index,
                std::string_view purpose, double length) {
    const double p = corruption_probability(backend.model, length);
    if (p <= 0.0) return false;
    return unit_draw(backend.seed, instance_seed, index, purpose) < p;
}

std::vector<Corruption> applicable_corruptions(const Artifact& artifact) {
    std::vector<Corruption> out;
    std::visit(overloaded{
                   [&](const KvContent& c) {
                       if (c.value) {
                           out.push_back({CorruptionOp::FlipToAbsent});
                           out.push_back({CorruptionOp::PerturbValue});
                       } else {
                           out.push_back({CorruptionOp::FlipToFound});
                       }
                   },
                   [&](const MathContent& c) {
                       for (std::size_t i = 0; i < c.values.size(); ++i) {
                           out.push_back({CorruptionOp::RemoveValue, i});
                           out.push_back({CorruptionOp::AdjustValue, i, +1});
                           out.push_back({CorruptionOp::AdjustValue, i, -1});
                       }
                   },
                   [&](const AliasContent& c) {
                       for (std::size_t i = 0; i < c.pairs.size(); ++i) out.push_back({CorruptionOp::DropPair, i});
                   },
               },
               artifact.content);
    return out;
}

Artifact apply_corruption(const Artifact& artifact, const Corruption& corruption) {
    ArtifactContent content = artifact.content;
    const auto bad = [&] {
        return DomainError(fmt::format("corruption {} does not apply to this artifact",
                                       static_cast<int>(corruption.op)));
    };
    switch (corruption.op) {
        case CorruptionOp::FlipToAbsent: {
            auto* c = std::get_if<KvContent>(&content);
            if (!c || !c->value) throw bad();
            c->value.reset();
            break;
        }
        case CorruptionOp::FlipToFound: {
            auto* c = std::get_if<KvContent>(&content);
            if (!c || c->value) throw bad();
            // 'x' is not a hex digit, so a fake value never equals a generated one.
            c->value = fmt::format("x{:07x}", mix64(corruption.salt) & 0xfffffffULL);
            break;
        }
        case CorruptionOp::PerturbValue: {
            auto* c = std::get_if<KvContent>(&content);
            if (!c || !c->value) throw bad();
            c->value = perturb_value(*c->value);
            break;
        }
        case CorruptionOp::RemoveValue: {
            auto* c = std::get_if<MathContent>(&content);
            if (!c || corruption.index >= c->values.size()) throw bad();
            c->values.erase(c->values.begin() + static_cast<std::ptrdiff_t>(corruption.index));
            break;
        }
        case CorruptionOp::AdjustValue: {
            auto* c = std::get_if<MathContent>(&content);
            if (!c || corruption.index >= c->values.size() || (corruption.delta != 1 && corruption.delta != -1)) {
                throw bad();
            }
            c->values[corruption.index] += corruption.delta;
            break;
        }
        case CorruptionOp::DropPair: {
            auto* c = std::get_if<AliasContent>(&content);
            if (!c || corruption.index >= c->pairs.size()) throw bad();
            c->pairs.erase(c->pairs.begin() + static_cast<std::ptrdiff_t>(corruption.index));
            break;
        }
    }
    return make_artifact(artifact.chunk_id, std::move(content));
}

Artifact corrupt_artifact(const Artifact& artifact, TaskKind kind, std::uint64_t draw) {
    if (kind_of(artifact.content) != kind) {
        throw DomainError(fmt::format("artifact content does not belong to a {} task", to_string(kind)));
    }
    auto options = applicable_corruptions(artifact);
    if (options.empty()) return artifact;
    const auto pick = static_cast<std::size_t>(to_unit(mix64(draw)) * static_cast<double>(options.size()));
    Corruption c = options[std::min(pick, options.size() - 1)];
    c.salt = draw;
    return apply_corruption(artifact, c);
}

WorkerOutput worker_from_ideal(const WorkerBackend& backend, const TaskInstance& instance, const Artifact& ideal,
                               std::size_t chunk_length) {
    WorkerOutput out;
    out.chunk_id = ideal.chunk_id;
    out.input_tokens = chunk_length;
    out.artifact = ideal;
    std::visit(overloaded{
                   [&](const OracleBackend& b) { out.latency = b.latency(static_cast<double>(chunk_length)); },
                   [&](const NoisyBackend& b) {
                       out.latency = b.latency(static_cast<double>(chunk_length));
                       if (noisy_draw(b, instance.seed, ideal.chunk_id, "worker", static_cast<double>(chunk_length))) {
                           const auto draw = derive_seed(derive_seed(b.seed, "worker-choice", instance.seed),
                                                         "worker-choice", ideal.chunk_id);
                           out.artifact = corrupt_artifact(ideal, instance.kind, draw);
                           out.corrupted = true;
                       }
                   },
                   [&](const LiveBackend&) {
                       throw DomainError("live workers produce their own artifacts; use run_worker");
                   },
               },
               backend);
    out.output_tokens = out.artifact.token_cost;
    return out;
}

WorkerOutput run_worker(const WorkerBackend& backend, const TaskInstance& instance, const TokenSpan& chunk,
                        std::size_t chunk_id, const PromptBundle* prompts) {
    const auto* live = std::get_if<LiveBackend>(&backend);
    if (live == nullptr) {
        return worker_from_ideal(backend, instance, ideal_artifact(instance, chunk, chunk_id), chunk.size());
    }
    require_client(*live);
    PromptBundle storage;
    const auto& bundle = pick_prompts(*live, instance, prompts, storage);
    const std::string user = render_template(bundle.worker, chunk.text(), instance.query, "");
    const auto ex = live->client->complete("", user, live->max_output_tokens);

    WorkerOutput out;
    out.chunk_id = chunk_id;
    out.input_tokens = ex.usage.input_tokens;
    out.output_tokens = ex.usage.output_tokens;
    out.latency = ex.latency_s;
    ArtifactContent content;
    if (const auto value = parse_answer_line(ex.response_text)) {
        bool failed = false;
        content = parse_artifact_value(instance, *value, &failed);
        out.parse_failure = failed;
    } else {
        bool ignored = false;
        content = parse_artifact_value(instance, "NONE", &ignored);
        out.parse_failure = true;
    }
    out.artifact = make_artifact(chunk_id, std::move(content));
    return out;
}

ManagerOutput run_manager(const ManagerBackend& backend, const TaskInstance& instance,
                          const std::vector<Artifact>& artifacts, const PromptBundle* prompts) {
    ManagerOutput out;
    if (const auto* live = std::get_if<LiveBackend>(&backend)) {
        require_client(*live);
        PromptBundle storage;
        const auto& bundle = pick_prompts(*live, instance, prompts, storage);
        const std::string user = render_template(bundle.manager, "", instance.query, render_responses(artifacts));
        const auto ex = live->client->complete("", user, live->max_output_tokens);
        out.l_agg = ex.usage.input_tokens;
        out.output_tokens = ex.usage.output_tokens;
        out.latency = ex.latency_s;
        if (const auto value = parse_answer_line(ex.response_text)) {
            out.answer = parse_final_answer(*value);
        } else {
            out.parse_failure = true;
        }
        return out;
    }

    for (const auto& a : artifacts) out.l_agg += a.token_cost;
    if (prompts != nullptr) out.l_agg += prompt_overhead_tokens(prompts->manager, instance.query);
    try {
        out.answer = ideal_aggregate(instance, artifacts);
    } catch (const InstanceCorruption&) {
        out.answer.reset();
        out.conflict = true;
    }
    const double l_agg = static_cast<double>(out.l_agg);
    std::visit(overloaded{
                   [&](const OracleBackend& b) { out.latency = b.latency(l_agg); },
                   [&](const NoisyBackend& b) {
                       out.latency = b.latency(l_agg);
                       if (noisy_draw(b, instance.seed, 0, "manager", l_agg)) {
                           out.answer.reset();
                           out.corrupted = true;
                       }
                   },
                   [](const LiveBackend&) {},
               },
               backend);
    out.output_tokens = out.answer ? tokenize(*out.answer).size() : 1;
    return out;
}

}  // namespace dnc
