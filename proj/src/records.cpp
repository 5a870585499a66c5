#include "dnc/records.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <fmt/format.h>

#include "dnc/errors.hpp"

namespace dnc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Json answer_json(const Answer& a) { return a ? Json(*a) : Json(nullptr); }

Answer answer_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<std::string>();
}

Json content_json(const ArtifactContent& content) {
    return std::visit(overloaded{
                          [](const KvContent& c) { return Json{{"value", answer_json(c.value)}}; },
                          [](const MathContent& c) { return Json{{"values", c.values}}; },
                          [](const AliasContent& c) {
                              Json pairs = Json::array();
                              for (const auto& [from, to] : c.pairs) pairs.push_back({from, to});
                              return Json{{"pairs", pairs}};
                          },
                      },
                      content);
}

}  // namespace

Json to_json(const TaskParams& params) {
    return std::visit(overloaded{
                          [](const KvParams& p) { return Json{{"pair_count", p.pair_count}, {"aligned", p.aligned}}; },
                          [](const MathParams& p) {
                              return Json{{"count", p.count},
                                          {"k", p.k},
                                          {"direction", to_string(p.direction)},
                                          {"sigma", p.sigma}};
                          },
                          [](const AliasParams& p) {
                              return Json{{"chain_length", p.chain_length},
                                          {"filler_tokens", p.filler_tokens},
                                          {"artifact_budget", p.artifact_budget},
                                          {"distractor_pairs", p.distractor_pairs}};
                          },
                      },
                      params);
}

TaskParams task_params_from_json(TaskKind kind, const Json& j) {
    try {
        switch (kind) {
            case TaskKind::KV:
                return KvParams{j.at("pair_count").get<std::size_t>(), j.value("aligned", true)};
            case TaskKind::Math:
                return MathParams{j.at("count").get<std::size_t>(), j.at("k").get<std::size_t>(),
                                  direction_from_string(j.at("direction").get<std::string>()),
                                  j.value("sigma", 1e6)};
            case TaskKind::AliasChain:
                return AliasParams{j.at("chain_length").get<std::size_t>(), j.value("filler_tokens", std::size_t{0}),
                                   j.value("artifact_budget", std::size_t{0}),
                                   j.value("distractor_pairs", std::size_t{0})};
        }
    } catch (const Json::exception& e) {
        throw FormatError(fmt::format("bad {} params: {}", to_string(kind), e.what()));
    }
    throw FormatError("unknown task kind");
}

Json instance_to_json(const TaskInstance& instance) {
    Json params = to_json(instance.params);
    if (!instance.subject.empty()) params["subject"] = instance.subject;
    return Json{
        {"kind", to_string(instance.kind)},
        {"seed", instance.seed},
        {"params", params},
        {"query", instance.query},
        {"ground_truth", answer_json(instance.ground_truth)},
        {"payload", std::string(instance.payload.text())},
    };
}

TaskInstance instance_from_json(const Json& j) {
    try {
        const TaskKind kind = task_kind_from_string(j.at("kind").get<std::string>());
        const Json& params = j.at("params");
        TaskInstance inst = make_instance(task_params_from_json(kind, params), j.at("seed").get<std::uint64_t>(),
                                          tokenize(j.at("payload").get<std::string>()),
                                          params.value("subject", std::string{}));
        const Answer stored = answer_from(j.at("ground_truth"));
        if (stored != inst.ground_truth) {
            throw InstanceCorruption(fmt::format("instance {}: stored answer {} but the payload gives {}", inst.id(),
                                                 stored.value_or("null"), inst.ground_truth.value_or("null")));
        }
        return inst;
    } catch (const Json::exception& e) {
        throw FormatError(fmt::format("bad dataset line: {}", e.what()));
    }
}

Json to_json(const ChunkPlan& plan) {
    Json bounds = Json::array();
    for (const auto& b : plan.boundaries) bounds.push_back({b.start, b.end});
    return Json{{"total_length", plan.total_length},
                {"chunk_size", plan.chunk_size},
                {"overlap", plan.overlap},
                {"chunk_count", plan.chunk_count()},
                {"boundaries", bounds}};
}

Json to_json(const Artifact& artifact) {
    return Json{{"chunk_id", artifact.chunk_id},
                {"content", content_json(artifact.content)},
                {"text", render_content(artifact.content)},
                {"token_cost", artifact.token_cost}};
}

Json to_json(const DecomposedScores& s) {
    return Json{{"s_truth", s.s_truth.value()},
                {"s_ideal_agg_ideal_art", s.s_ideal_agg_ideal_art.value()},
                {"s_real_agg_ideal_art", s.s_real_agg_ideal_art.value()},
                {"s_real_agg_real_art", s.s_real_agg_real_art.value()}};
}

DecomposedScores decomposed_scores_from_json(const Json& j) {
    try {
        return DecomposedScores{Score(j.at("s_truth").get<double>()), Score(j.at("s_ideal_agg_ideal_art").get<double>()),
                                Score(j.at("s_real_agg_ideal_art").get<double>()),
                                Score(j.at("s_real_agg_real_art").get<double>())};
    } catch (const Json::exception& e) {
        throw FormatError(fmt::format("bad scores block: {}", e.what()));
    }
}

Json to_json(const FidelityTriple& t) {
    return Json{{"rho_task", t.rho_task}, {"rho_agg", t.rho_agg}, {"rho_model", t.rho_model}};
}

Json to_json(const LossBreakdown& l) {
    return Json{{"l_task", l.l_task}, {"l_agg", l.l_agg}, {"l_model", l.l_model}, {"l_sys", l.l_sys}};
}

Json run_to_json(const PipelineRun& run) {
    const auto& cfg = run.config;
    Json workers = Json::array();
    for (const auto& w : run.worker_outputs) {
        workers.push_back(Json{{"chunk_id", w.chunk_id},
                               {"artifact", to_json(w.artifact)},
                               {"input_tokens", w.input_tokens},
                               {"output_tokens", w.output_tokens},
                               {"latency", w.latency},
                               {"corrupted", w.corrupted},
                               {"parse_failure", w.parse_failure}});
    }
    Json j{
        {"type", "dc"},
        {"instance_id", run.instance_id},
        {"kind", to_string(run.kind)},
        {"status", to_string(run.status)},
        {"error", run.error},
        {"config",
         Json{{"plan", to_json(cfg.plan)},
              {"worker", describe(cfg.worker)},
              {"manager", describe(cfg.manager)},
              {"max_parallel_workers", cfg.max_parallel_workers},
              {"metric", to_string(cfg.metric)},
              {"prompt_bundle", cfg.prompt_bundle.has_value()},
              {"thresholds",
               Json{{"trivial_threshold", cfg.thresholds.trivial_threshold},
                    {"dominance_ratio", cfg.thresholds.dominance_ratio}}}}},
        {"worker_outputs", workers},
        {"manager",
         Json{{"answer", answer_json(run.manager.answer)},
              {"l_agg", run.manager.l_agg},
              {"output_tokens", run.manager.output_tokens},
              {"latency", run.manager.latency},
              {"corrupted", run.manager.corrupted},
              {"parse_failure", run.manager.parse_failure},
              {"conflict", run.manager.conflict}}},
        {"score", run.final_score.value()},
        {"timings",
         Json{{"worker_critical_path", run.timings.worker_critical_path},
              {"manager", run.timings.manager},
              {"source", run.timings.modeled ? "modeled" : "measured"}}},
        {"tokens",
         Json{{"input", run.tokens.input},
              {"worker_output", run.tokens.worker_output},
              {"aggregation_input", run.tokens.aggregation_input},
              {"final_output", run.tokens.final_output}}},
        {"worker_calls", run.worker_calls},
        {"manager_calls", run.manager_calls},
        {"flags", run.flags},
    };
    if (run.scores) {
        j["scores"] = to_json(*run.scores);
        j["triple"] = to_json(run.measurement->triple);
        j["monotonicity_clamped"] = run.measurement->monotonicity_clamped;
        j["losses"] = to_json(*run.losses);
        j["regime"] = Json{{"label", to_string(run.regime->regime)}, {"indeterminate", run.regime->indeterminate}};
    } else {
        j["scores"] = nullptr;
    }
    return j;
}

Json single_to_json(const TaskInstance& instance, const SingleRun& run, const std::string& backend) {
    return Json{{"type", "single"},
                {"instance_id", instance.id()},
                {"kind", to_string(instance.kind)},
                {"status", "complete"},
                {"backend", backend},
                {"answer", answer_json(run.answer)},
                {"score", run.score.value()},
                {"error", run.error},
                {"corrupted", run.corrupted},
                {"parse_failure", run.parse_failure},
                {"input_tokens", run.input_tokens},
                {"output_tokens", run.output_tokens},
                {"latency", run.latency}};
}

Json to_json(const CrossoverResult& r) {
    return Json{{"status", to_string(r.status)},
                {"t0", r.t0 ? Json(*r.t0) : Json(nullptr)},
                {"difference_monotone", r.difference_monotone}};
}

Json to_json(const FitResult& r) {
    Json j{{"model", format_model(r.model)},
           {"rss", r.residual_sum_squares},
           {"points_used", r.points_used},
           {"degenerate", r.degenerate}};
    if (const auto* p = std::get_if<PowerLaw>(&r.model)) {
        j["a"] = p->a;
        j["beta"] = p->beta;
        j["superlinear"] = p->beta > 1.0;
    } else {
        j["superlinear"] = false;
    }
    return j;
}

Json to_json(const CostReport& r) {
    return Json{{"single_latency", r.single_latency},
                {"dc_latency", r.dc_latency},
                {"dc_faster", r.dc_faster},
                {"single_cost", r.single_cost},
                {"dc_cost", r.dc_cost},
                {"inputs",
                 Json{{"T", r.inputs.total_length},
                      {"n", r.inputs.chunk_count},
                      {"L_agg", r.inputs.l_agg},
                      {"y", r.inputs.final_output_tokens},
                      {"sum_y_i", r.inputs.worker_output_total}}},
                {"note", "latency assumes every worker runs concurrently; available concurrency is not modeled"}};
}

Json to_json(const EstimateReport& r) {
    Json means = Json::array();
    for (const auto& m : r.means) {
        means.push_back(Json{{"chunk_size", m.chunk_size},
                             {"mean", m.mean},
                             {"samples", m.samples},
                             {"failures", m.failures}});
    }
    return Json{{"chosen", r.chosen},
                {"means", means},
                {"total_evaluations", r.total_evaluations},
                {"failures", r.failures},
                {"flags", r.flags}};
}

Json to_json(const RunManifest& m) {
    return Json{{"manifest",
                 Json{{"command", m.command},
                      {"config", m.config},
                      {"seed", m.seed},
                      {"dataset", m.dataset},
                      {"outputs", m.outputs},
                      {"tool_version", m.tool_version},
                      {"timestamp", m.timestamp}}}};
}

bool is_manifest_line(const Json& j) { return j.is_object() && j.size() == 1 && j.contains("manifest"); }

std::string timestamp_now(bool normalized) {
    if (normalized) return "1970-01-01T00:00:00Z";
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<Json> read_jsonl(const std::string& path, bool require_manifest) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
    std::vector<Json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::exception& e) {
            throw FormatError(fmt::format("{}:{}: invalid JSON ({})", path, lineno, e.what()));
        }
    }
    if (require_manifest && (out.empty() || !is_manifest_line(out.front()))) {
        throw FormatError(fmt::format("{} does not start with a manifest line", path));
    }
    return out;
}

}  // namespace dnc
