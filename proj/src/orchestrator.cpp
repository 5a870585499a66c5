#include "dnc/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "dnc/errors.hpp"

namespace dnc {

namespace {

using Clock = std::chrono::steady_clock;

void add_flag(std::vector<std::string>& flags, std::string flag) {
    if (std::find(flags.begin(), flags.end(), flag) == flags.end()) flags.push_back(std::move(flag));
}

std::string describe_exception(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& ex) {
        return ex.what();
    } catch (...) {
        return "unknown error";
    }
}

}  // namespace

std::string_view to_string(RunStatus status) { return status == RunStatus::Complete ? "complete" : "aborted"; }

double critical_path(const std::vector<double>& latencies, std::size_t lanes) {
    if (lanes == 0) throw DomainError("lane count must be >= 1");
    std::vector<double> free_at(std::min(lanes, std::max<std::size_t>(latencies.size(), 1)), 0.0);
    for (const double l : latencies) {
        auto lane = std::min_element(free_at.begin(), free_at.end());
        *lane += l;
    }
    return *std::max_element(free_at.begin(), free_at.end());
}

PipelineRun run_pipeline(const TaskInstance& instance, const PipelineConfig& config) {
    if (config.max_parallel_workers < 1) throw DomainError("max_parallel_workers must be >= 1");
    if (config.plan.total_length != instance.total_length) {
        throw DomainError(fmt::format("plan covers {} tokens but instance {} has {}", config.plan.total_length,
                                      instance.id(), instance.total_length));
    }
    const auto chunks = slice_tokens(instance.payload, config.plan);
    const std::size_t n = chunks.size();
    const bool live_worker = is_live(config.worker);
    const bool simulator = !live_worker && !is_live(config.manager);
    const PromptBundle* prompts = config.prompt_bundle ? &*config.prompt_bundle : nullptr;

    PipelineRun run;
    run.instance_id = instance.id();
    run.kind = instance.kind;
    run.config = config;
    run.timings.modeled = simulator;

    std::vector<Artifact> ideal;
    if (!live_worker || simulator) {
        ideal.reserve(n);
        for (std::size_t i = 0; i < n; ++i) ideal.push_back(ideal_artifact(instance, chunks[i], i));
    }

    // Worker phase.
    std::vector<std::optional<WorkerOutput>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    const auto work = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                slots[i] = live_worker ? run_worker(config.worker, instance, chunks[i], i, prompts)
                                       : worker_from_ideal(config.worker, instance, ideal[i], chunks[i].size());
            } catch (...) {
                errors[i] = std::current_exception();
                stop.store(true);
            }
        }
    };
    const auto phase_start = Clock::now();
    const std::size_t lanes = std::min(config.max_parallel_workers, n);
    if (lanes <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(lanes);
        for (std::size_t t = 0; t < lanes; ++t) pool.emplace_back(work);
    }
    const double measured_worker_time = std::chrono::duration<double>(Clock::now() - phase_start).count();

    std::vector<Artifact> artifacts;
    std::vector<double> latencies;
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots[i]) continue;
        run.worker_outputs.push_back(*slots[i]);
        artifacts.push_back(slots[i]->artifact);
        latencies.push_back(slots[i]->latency);
        run.tokens.input += slots[i]->input_tokens;
        run.tokens.worker_output += slots[i]->output_tokens;
        if (slots[i]->parse_failure) add_flag(run.flags, "worker_parse_failure");
    }
    run.worker_calls = run.worker_outputs.size();
    run.timings.worker_critical_path =
        simulator ? critical_path(latencies, config.max_parallel_workers) : measured_worker_time;

    const auto first_error = std::find_if(errors.begin(), errors.end(), [](const auto& e) { return e != nullptr; });
    if (first_error != errors.end()) {
        run.status = RunStatus::Aborted;
        run.error = fmt::format("worker {} failed: {}", first_error - errors.begin(), describe_exception(*first_error));
        return run;
    }

    // Manager phase.
    try {
        run.manager = run_manager(config.manager, instance, artifacts, prompts);
    } catch (const std::exception& e) {
        run.status = RunStatus::Aborted;
        run.error = fmt::format("manager failed: {}", e.what());
        return run;
    }
    run.manager_calls = 1;
    run.timings.manager = run.manager.latency;
    run.tokens.aggregation_input = run.manager.l_agg;
    run.tokens.final_output = run.manager.output_tokens;
    if (run.manager.parse_failure) add_flag(run.flags, "manager_parse_failure");
    if (run.manager.conflict) add_flag(run.flags, "conflicting_artifacts");

    bool clamped = false;
    run.final_score = score(instance, run.manager.answer, config.metric, &clamped);
    if (!simulator) return run;

    // Oracle ladder. h(a*) reuses the configured manager and its seed, so it
    // differs from h(â) only in the artifacts.
    Answer ideal_answer;
    try {
        ideal_answer = ideal_aggregate(instance, ideal);
    } catch (const InstanceCorruption&) {
        add_flag(run.flags, "conflicting_artifacts");
    }
    const auto on_ideal = run_manager(config.manager, instance, ideal, prompts);

    bool any_clamped = clamped;
    const auto scored = [&](const Answer& a) {
        bool c = false;
        const Score s = score(instance, a, config.metric, &c);
        any_clamped = any_clamped || c;
        return s;
    };
    DecomposedScores s{scored(instance.ground_truth), scored(ideal_answer), scored(on_ideal.answer),
                       run.final_score};
    if (any_clamped) add_flag(run.flags, "score_clamped");
    run.scores = s;
    run.measurement = measure_triple(s);
    if (run.measurement->monotonicity_clamped) add_flag(run.flags, "monotonicity_clamped");
    run.losses = to_losses(run.measurement->triple);
    run.regime = classify_regime(*run.losses, config.thresholds);
    return run;
}

SingleRun run_single(const TaskInstance& instance, const WorkerBackend& backend, MetricKind metric) {
    SingleRun out;
    const double t = static_cast<double>(instance.total_length);
    out.input_tokens = instance.total_length;
    if (const auto* live = std::get_if<LiveBackend>(&backend)) {
        if (!live->client) throw ConfigError("live backend has no client");
        const auto ex = live->client->complete("", single_shot_prompt(instance), live->max_output_tokens);
        out.input_tokens = ex.usage.input_tokens;
        out.output_tokens = ex.usage.output_tokens;
        out.latency = ex.latency_s;
        if (const auto value = parse_answer_line(ex.response_text)) {
            out.answer = parse_final_answer(*value);
        } else {
            out.parse_failure = true;
        }
    } else {
        out.answer = exact_solve(instance);
        if (const auto* noisy = std::get_if<NoisyBackend>(&backend)) {
            out.latency = noisy->latency(t);
            if (noisy_draw(*noisy, instance.seed, 0, "single", t)) {
                out.answer.reset();
                out.corrupted = true;
            }
        } else {
            out.latency = std::get<OracleBackend>(backend).latency(t);
        }
        out.output_tokens = out.answer ? tokenize(*out.answer).size() : 1;
    }
    out.score = score(instance, out.answer, metric);
    out.error = 1.0 - out.score.value();
    return out;
}

PlannedPrompts plan_prompts(const TaskParams& task, std::string_view task_description, ChatModel* planner) {
    PlannedPrompts out;
    out.bundle = builtin_prompts(task, PromptStyle::PlannerBased);
    if (planner == nullptr) return out;
    const std::string description =
        task_description.empty() ? default_task_description(task) : std::string(task_description);
    const auto ex = planner->complete("", planner_meta_prompt(description), 2048);
    out.planner_response = ex.response_text;
    if (auto planned = extract_planned_prompts(ex.response_text)) {
        out.bundle = std::move(*planned);
    } else {
        out.fallback = true;
    }
    return out;
}

PlannedPrompts refine_prompts(const PromptBundle& current, const std::vector<FailureCase>& failures,
                              ChatModel* planner) {
    PlannedPrompts out;
    out.bundle = current;
    if (failures.empty()) return out;
    if (planner == nullptr) throw ConfigError("prompt refinement needs a live planner endpoint");
    const auto ex = planner->complete("", refinement_meta_prompt(current, failures), 2048);
    out.planner_response = ex.response_text;
    if (auto revised = extract_planned_prompts(ex.response_text)) {
        out.bundle = std::move(*revised);
    } else {
        out.fallback = true;
    }
    return out;
}

}  // namespace dnc
