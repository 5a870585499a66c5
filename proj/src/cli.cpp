#include "dnc/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dnc/errors.hpp"
#include "dnc/seed.hpp"

namespace dnc {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, std::string_view what) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", what, s));
    }
    return v;
}

std::ofstream open_out(const std::string& path, bool append = false) {
    if (path.empty()) throw ConfigError("this command needs --out <path>");
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
    return out;
}

// Writes JSON to --out, or to stdout when no path was given.
void emit_json(const GlobalOptions& g, const Json& j) {
    if (g.out.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    auto out = open_out(g.out);
    out << j.dump(2) << '\n';
}

Json manifest_line(const GlobalOptions& g, std::string command, Json config, std::string dataset,
                   std::vector<std::string> outputs) {
    RunManifest m;
    m.command = std::move(command);
    m.config = std::move(config);
    m.seed = g.seed;
    m.dataset = std::move(dataset);
    std::erase(outputs, std::string{});
    m.outputs = std::move(outputs);
    m.timestamp = timestamp_now(g.normalize_timestamps);
    return to_json(m);
}

Json backend_config(const BackendOptions& b) {
    // The key itself is never recorded, only the variable name.
    return Json{{"worker", b.worker},
                {"manager", b.manager},
                {"single", b.single},
                {"worker_latency", b.worker_latency},
                {"manager_latency", b.manager_latency},
                {"single_latency", b.single_latency},
                {"overlap", b.overlap},
                {"max_parallel", b.max_parallel},
                {"metric", b.metric},
                {"prompt_style", b.prompt_style},
                {"worker_prompt", b.worker_prompt},
                {"manager_prompt", b.manager_prompt},
                {"endpoint_url", b.endpoint_url},
                {"model_name", b.model_name},
                {"api_key_env", b.api_key_env}};
}

std::string format_number(double v) { return fmt::format("{}", v); }

}  // namespace

TaskParams GenerateOptions::params() const {
    switch (task_kind_from_string(kind)) {
        case TaskKind::KV: return KvParams{pairs, !unaligned};
        case TaskKind::Math: return MathParams{length, k, direction_from_string(direction), sigma};
        case TaskKind::AliasChain: return AliasParams{chain_length, filler, budget, distractors};
    }
    throw ConfigError("unknown task kind");
}

LatencyCurve parse_latency(const std::string& text) {
    if (trim(text).empty()) return {};
    const auto parts = split(text, ',');
    if (parts.size() != 2) {
        throw ConfigError(fmt::format("latency curve '{}' must be 'intercept,per_token'", text));
    }
    LatencyCurve c{parse_double(parts[0], "latency intercept"), parse_double(parts[1], "latency per_token")};
    c.validate();
    return c;
}

Backend parse_backend(const std::string& spec, const LatencyCurve& latency, std::uint64_t seed,
                      const std::shared_ptr<ChatModel>& client, PromptStyle style) {
    const std::string_view s = trim(spec);
    if (s == "oracle") return OracleBackend{latency};
    if (s.starts_with("noisy:")) {
        try {
            return NoisyBackend{parse_model(s.substr(6)), seed, latency};
        } catch (const DomainError& e) {
            throw ConfigError(fmt::format("backend '{}': {}", spec, e.what()));
        }
    }
    if (s == "live") {
        if (!client) throw ConfigError("live backends need --endpoint-url and --model-name");
        return LiveBackend{client, style};
    }
    throw ConfigError(fmt::format("unknown backend '{}' (expected oracle, noisy:<model> or live)", spec));
}

std::vector<std::size_t> parse_chunk_list(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto part : split(text, ',')) {
        if (part.empty()) continue;
        try {
            out.push_back(parse_chunk_label(part));
        } catch (const FormatError& e) {
            throw ConfigError(e.what());
        }
    }
    if (out.empty()) throw ConfigError("chunk size list is empty");
    return out;
}

BackendSet::BackendSet(const BackendOptions& o, std::uint64_t root_seed, std::shared_ptr<ChatModel> live_client) {
    const PromptStyle style = prompt_style_from_string(o.prompt_style);
    const bool wants_live = o.worker == "live" || o.manager == "live" || o.single == "live";
    if (wants_live && !live_client) {
        EndpointConfig ep;
        ep.base_url = o.endpoint_url;
        ep.model_name = o.model_name;
        ep.api_key_env = o.api_key_env;
        ep.timeout_s = o.timeout;
        ep.max_retries = o.max_retries;
        ep.max_concurrent = o.max_concurrent;
        live_client = std::make_shared<LlmClient>(ep);
    }
    worker = parse_backend(o.worker, parse_latency(o.worker_latency), derive_seed(root_seed, "worker"), live_client, style);
    manager = parse_backend(o.manager, parse_latency(o.manager_latency), derive_seed(root_seed, "manager"), live_client,
                            style);
    single = parse_backend(o.single, parse_latency(o.single_latency), derive_seed(root_seed, "single"), live_client, style);
    if (!o.worker_prompt.empty() || !o.manager_prompt.empty()) {
        if (o.worker_prompt.empty() || o.manager_prompt.empty()) {
            throw ConfigError("--worker-prompt and --manager-prompt must be given together");
        }
        prompts = load_prompt_bundle(o.worker_prompt, o.manager_prompt);
    }
    metric = metric_from_string(o.metric);
    overlap = o.overlap;
    max_parallel = o.max_parallel;
    if (max_parallel < 1) throw ConfigError("--max-parallel must be >= 1");
}

PipelineConfig BackendSet::pipeline_config(const TaskInstance& instance, std::size_t chunk_size) const {
    PipelineConfig cfg;
    cfg.plan = plan_chunks(instance.total_length, chunk_size, overlap);
    cfg.worker = worker;
    cfg.manager = manager;
    cfg.max_parallel_workers = max_parallel;
    cfg.prompt_bundle = prompts;
    cfg.metric = metric;
    return cfg;
}

std::vector<TaskInstance> load_dataset(const std::string& path) {
    const auto lines = read_jsonl(path);
    std::vector<TaskInstance> out;
    out.reserve(lines.size());
    for (std::size_t i = 1; i < lines.size(); ++i) out.push_back(instance_from_json(lines[i]));
    return out;
}

std::vector<TaskInstance> cmd_generate(const GlobalOptions& g, const GenerateOptions& o) {
    const TaskParams params = o.params();
    std::vector<TaskInstance> out;
    out.reserve(o.count);
    for (std::size_t i = 0; i < o.count; ++i) out.push_back(generate(params, derive_seed(g.seed, "instance", i)));

    auto file = open_out(g.out);
    Json config = to_json(params);
    config["kind"] = o.kind;
    config["count"] = o.count;
    file << manifest_line(g, "generate", config, "", {g.out}).dump() << '\n';
    for (const auto& inst : out) file << instance_to_json(inst).dump() << '\n';
    return out;
}

RunSummary cmd_run(const GlobalOptions& g, const RunOptions& o) {
    const auto dataset = load_dataset(o.dataset);
    const BackendSet backends(o.backends, g.seed);
    const bool do_dc = o.dc || !o.single;
    const bool do_single = o.single;

    // Resume: keep what is already on disk, skip instance ids whose records are all there.
    std::map<std::string, std::set<std::string>> done;
    const bool existing = o.resume && std::filesystem::exists(g.out) && std::filesystem::file_size(g.out) > 0;
    if (existing) {
        const auto lines = read_jsonl(g.out);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            done[lines[i].value("instance_id", "")].insert(lines[i].value("type", ""));
        }
    }

    auto file = open_out(g.out, existing);
    if (!existing) {
        Json config = backend_config(o.backends);
        config["chunk_size"] = o.chunk_size;
        config["dc"] = do_dc;
        config["single"] = do_single;
        file << manifest_line(g, "run", config, o.dataset, {g.out}).dump() << '\n';
    }

    RunSummary summary;
    for (const auto& inst : dataset) {
        const auto it = done.find(inst.id());
        const bool have_dc = it != done.end() && it->second.contains("dc");
        const bool have_single = it != done.end() && it->second.contains("single");
        if ((!do_dc || have_dc) && (!do_single || have_single)) {
            ++summary.skipped;
            continue;
        }
        if (do_dc && !have_dc) {
            file << run_to_json(run_pipeline(inst, backends.pipeline_config(inst, o.chunk_size))).dump() << '\n';
            ++summary.written;
        }
        if (do_single && !have_single) {
            file << single_to_json(inst, run_single(inst, backends.single, backends.metric), describe(backends.single))
                        .dump()
                 << '\n';
            ++summary.written;
        }
        file.flush();
    }
    return summary;
}

std::vector<SweepRow> cmd_sweep(const GlobalOptions& g, const SweepOptions& o) {
    const auto dataset = load_dataset(o.dataset);
    if (dataset.empty()) throw ConfigError(fmt::format("dataset '{}' holds no instances", o.dataset));
    const auto sizes = parse_chunk_list(o.chunk_sizes);
    const BackendSet backends(o.backends, g.seed);

    std::vector<SweepRow> rows;
    for (const std::size_t c : sizes) {
        SweepRow row;
        row.chunk_size = c;
        double score_sum = 0.0;
        LossBreakdown loss_sum;
        std::size_t with_losses = 0;
        for (const auto& inst : dataset) {
            const auto run = run_pipeline(inst, backends.pipeline_config(inst, c));
            if (run.status != RunStatus::Complete) continue;
            ++row.runs;
            score_sum += run.final_score.value();
            if (run.losses) {
                ++with_losses;
                loss_sum.l_task += run.losses->l_task;
                loss_sum.l_agg += run.losses->l_agg;
                loss_sum.l_model += run.losses->l_model;
                loss_sum.l_sys += run.losses->l_sys;
            }
        }
        if (row.runs > 0) row.mean_score = score_sum / static_cast<double>(row.runs);
        if (with_losses > 0 && with_losses == row.runs) {
            const double n = static_cast<double>(with_losses);
            row.mean_losses = LossBreakdown{loss_sum.l_task / n, loss_sum.l_agg / n, loss_sum.l_model / n,
                                            loss_sum.l_sys / n};
            row.regime = std::string(to_string(classify_regime(*row.mean_losses).regime));
        }
        rows.push_back(row);
    }

    auto file = open_out(g.out);
    file << "chunk_size,mean_score,mean_l_task,mean_l_agg,mean_l_model,mean_l_sys,regime,runs\n";
    for (const auto& r : rows) {
        const auto loss = [&](double LossBreakdown::*m) {
            return r.mean_losses ? format_number((*r.mean_losses).*m) : std::string();
        };
        file << fmt::format("{},{},{},{},{},{},{},{}\n", r.chunk_size, format_number(r.mean_score),
                            loss(&LossBreakdown::l_task), loss(&LossBreakdown::l_agg), loss(&LossBreakdown::l_model),
                            loss(&LossBreakdown::l_sys), r.regime, r.runs);
    }
    return rows;
}

Json cmd_decompose(const GlobalOptions& g, const DecomposeOptions& o) {
    const auto lines = read_jsonl(o.results);
    struct Group {
        std::size_t runs = 0;
        std::size_t clamped = 0;
        LossBreakdown sum;
    };
    std::map<std::string, Group> groups;
    Json runs = Json::array();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const Json& rec = lines[i];
        if (rec.value("type", "") != "dc" || rec.value("status", "") != "complete") continue;
        if (!rec.contains("scores") || rec.at("scores").is_null()) {
            throw ConfigError(fmt::format("{}: record for {} has no oracle scores; decompose needs simulator runs",
                                          o.results, rec.value("instance_id", "?")));
        }
        const auto scores = decomposed_scores_from_json(rec.at("scores"));
        const auto m = measure_triple(scores);
        const auto losses = to_losses(m.triple);
        const auto label = classify_regime(losses);
        const std::string kind = rec.value("kind", "?");
        auto& grp = groups[kind];
        ++grp.runs;
        grp.clamped += m.monotonicity_clamped ? 1 : 0;
        grp.sum.l_task += losses.l_task;
        grp.sum.l_agg += losses.l_agg;
        grp.sum.l_model += losses.l_model;
        grp.sum.l_sys += losses.l_sys;
        runs.push_back(Json{{"instance_id", rec.value("instance_id", "")},
                            {"kind", kind},
                            {"triple", to_json(m.triple)},
                            {"losses", to_json(losses)},
                            {"regime", to_string(label.regime)},
                            {"indeterminate", label.indeterminate},
                            {"monotonicity_clamped", m.monotonicity_clamped}});
    }
    Json by_kind = Json::object();
    for (const auto& [kind, grp] : groups) {
        const double n = static_cast<double>(grp.runs);
        const LossBreakdown mean{grp.sum.l_task / n, grp.sum.l_agg / n, grp.sum.l_model / n, grp.sum.l_sys / n};
        const auto label = classify_regime(mean);
        by_kind[kind] = Json{{"runs", grp.runs},
                             {"mean_losses", to_json(mean)},
                             {"regime", to_string(label.regime)},
                             {"indeterminate", label.indeterminate},
                             {"monotonicity_clamped_runs", grp.clamped}};
    }
    Json report{{"results", o.results}, {"runs", runs}, {"by_kind", by_kind}};
    emit_json(g, report);
    return report;
}

EstimateOutcome cmd_estimate(const GlobalOptions& g, const EstimateOptions& o) {
    const auto dataset = load_dataset(o.dataset);
    const BackendSet backends(o.backends, g.seed);
    const PipelineFactory factory = [&](std::size_t c, const TaskInstance& inst) {
        return backends.pipeline_config(inst, c);
    };
    EstimatorConfig cfg{parse_chunk_list(o.candidates), o.budget_m, g.seed, tie_break_from_string(o.tie_break)};
    EstimateOutcome out;
    out.estimate = estimate_chunk_size(cfg, dataset, factory);
    ReportRow row{o.label, {best_cell(out.estimate)}};
    std::string header = fmt::format("model m={}", o.budget_m);
    if (o.exhaustive) {
        out.exhaustive = exhaustive_search(cfg.candidates, dataset, factory, cfg.tie_break);
        row.cells.push_back(best_cell(*out.exhaustive));
        header += " exhaustive";
    }
    out.table = fmt::format("{}\n{}\n", header, format_report_row(row));

    Json j{{"estimate", to_json(out.estimate)},
           {"budget_m", o.budget_m},
           {"candidates", cfg.candidates},
           {"tie_break", to_string(cfg.tie_break)},
           {"table", out.table},
           {"sampling", "without replacement per candidate; independent draws per (candidate, m)"}};
    if (out.exhaustive) j["exhaustive"] = to_json(*out.exhaustive);
    j["manifest"] = to_json(RunManifest{"estimate", backend_config(o.backends), g.seed, o.dataset, {g.out}, kToolVersion,
                                        timestamp_now(g.normalize_timestamps)})["manifest"];
    emit_json(g, j);
    return out;
}

CrossoverResult cmd_crossover(const GlobalOptions& g, const CrossoverOptions& o) {
    DegradationModel strong;
    try {
        strong = parse_model(o.strong);
    } catch (const DomainError& e) {
        throw ConfigError(fmt::format("--strong: {}", e.what()));
    }
    const DcLossModel dc{o.unit_loss, o.slope, o.intercept};
    const auto r = crossover(strong, dc, o.chunk_size, o.search_max);
    Json j = to_json(r);
    j["strong"] = format_model(strong);
    j["dc"] = Json{{"unit_loss", dc.per_chunk_unit_loss}, {"slope", dc.overhead_slope}, {"intercept", dc.overhead_intercept}};
    j["chunk_size"] = o.chunk_size;
    j["search_max"] = o.search_max;
    emit_json(g, j);
    return r;
}

CostReport cmd_cost(const GlobalOptions& g, const CostOptions& o) {
    const auto r = make_cost_report(o.single, o.worker, o.manager, o.prices, o.inputs);
    emit_json(g, to_json(r));
    return r;
}

FitResult cmd_fit(const GlobalOptions& g, const FitOptions& o) {
    std::vector<FitPoint> points;
    const auto add = [&](std::string_view len, std::string_view val, std::string_view where) {
        points.push_back({parse_double(len, where), parse_double(val, where)});
    };
    if (!o.points.empty()) {
        for (const auto item : split(o.points, ',')) {
            const auto parts = split(item, ':');
            if (parts.size() != 2) throw ConfigError(fmt::format("--points entry '{}' must be length:value", item));
            add(parts[0], parts[1], "--points");
        }
    }
    if (!o.input.empty()) {
        std::ifstream in(o.input);
        if (!in) throw ConfigError(fmt::format("cannot open '{}'", o.input));
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            const auto t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            const auto parts = split(t, ',');
            if (parts.size() < 2) throw ConfigError(fmt::format("{}: line '{}' needs length,value", o.input, t));
            // Optional header row.
            if (first && (parts[0].empty() || !(std::isdigit(static_cast<unsigned char>(parts[0][0])) || parts[0][0] == '.'))) {
                first = false;
                continue;
            }
            first = false;
            add(parts[0], parts[1], o.input);
        }
    }
    if (points.empty()) throw ConfigError("fit needs --input <csv> or --points");
    const auto r = o.losses ? fit_power_law_losses(points) : fit_power_law(points);
    emit_json(g, to_json(r));
    return r;
}

}  // namespace dnc
