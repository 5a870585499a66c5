#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dnc/cli.hpp"
#include "dnc/errors.hpp"

namespace dnc {

namespace {

void add_backend_options(CLI::App* cmd, BackendOptions& b) {
    cmd->add_option("--worker", b.worker, "worker backend: oracle | noisy:<model> | live")->capture_default_str();
    cmd->add_option("--manager", b.manager, "manager backend: oracle | noisy:<model> | live")->capture_default_str();
    cmd->add_option("--single", b.single, "single-shot backend: oracle | noisy:<model> | live")->capture_default_str();
    cmd->add_option("--worker-latency", b.worker_latency, "worker latency curve 'intercept,per_token' (seconds)");
    cmd->add_option("--manager-latency", b.manager_latency, "manager latency curve 'intercept,per_token'");
    cmd->add_option("--single-latency", b.single_latency, "single-shot latency curve 'intercept,per_token'");
    cmd->add_option("--overlap", b.overlap, "tokens shared by adjacent chunks")->capture_default_str();
    cmd->add_option("--max-parallel", b.max_parallel, "concurrent worker calls")->capture_default_str();
    cmd->add_option("--metric", b.metric, "exact | f1")->capture_default_str();
    cmd->add_option("--prompt-style", b.prompt_style, "manual | planner")->capture_default_str();
    cmd->add_option("--worker-prompt", b.worker_prompt, "worker template file ({chunk}, {query})");
    cmd->add_option("--manager-prompt", b.manager_prompt, "manager template file ({responses}, {query})");
    cmd->add_option("--endpoint-url", b.endpoint_url, "chat-completions base URL for live backends");
    cmd->add_option("--model-name", b.model_name, "model identifier for live backends");
    cmd->add_option("--api-key-env", b.api_key_env, "environment variable holding the API key")->capture_default_str();
    cmd->add_option("--timeout", b.timeout, "request timeout in seconds")->capture_default_str();
    cmd->add_option("--max-retries", b.max_retries, "retries after the first attempt")->capture_default_str();
    cmd->add_option("--max-concurrent", b.max_concurrent, "requests in flight per endpoint")->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Divide-and-conquer long-context experiments: simulate, sweep, decompose and estimate.", "dnc"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "read options from an INI/TOML file ([subcommand] sections)");

    GlobalOptions g;
    app.add_option("--seed", g.seed, "root seed; every sub-seed derives from it")->capture_default_str();
    app.add_option("--out", g.out, "output path");
    app.add_flag("--normalize-timestamps", g.normalize_timestamps, "write a fixed timestamp into manifests");

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "write a JSONL dataset of synthetic task instances");
    generate->add_option("--kind", gen.kind, "kv | math | alias")->capture_default_str();
    generate->add_option("--count", gen.count, "number of instances")->capture_default_str();
    generate->add_option("--pairs", gen.pairs, "kv: key:value pairs")->capture_default_str();
    generate->add_flag("--unaligned", gen.unaligned, "kv: split each pair over two tokens");
    generate->add_option("--length", gen.length, "math: list length")->capture_default_str();
    generate->add_option("-k,--k", gen.k, "math: rank")->capture_default_str();
    generate->add_option("--direction", gen.direction, "math: smallest | largest")->capture_default_str();
    generate->add_option("--sigma", gen.sigma, "math: Gaussian standard deviation")->capture_default_str();
    generate->add_option("--chain-length", gen.chain_length, "alias: links in the chain")->capture_default_str();
    generate->add_option("--filler", gen.filler, "alias: filler tokens")->capture_default_str();
    generate->add_option("--budget", gen.budget, "alias: pairs per artifact (0 = chain_length/4)")->capture_default_str();
    generate->add_option("--distractors", gen.distractors, "alias: unrelated alias pairs")->capture_default_str();

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "run D&C and/or single-shot over a dataset");
    run_cmd->add_option("--dataset", run.dataset, "dataset JSONL")->required();
    run_cmd->add_option("--chunk-size", run.chunk_size, "tokens per chunk")->capture_default_str();
    run_cmd->add_flag("--dc", run.dc, "run the D&C pipeline (default when --single is absent)");
    run_cmd->add_flag("--single-shot", run.single, "run the single-shot baseline");
    run_cmd->add_flag("--resume", run.resume, "append to --out, skipping instances already recorded");
    add_backend_options(run_cmd, run.backends);

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "mean score and losses per chunk size, as CSV");
    sweep_cmd->add_option("--dataset", sweep.dataset, "dataset JSONL")->required();
    sweep_cmd->add_option("--chunk-sizes", sweep.chunk_sizes, "comma-separated sizes, e.g. 1K,2K,4K")
        ->capture_default_str();
    add_backend_options(sweep_cmd, sweep.backends);

    DecomposeOptions decompose;
    auto* decompose_cmd = app.add_subcommand("decompose", "fidelity triples and regimes from simulator run records");
    decompose_cmd->add_option("--results", decompose.results, "results JSONL from 'run'")->required();

    EstimateOptions estimate;
    auto* estimate_cmd = app.add_subcommand("estimate", "pick a chunk size from m sampled instances per candidate");
    estimate_cmd->add_option("--dataset", estimate.dataset, "dataset JSONL")->required();
    estimate_cmd->add_option("--candidates", estimate.candidates, "comma-separated sizes")->capture_default_str();
    estimate_cmd->add_option("--budget-m", estimate.budget_m, "instances per candidate")->capture_default_str();
    estimate_cmd->add_option("--tie-break", estimate.tie_break, "larger | smaller")->capture_default_str();
    estimate_cmd->add_flag("--exhaustive", estimate.exhaustive, "also run the full grid for comparison");
    estimate_cmd->add_option("--label", estimate.label, "row label in the table")->capture_default_str();
    add_backend_options(estimate_cmd, estimate.backends);

    CrossoverOptions cross;
    auto* cross_cmd = app.add_subcommand("crossover", "length beyond which chunked loss stays below single-shot loss");
    cross_cmd->add_option("--strong", cross.strong, "single-model loss curve, e.g. powerlaw:1e-6,2")
        ->capture_default_str();
    cross_cmd->add_option("--unit-loss", cross.unit_loss, "loss per chunk")->capture_default_str();
    cross_cmd->add_option("--slope", cross.slope, "D&C loss per token")->capture_default_str();
    cross_cmd->add_option("--intercept", cross.intercept, "constant D&C loss")->capture_default_str();
    cross_cmd->add_option("--chunk-size", cross.chunk_size, "tokens per chunk")->capture_default_str();
    cross_cmd->add_option("--search-max", cross.search_max, "largest length searched")->capture_default_str();

    CostOptions cost;
    auto* cost_cmd = app.add_subcommand("cost", "latency and price comparison of single-shot vs D&C");
    cost_cmd->add_option("--single-intercept", cost.single.intercept, "single-model latency intercept (s)");
    cost_cmd->add_option("--single-per-token", cost.single.per_token, "single-model latency per token (s)");
    cost_cmd->add_option("--worker-intercept", cost.worker.intercept, "worker latency intercept (s)");
    cost_cmd->add_option("--worker-per-token", cost.worker.per_token, "worker latency per token (s)");
    cost_cmd->add_option("--manager-intercept", cost.manager.intercept, "manager latency intercept (s)");
    cost_cmd->add_option("--manager-per-token", cost.manager.per_token, "manager latency per token (s)");
    cost_cmd->add_option("--p-big-in", cost.prices.p_big_in, "single model input price per token");
    cost_cmd->add_option("--p-big-out", cost.prices.p_big_out, "single model output price per token");
    cost_cmd->add_option("--p-small-in", cost.prices.p_small_in, "worker input price per token");
    cost_cmd->add_option("--p-small-out", cost.prices.p_small_out, "worker output price per token");
    cost_cmd->add_option("--p-mgr-in", cost.prices.p_mgr_in, "manager input price per token");
    cost_cmd->add_option("--p-mgr-out", cost.prices.p_mgr_out, "manager output price per token");
    cost_cmd->add_option("-T,--total-length", cost.inputs.total_length, "input tokens T");
    cost_cmd->add_option("-n,--chunks", cost.inputs.chunk_count, "chunk count n");
    cost_cmd->add_option("--l-agg", cost.inputs.l_agg, "manager input tokens L_agg");
    cost_cmd->add_option("--y", cost.inputs.final_output_tokens, "final output tokens |y|");
    cost_cmd->add_option("--sum-y-i", cost.inputs.worker_output_total, "total worker output tokens");

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "least-squares power-law fit of error (or loss) against length");
    fit_cmd->add_option("--input", fit.input, "CSV with length,value rows");
    fit_cmd->add_option("--points", fit.points, "inline points 'length:value,...'");
    fit_cmd->add_flag("--losses", fit.losses, "values are losses in nats instead of errors");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (generate->parsed()) {
            const auto inst = cmd_generate(g, gen);
            out << fmt::format("wrote {} instances to {}\n", inst.size(), g.out);
        } else if (run_cmd->parsed()) {
            if (g.out.empty()) throw ConfigError("run needs --out <results.jsonl>");
            const auto s = cmd_run(g, run);
            out << fmt::format("wrote {} records, skipped {} completed instances\n", s.written, s.skipped);
        } else if (sweep_cmd->parsed()) {
            const auto rows = cmd_sweep(g, sweep);
            out << fmt::format("wrote {} rows to {}\n", rows.size(), g.out);
        } else if (decompose_cmd->parsed()) {
            cmd_decompose(g, decompose);
        } else if (estimate_cmd->parsed()) {
            const auto r = cmd_estimate(g, estimate);
            if (!g.out.empty()) out << r.table;
        } else if (cross_cmd->parsed()) {
            cmd_crossover(g, cross);
        } else if (cost_cmd->parsed()) {
            cmd_cost(g, cost);
        } else if (fit_cmd->parsed()) {
            cmd_fit(g, fit);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace dnc
