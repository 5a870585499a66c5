#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dnc/costmodel.hpp"
#include "dnc/degradation.hpp"
#include "dnc/estimator.hpp"
#include "dnc/llm_client.hpp"
#include "dnc/orchestrator.hpp"
#include "dnc/records.hpp"
#include "dnc/tasks.hpp"

namespace dnc {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string out;  // empty: stdout where a command allows it
    std::string config_path;
    bool normalize_timestamps = false;
};

struct GenerateOptions {
    std::string kind = "kv";
    std::size_t count = 1;
    // kv
    std::size_t pairs = 1000;
    bool unaligned = false;
    // math
    std::size_t length = 1000;
    std::size_t k = 1;
    std::string direction = "smallest";
    double sigma = 1e6;
    // alias
    std::size_t chain_length = 16;
    std::size_t filler = 0;
    std::size_t budget = 0;
    std::size_t distractors = 0;

    TaskParams params() const;
};

/// Backend selection shared by run, sweep and estimate. Backend specs:
/// "oracle", "noisy:<model>" (e.g. "noisy:powerlaw:1e-6,2"), "live".
struct BackendOptions {
    std::string worker = "oracle";
    std::string manager = "oracle";
    std::string single = "oracle";
    std::string worker_latency;   // "intercept,per_token"; empty = zero
    std::string manager_latency;
    std::string single_latency;
    std::size_t overlap = 0;
    std::size_t max_parallel = 1;
    std::string metric = "exact";
    std::string prompt_style = "planner";
    std::string worker_prompt;   // template file
    std::string manager_prompt;  // template file
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout = 60.0;
    int max_retries = 3;
    int max_concurrent = 4;
};

/// Backends built once per command; noisy seeds derive from the root seed.
class BackendSet {
public:
    BackendSet(const BackendOptions& options, std::uint64_t root_seed,
               std::shared_ptr<ChatModel> live_client = nullptr);

    PipelineConfig pipeline_config(const TaskInstance& instance, std::size_t chunk_size) const;

    WorkerBackend worker;
    ManagerBackend manager;
    WorkerBackend single;
    std::optional<PromptBundle> prompts;
    MetricKind metric = MetricKind::ExactMatch;
    std::size_t overlap = 0;
    std::size_t max_parallel = 1;
};

LatencyCurve parse_latency(const std::string& text);
Backend parse_backend(const std::string& spec, const LatencyCurve& latency, std::uint64_t seed,
                      const std::shared_ptr<ChatModel>& client, PromptStyle style);
/// "1K,2K,64K" or "1000,2000".
std::vector<std::size_t> parse_chunk_list(const std::string& text);

std::vector<TaskInstance> load_dataset(const std::string& path);

std::vector<TaskInstance> cmd_generate(const GlobalOptions& g, const GenerateOptions& o);

struct RunOptions {
    std::string dataset;
    std::size_t chunk_size = 1000;
    bool dc = false;
    bool single = false;
    bool resume = false;
    BackendOptions backends;
};

struct RunSummary {
    std::size_t written = 0;
    std::size_t skipped = 0;
};

RunSummary cmd_run(const GlobalOptions& g, const RunOptions& o);

struct SweepOptions {
    std::string dataset;
    std::string chunk_sizes = "1K,2K,4K,8K,16K,32K,64K";
    BackendOptions backends;
};

struct SweepRow {
    std::size_t chunk_size = 0;
    double mean_score = 0.0;
    std::optional<LossBreakdown> mean_losses;  // simulator runs only
    std::string regime;
    std::size_t runs = 0;
};

std::vector<SweepRow> cmd_sweep(const GlobalOptions& g, const SweepOptions& o);

struct DecomposeOptions {
    std::string results;
};

Json cmd_decompose(const GlobalOptions& g, const DecomposeOptions& o);

struct EstimateOptions {
    std::string dataset;
    std::string candidates = "1K,2K,4K,8K,16K,32K,64K";
    std::size_t budget_m = 5;
    std::string tie_break = "larger";
    bool exhaustive = false;
    std::string label = "model";
    BackendOptions backends;
};

struct EstimateOutcome {
    EstimateReport estimate;
    std::optional<EstimateReport> exhaustive;
    std::string table;
};

EstimateOutcome cmd_estimate(const GlobalOptions& g, const EstimateOptions& o);

struct CrossoverOptions {
    std::string strong = "powerlaw:1e-6,2";
    double unit_loss = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    std::uint64_t chunk_size = 1000;
    std::uint64_t search_max = kDefaultSearchMax;
};

CrossoverResult cmd_crossover(const GlobalOptions& g, const CrossoverOptions& o);

struct CostOptions {
    LatencyCurve single;
    LatencyCurve worker;
    LatencyCurve manager;
    PriceSheet prices;
    CostInputs inputs;
};

CostReport cmd_cost(const GlobalOptions& g, const CostOptions& o);

struct FitOptions {
    std::string input;   // CSV with length,value rows (header optional)
    std::string points;  // "1000:0.01,2000:0.05"
    bool losses = false; // values are losses in nats rather than errors
};

FitResult cmd_fit(const GlobalOptions& g, const FitOptions& o);

/// Full command-line entry point (parsing, dispatch, error reporting).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dnc
