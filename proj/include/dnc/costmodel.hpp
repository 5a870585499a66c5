#pragma once

#include <cstddef>

namespace dnc {

/// latency(L) = intercept + per_token * L, in seconds.
struct LatencyCurve {
    double intercept = 0.0;
    double per_token = 0.0;

    void validate() const;
    double operator()(double tokens) const noexcept { return intercept + per_token * tokens; }
};

/// Currency per token for the single large model, the small workers and the manager.
struct PriceSheet {
    double p_big_in = 0.0;
    double p_big_out = 0.0;
    double p_small_in = 0.0;
    double p_small_out = 0.0;
    double p_mgr_in = 0.0;
    double p_mgr_out = 0.0;

    void validate() const;
};

/// Parallel workers each see T / n tokens; the manager sees l_agg.
double dc_latency(const LatencyCurve& worker, const LatencyCurve& manager, double total_length,
                  std::size_t chunk_count, double l_agg);

/// single(T) > dc_latency(...), strictly.
bool dc_faster(const LatencyCurve& single, const LatencyCurve& worker, const LatencyCurve& manager,
               double total_length, std::size_t chunk_count, double l_agg);

struct CostPair {
    double single_cost = 0.0;
    double dc_cost = 0.0;
};

CostPair costs(const PriceSheet& prices, double total_length, double final_output_tokens,
               double worker_output_total, double l_agg);

struct CostInputs {
    double total_length = 0.0;
    std::size_t chunk_count = 1;
    double l_agg = 0.0;
    double final_output_tokens = 0.0;
    double worker_output_total = 0.0;
};

struct CostReport {
    double single_latency = 0.0;
    double dc_latency = 0.0;
    bool dc_faster = false;
    double single_cost = 0.0;
    double dc_cost = 0.0;
    CostInputs inputs;
};

CostReport make_cost_report(const LatencyCurve& single, const LatencyCurve& worker, const LatencyCurve& manager,
                            const PriceSheet& prices, const CostInputs& inputs);

}  // namespace dnc
