#include "dnc/costmodel.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dnc/errors.hpp"

namespace dnc {

namespace {

void require_nonnegative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw DomainError(fmt::format("{} must be a finite value >= 0, got {}", name, v));
    }
}

}  // namespace

void LatencyCurve::validate() const {
    require_nonnegative(intercept, "latency intercept");
    require_nonnegative(per_token, "latency per_token");
}

void PriceSheet::validate() const {
    require_nonnegative(p_big_in, "p_big_in");
    require_nonnegative(p_big_out, "p_big_out");
    require_nonnegative(p_small_in, "p_small_in");
    require_nonnegative(p_small_out, "p_small_out");
    require_nonnegative(p_mgr_in, "p_mgr_in");
    require_nonnegative(p_mgr_out, "p_mgr_out");
}

double dc_latency(const LatencyCurve& worker, const LatencyCurve& manager, double total_length,
                  std::size_t chunk_count, double l_agg) {
    if (chunk_count < 1) throw DomainError("chunk_count must be >= 1");
    return worker(total_length / static_cast<double>(chunk_count)) + manager(l_agg);
}

bool dc_faster(const LatencyCurve& single, const LatencyCurve& worker, const LatencyCurve& manager,
               double total_length, std::size_t chunk_count, double l_agg) {
    return single(total_length) > dc_latency(worker, manager, total_length, chunk_count, l_agg);
}

CostPair costs(const PriceSheet& prices, double total_length, double final_output_tokens,
               double worker_output_total, double l_agg) {
    require_nonnegative(total_length, "total_length");
    require_nonnegative(final_output_tokens, "final_output_tokens");
    require_nonnegative(worker_output_total, "worker_output_total");
    require_nonnegative(l_agg, "l_agg");
    CostPair out;
    out.single_cost = prices.p_big_in * total_length + prices.p_big_out * final_output_tokens;
    out.dc_cost = prices.p_small_in * total_length + prices.p_small_out * worker_output_total +
                  prices.p_mgr_in * l_agg + prices.p_mgr_out * final_output_tokens;
    return out;
}

CostReport make_cost_report(const LatencyCurve& single, const LatencyCurve& worker, const LatencyCurve& manager,
                            const PriceSheet& prices, const CostInputs& inputs) {
    single.validate();
    worker.validate();
    manager.validate();
    prices.validate();
    CostReport r;
    r.inputs = inputs;
    r.single_latency = single(inputs.total_length);
    r.dc_latency = dc_latency(worker, manager, inputs.total_length, inputs.chunk_count, inputs.l_agg);
    r.dc_faster = r.single_latency > r.dc_latency;
    const auto c = costs(prices, inputs.total_length, inputs.final_output_tokens, inputs.worker_output_total,
                         inputs.l_agg);
    r.single_cost = c.single_cost;
    r.dc_cost = c.dc_cost;
    return r;
}

}  // namespace dnc
