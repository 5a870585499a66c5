#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "dnc/orchestrator.hpp"
#include "dnc/tasks.hpp"

namespace dnc {

enum class TieBreak { LargerChunk, SmallerChunk };

std::string_view to_string(TieBreak tie_break);
TieBreak tie_break_from_string(std::string_view name);

struct EstimatorConfig {
    std::vector<std::size_t> candidates;  // strictly increasing
    std::size_t budget_m = 1;
    std::uint64_t seed = 0;
    TieBreak tie_break = TieBreak::LargerChunk;

    void validate() const;
};

struct CandidateMean {
    std::size_t chunk_size = 0;
    double mean = 0.0;
    std::size_t samples = 0;   // runs that entered the mean
    std::size_t failures = 0;  // aborted or throwing runs, excluded
};

struct EstimateReport {
    std::size_t chosen = 0;
    std::vector<CandidateMean> means;
    std::size_t total_evaluations = 0;
    std::size_t failures = 0;
    std::vector<std::string> flags;
};

using PipelineFactory = std::function<PipelineConfig(std::size_t chunk_size, const TaskInstance& instance)>;

/// Means closer than this are treated as tied.
inline constexpr double kTieTolerance = 1e-12;

/// Argmax over candidates with ties broken per `tie_break`. Candidates with no
/// successful sample are skipped; throws when none has one.
std::size_t choose_chunk(const std::vector<CandidateMean>& means, TieBreak tie_break);

/// Indices of `m` distinct dev-set instances for one candidate. Depends on
/// instance ids, not on dev-set order.
std::vector<std::size_t> sample_instances(const std::vector<TaskInstance>& dev_set, std::size_t m,
                                          std::uint64_t seed, std::size_t candidate);

EstimateReport estimate_chunk_size(const EstimatorConfig& config, const std::vector<TaskInstance>& dev_set,
                                   const PipelineFactory& factory);

EstimateReport exhaustive_search(const std::vector<std::size_t>& candidates, const std::vector<TaskInstance>& dev_set,
                                 const PipelineFactory& factory, TieBreak tie_break = TieBreak::LargerChunk);

/// "16K" for multiples of 1000, the plain count otherwise.
std::string chunk_label(std::size_t chunk_size);
/// Accepts "16K", "16k" and "16000".
std::size_t parse_chunk_label(std::string_view label);

/// One table cell: "0.63 (16K)", ties as "0.48 (8K \& 16K)".
struct ReportCell {
    double score = 0.0;
    int decimals = 2;
    std::vector<std::size_t> chunks;

    friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

struct ReportRow {
    std::string label;
    std::vector<ReportCell> cells;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

std::string format_cell(const ReportCell& cell);
ReportCell parse_cell(std::string_view text);

/// Plain rows: "llama70b 0.63 (16K)". Table rows: "llama70b & 0.55 (2K) & 0.63 (16K) \\".
ReportRow parse_report_row(std::string_view text);
std::string format_report_row(const ReportRow& row, bool table = false);

/// Cell for a report: the best mean and every candidate tied with it.
ReportCell best_cell(const EstimateReport& report);

}  // namespace dnc
