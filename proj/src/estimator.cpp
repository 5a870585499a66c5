#include "dnc/estimator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

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

CandidateMean evaluate(std::size_t chunk_size, const std::vector<TaskInstance>& dev_set,
                       const std::vector<std::size_t>& indices, const PipelineFactory& factory) {
    CandidateMean cm;
    cm.chunk_size = chunk_size;
    double sum = 0.0;
    for (const std::size_t i : indices) {
        try {
            const auto run = run_pipeline(dev_set[i], factory(chunk_size, dev_set[i]));
            if (run.status != RunStatus::Complete) {
                ++cm.failures;
                continue;
            }
            sum += run.final_score.value();
            ++cm.samples;
        } catch (const LlmError&) {
            ++cm.failures;
        }
    }
    cm.mean = cm.samples > 0 ? sum / static_cast<double>(cm.samples) : 0.0;
    return cm;
}

void finish(EstimateReport& report, TieBreak tie_break) {
    for (const auto& m : report.means) {
        report.total_evaluations += m.samples + m.failures;
        report.failures += m.failures;
    }
    if (report.failures > 0) report.flags.push_back("failed_runs_excluded");
    report.chosen = choose_chunk(report.means, tie_break);
}

}  // namespace

std::string_view to_string(TieBreak tie_break) {
    return tie_break == TieBreak::LargerChunk ? "larger" : "smaller";
}

TieBreak tie_break_from_string(std::string_view name) {
    if (name == "larger") return TieBreak::LargerChunk;
    if (name == "smaller") return TieBreak::SmallerChunk;
    throw DomainError(fmt::format("unknown tie-break '{}' (expected larger or smaller)", name));
}

void EstimatorConfig::validate() const {
    if (candidates.empty()) throw DomainError("candidate list is empty");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i] == 0) throw DomainError("candidate chunk sizes must be >= 1");
        if (i > 0 && candidates[i] <= candidates[i - 1]) {
            throw DomainError("candidate chunk sizes must be strictly increasing");
        }
    }
    if (budget_m < 1) throw DomainError("budget_m must be >= 1");
}

std::size_t choose_chunk(const std::vector<CandidateMean>& means, TieBreak tie_break) {
    const CandidateMean* best = nullptr;
    for (const auto& m : means) {
        if (m.samples == 0) continue;
        if (best == nullptr || m.mean > best->mean + kTieTolerance) {
            best = &m;
        } else if (std::abs(m.mean - best->mean) <= kTieTolerance) {
            const bool prefer = tie_break == TieBreak::LargerChunk ? m.chunk_size > best->chunk_size
                                                                   : m.chunk_size < best->chunk_size;
            if (prefer) best = &m;
        }
    }
    if (best == nullptr) throw DomainError("no candidate produced a successful run");
    return best->chunk_size;
}

std::vector<std::size_t> sample_instances(const std::vector<TaskInstance>& dev_set, std::size_t m,
                                          std::uint64_t seed, std::size_t candidate) {
    if (m > dev_set.size()) {
        throw DomainError(fmt::format("dev set has {} instances but {} samples were requested", dev_set.size(), m));
    }
    std::vector<std::string> ids;
    ids.reserve(dev_set.size());
    for (const auto& inst : dev_set) ids.push_back(inst.id());
    std::vector<std::size_t> order(dev_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ha = fnv1a(ids[a]);
        const auto hb = fnv1a(ids[b]);
        return ha != hb ? ha < hb : ids[a] < ids[b];
    });
    Rng rng(derive_seed(derive_seed(seed, "estimate", candidate), "budget", m));
    for (std::size_t i = 0; i < m; ++i) std::swap(order[i], order[i + rng.below(order.size() - i)]);
    order.resize(m);
    return order;
}

EstimateReport estimate_chunk_size(const EstimatorConfig& config, const std::vector<TaskInstance>& dev_set,
                                   const PipelineFactory& factory) {
    config.validate();
    if (dev_set.size() < config.budget_m) {
        throw DomainError(fmt::format("dev set of {} is smaller than budget_m = {}", dev_set.size(), config.budget_m));
    }
    EstimateReport report;
    for (const std::size_t c : config.candidates) {
        report.means.push_back(evaluate(c, dev_set, sample_instances(dev_set, config.budget_m, config.seed, c), factory));
    }
    finish(report, config.tie_break);
    return report;
}

EstimateReport exhaustive_search(const std::vector<std::size_t>& candidates, const std::vector<TaskInstance>& dev_set,
                                 const PipelineFactory& factory, TieBreak tie_break) {
    EstimatorConfig cfg{candidates, 1, 0, tie_break};
    cfg.validate();
    if (dev_set.empty()) throw DomainError("dev set is empty");
    std::vector<std::size_t> all(dev_set.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    EstimateReport report;
    for (const std::size_t c : candidates) report.means.push_back(evaluate(c, dev_set, all, factory));
    finish(report, tie_break);
    return report;
}

std::string chunk_label(std::size_t chunk_size) {
    if (chunk_size >= 1000 && chunk_size % 1000 == 0) return fmt::format("{}K", chunk_size / 1000);
    return std::to_string(chunk_size);
}

std::size_t parse_chunk_label(std::string_view label) {
    label = trim(label);
    std::size_t scale = 1;
    if (!label.empty() && (label.back() == 'K' || label.back() == 'k')) {
        scale = 1000;
        label.remove_suffix(1);
    }
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
    if (ec != std::errc{} || ptr != label.data() + label.size() || label.empty() || v == 0) {
        throw FormatError(fmt::format("'{}' is not a chunk size", label));
    }
    return v * scale;
}

std::string format_cell(const ReportCell& cell) {
    std::string chunks;
    for (std::size_t i = 0; i < cell.chunks.size(); ++i) {
        if (i > 0) chunks += " \\& ";
        chunks += chunk_label(cell.chunks[i]);
    }
    return fmt::format("{:.{}f} ({})", cell.score, cell.decimals, chunks);
}

ReportCell parse_cell(std::string_view text) {
    text = trim(text);
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open ||
        close + 1 != text.size()) {
        throw FormatError(fmt::format("report cell '{}' is not of the form 'score (chunk)'", text));
    }
    ReportCell cell;
    const std::string_view num = trim(text.substr(0, open));
    const auto dot = num.find('.');
    cell.decimals = dot == std::string_view::npos ? 0 : static_cast<int>(num.size() - dot - 1);
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), cell.score);
    if (ec != std::errc{} || ptr != num.data() + num.size() || num.empty()) {
        throw FormatError(fmt::format("report cell score '{}' is not a number", num));
    }
    std::string_view inner = text.substr(open + 1, close - open - 1);
    while (!inner.empty()) {
        auto amp = inner.find('&');
        std::string_view part = inner.substr(0, amp);
        if (!part.empty() && part.back() == '\\') part.remove_suffix(1);
        part = trim(part);
        if (!part.empty() && part.back() == '\\') part.remove_suffix(1);
        cell.chunks.push_back(parse_chunk_label(part));
        if (amp == std::string_view::npos) break;
        inner.remove_prefix(amp + 1);
    }
    if (cell.chunks.empty()) throw FormatError(fmt::format("report cell '{}' names no chunk size", text));
    return cell;
}

ReportRow parse_report_row(std::string_view text) {
    text = trim(text);
    ReportRow row;
    if (text.ends_with("\\\\")) text = trim(text.substr(0, text.size() - 2));

    // Table rows separate columns with '&'; ties inside a cell escape it as "\&".
    std::vector<std::string_view> columns;
    bool table = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '&' && (i == 0 || text[i - 1] != '\\')) {
            columns.push_back(trim(text.substr(start, i - start)));
            start = i + 1;
            table = true;
        }
    }
    if (table) {
        columns.push_back(trim(text.substr(start)));
        row.label = std::string(columns.front());
        for (std::size_t i = 1; i < columns.size(); ++i) row.cells.push_back(parse_cell(columns[i]));
        return row;
    }

    const auto sp = text.find_first_of(" \t");
    if (sp == std::string_view::npos) throw FormatError(fmt::format("report row '{}' has no cells", text));
    row.label = std::string(text.substr(0, sp));
    std::string_view rest = trim(text.substr(sp));
    while (!rest.empty()) {
        const auto close = rest.find(')');
        if (close == std::string_view::npos) throw FormatError(fmt::format("unterminated cell in '{}'", text));
        row.cells.push_back(parse_cell(rest.substr(0, close + 1)));
        rest = trim(rest.substr(close + 1));
    }
    if (row.cells.empty()) throw FormatError(fmt::format("report row '{}' has no cells", text));
    return row;
}

std::string format_report_row(const ReportRow& row, bool table) {
    std::string out = row.label;
    for (const auto& c : row.cells) {
        out += table ? " & " : " ";
        out += format_cell(c);
    }
    if (table) out += " \\\\";
    return out;
}

ReportCell best_cell(const EstimateReport& report) {
    ReportCell cell;
    const CandidateMean* chosen = nullptr;
    for (const auto& m : report.means) {
        if (m.chunk_size == report.chosen) chosen = &m;
    }
    if (chosen == nullptr) throw DomainError("report has no mean for its chosen chunk size");
    cell.score = chosen->mean;
    for (const auto& m : report.means) {
        if (m.samples > 0 && std::abs(m.mean - chosen->mean) <= kTieTolerance) cell.chunks.push_back(m.chunk_size);
    }
    return cell;
}

}  // namespace dnc
