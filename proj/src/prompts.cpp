#include "dnc/prompts.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dnc/errors.hpp"

namespace dnc {

namespace {

constexpr std::string_view kWorkerHeader = "### WORKER PROMPT";
constexpr std::string_view kManagerHeader = "### MANAGER PROMPT";

constexpr std::string_view kAnswerInstruction =
    "Finish your reply with a final line of the form\nANSWER: <answer>";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::string count_word(std::size_t k) {
    static constexpr std::string_view words[] = {"zero", "one", "two", "three", "four", "five",
                                                 "six",  "seven", "eight", "nine", "ten"};
    return k < std::size(words) ? std::string(words[k]) : std::to_string(k);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read prompt template '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string_view to_string(PromptStyle style) {
    return style == PromptStyle::Manual ? "manual" : "planner";
}

PromptStyle prompt_style_from_string(std::string_view name) {
    if (name == "manual") return PromptStyle::Manual;
    if (name == "planner") return PromptStyle::PlannerBased;
    throw DomainError(fmt::format("unknown prompt style '{}' (expected manual or planner)", name));
}

PromptBundle builtin_prompts(const TaskParams& task, PromptStyle style) {
    if (style == PromptStyle::Manual) {
        return PromptBundle{
            fmt::format("{{query}}\n\nText:\n{{chunk}}\n\n{}", kAnswerInstruction),
            fmt::format("Several assistants each read one consecutive part of a long text and answered the "
                        "question below using only their part. Combine their answers.\n\n{{query}}\n\n"
                        "Answers:\n{{responses}}\n\n{}",
                        kAnswerInstruction),
        };
    }
    if (std::holds_alternative<KvParams>(task)) {
        return PromptBundle{
            fmt::format("You are reading one part of a list of key:value records.\n{{query}}\n"
                        "If that key appears in this part, report the value paired with it. If the key "
                        "does not appear in this part, report NONE.\n\nRecords:\n{{chunk}}\n\n"
                        "Finish your reply with a final line of the form\nANSWER: <value or NONE>"),
            fmt::format("Each worker searched one part of a list of key:value records for the key in the "
                        "question and reported the value it found, or NONE.\n{{query}}\n\n"
                        "Worker reports:\n{{responses}}\n\nGive the value that was found, or NONE if no "
                        "worker found the key.\n{}",
                        kAnswerInstruction),
        };
    }
    if (const auto* p = std::get_if<MathParams>(&task)) {
        const std::string which = std::string(to_string(p->direction));
        const std::string order = p->direction == Direction::Smallest ? "ascending" : "descending";
        const std::string request = p->k == 1 ? fmt::format("the single {} number", which)
                                              : fmt::format("the {} {} numbers", count_word(p->k), which);
        return PromptBundle{
            fmt::format("You are given one part of a long list of integers. Return {} in this part, in {} "
                        "order, separated by spaces.\n\nNumbers:\n{{chunk}}\n\n"
                        "Finish your reply with a final line of the form\nANSWER: <numbers separated by spaces>",
                        request, order),
            fmt::format("A long list of integers was split into parts, and each worker reported {} from its "
                        "part. Use all reported numbers together to answer the question.\n{{query}}\n\n"
                        "Worker reports:\n{{responses}}\n\n"
                        "Finish your reply with a final line of the form\nANSWER: <number>",
                        request),
        };
    }
    const auto& a = std::get<AliasParams>(task);
    const std::size_t budget = a.artifact_budget > 0 ? a.artifact_budget : std::max<std::size_t>(1, a.chain_length / 4);
    return PromptBundle{
        fmt::format("You are reading one part of a text that contains alias facts written as x->y, mixed "
                    "with unrelated words. List at most {} alias facts from this part, in the order they "
                    "appear, separated by spaces.\n\nText:\n{{chunk}}\n\n"
                    "Finish your reply with a final line of the form\nANSWER: <facts separated by spaces, or NONE>",
                    budget),
        fmt::format("Workers listed alias facts (x->y) found in their parts of a text.\n{{query}}\n\n"
                    "Worker reports:\n{{responses}}\n\nFollow the facts link by link. If the chain cannot be "
                    "followed to an entity, answer NONE.\n{}",
                    kAnswerInstruction),
    };
}

std::string default_task_description(const TaskParams& task) {
    if (std::holds_alternative<KvParams>(task)) {
        return "The input is a long list of key:value records. Answer which value is paired with a given key.";
    }
    if (const auto* p = std::get_if<MathParams>(&task)) {
        return fmt::format("The input is a long list of integers. Find the {} {} number in the list.",
                           ordinal(p->k), to_string(p->direction));
    }
    return "The input is a text with alias facts written as x->y among filler words. Follow the aliases "
           "from a given name to the entity at the end of the chain.";
}

std::string single_shot_prompt(const TaskInstance& instance) {
    return fmt::format("{}\n\n{}\n\n{}", instance.payload.text(), instance.query, kAnswerInstruction);
}

std::string render_template(std::string_view tmpl, std::string_view chunk, std::string_view query,
                            std::string_view responses) {
    std::string out(tmpl);
    // {query} first: a query never contains placeholders, but a chunk might.
    replace_all(out, "{query}", query);
    replace_all(out, "{responses}", responses);
    replace_all(out, "{chunk}", chunk);
    return out;
}

bool has_placeholder(std::string_view tmpl, std::string_view name) {
    return tmpl.find(fmt::format("{{{}}}", name)) != std::string_view::npos;
}

std::size_t prompt_overhead_tokens(std::string_view manager_template, std::string_view query) {
    return tokenize(render_template(manager_template, "", query, "")).size();
}

std::string render_responses(const std::vector<Artifact>& artifacts) {
    std::string out;
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
        out += fmt::format("Worker {}: {}\n", i + 1, render_content(artifacts[i].content));
    }
    return out;
}

PromptBundle load_prompt_bundle(const std::string& worker_path, const std::string& manager_path) {
    PromptBundle b{read_file(worker_path), read_file(manager_path)};
    if (!has_placeholder(b.worker, "chunk")) {
        throw ConfigError(fmt::format("worker template '{}' has no {{chunk}} placeholder", worker_path));
    }
    if (!has_placeholder(b.manager, "responses")) {
        throw ConfigError(fmt::format("manager template '{}' has no {{responses}} placeholder", manager_path));
    }
    return b;
}

std::optional<std::string> parse_answer_line(std::string_view response) {
    std::optional<std::string> found;
    std::size_t start = 0;
    while (start <= response.size()) {
        const auto end = std::min(response.find('\n', start), response.size());
        std::string_view line = trim(response.substr(start, end - start));
        // Tolerate markdown emphasis around the marker.
        while (!line.empty() && (line.front() == '*' || line.front() == '#')) line.remove_prefix(1);
        if (line.starts_with("ANSWER:")) {
            std::string_view value = trim(line.substr(7));
            while (!value.empty() && value.front() == '*') value.remove_prefix(1);
            value = trim(value);
            while (!value.empty() && (value.back() == '*' || value.back() == '.')) value.remove_suffix(1);
            found = std::string(trim(value));
        }
        start = end + 1;
    }
    return found;
}

ArtifactContent parse_artifact_value(const TaskInstance& instance, std::string_view value, bool* failed) {
    const auto tokens = tokenize(value);
    const bool none = tokens.empty() || (tokens.size() == 1 && tokens[0] == "NONE");
    *failed = false;
    switch (instance.kind) {
        case TaskKind::KV:
            if (none) return KvContent{};
            return KvContent{std::string(tokens[0])};
        case TaskKind::Math: {
            MathContent c;
            if (none) return c;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                std::string_view t = tokens[i];
                while (!t.empty() && t.back() == ',') t.remove_suffix(1);
                std::int64_t v = 0;
                const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
                if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
                    *failed = true;
                    return MathContent{};
                }
                c.values.push_back(v);
            }
            // Workers may list values in any order; keep the budget's worth of extremes.
            if (std::get<MathParams>(instance.params).direction == Direction::Smallest) {
                std::sort(c.values.begin(), c.values.end());
            } else {
                std::sort(c.values.begin(), c.values.end(), std::greater<>{});
            }
            if (c.values.size() > instance.artifact_budget) c.values.resize(instance.artifact_budget);
            return c;
        }
        case TaskKind::AliasChain: {
            AliasContent c;
            if (none) return c;
            for (std::size_t i = 0; i < tokens.size() && c.pairs.size() < instance.artifact_budget; ++i) {
                const std::string_view t = tokens[i];
                const auto pos = t.find("->");
                if (pos == std::string_view::npos || pos == 0 || pos + 2 == t.size()) {
                    *failed = true;
                    return AliasContent{};
                }
                c.pairs.emplace_back(std::string(t.substr(0, pos)), std::string(t.substr(pos + 2)));
            }
            return c;
        }
    }
    *failed = true;
    return KvContent{};
}

Answer parse_final_answer(std::string_view value) {
    const std::string_view v = trim(value);
    if (v.empty() || v == "NONE") return std::nullopt;
    return std::string(v);
}

std::string planner_meta_prompt(std::string_view task_description) {
    return fmt::format(
        "A long input will be split into chunks. A worker model reads each chunk separately and writes a "
        "short report; a manager model then reads all reports and gives the final answer.\n\n"
        "Task:\n{}\n\n"
        "Write two prompt templates for this setup.\n"
        "The worker template must contain the placeholder {{chunk}} where the chunk text goes, and may use "
        "{{query}} for the question.\n"
        "The manager template must contain the placeholder {{responses}} where the worker reports go, and "
        "may use {{query}}.\n"
        "Both templates must tell the model to end with a line of the form ANSWER: <answer>.\n\n"
        "Reply in exactly this layout:\n{}\n<worker template>\n{}\n<manager template>\n",
        task_description, kWorkerHeader, kManagerHeader);
}

std::string refinement_meta_prompt(const PromptBundle& current,
                                   const std::vector<std::pair<const TaskInstance*, Answer>>& failures) {
    std::string cases;
    for (std::size_t i = 0; i < failures.size(); ++i) {
        const auto& [inst, wrong] = failures[i];
        cases += fmt::format("Case {}: question: {} | expected: {} | produced: {}\n", i + 1, inst->query,
                             inst->ground_truth.value_or("NONE"), wrong.value_or("NONE"));
    }
    return fmt::format(
        "The worker and manager templates below produced wrong answers on the listed cases. Revise the "
        "templates so these mistakes are less likely. Keep the {{chunk}}, {{query}} and {{responses}} "
        "placeholders and the final ANSWER: line.\n\n"
        "{}\n{}\n{}\n{}\n\nFailures:\n{}\n"
        "Reply in exactly this layout:\n{}\n<worker template>\n{}\n<manager template>\n",
        kWorkerHeader, current.worker, kManagerHeader, current.manager, cases, kWorkerHeader, kManagerHeader);
}

std::optional<PromptBundle> extract_planned_prompts(std::string_view response) {
    const auto w = response.rfind(kWorkerHeader);
    const auto m = response.rfind(kManagerHeader);
    if (w == std::string_view::npos || m == std::string_view::npos || m < w) return std::nullopt;
    const std::string worker(trim(response.substr(w + kWorkerHeader.size(), m - w - kWorkerHeader.size())));
    const std::string manager(trim(response.substr(m + kManagerHeader.size())));
    if (!has_placeholder(worker, "chunk") || !has_placeholder(manager, "responses")) return std::nullopt;
    return PromptBundle{worker, manager};
}

}  // namespace dnc
