#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dnc/tasks.hpp"

namespace dnc {

enum class PromptStyle { Manual, PlannerBased };

std::string_view to_string(PromptStyle style);
PromptStyle prompt_style_from_string(std::string_view name);

/// Worker and manager templates. Placeholders: {chunk}, {query}, {responses}.
struct PromptBundle {
    std::string worker;
    std::string manager;

    friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// Built-in templates for a task. PlannerBased templates carry task-specific
/// instructions (e.g. "return the two smallest numbers"); Manual ones only
/// restate the query.
PromptBundle builtin_prompts(const TaskParams& task, PromptStyle style);

/// Raw task prompt handed to the planner when no description is supplied.
std::string default_task_description(const TaskParams& task);

std::string single_shot_prompt(const TaskInstance& instance);

std::string render_template(std::string_view tmpl, std::string_view chunk, std::string_view query,
                            std::string_view responses);

bool has_placeholder(std::string_view tmpl, std::string_view name);

/// Whitespace tokens the manager template adds around the worker responses.
std::size_t prompt_overhead_tokens(std::string_view manager_template, std::string_view query);

/// "Worker 1: <artifact>" lines, in artifact order.
std::string render_responses(const std::vector<Artifact>& artifacts);

PromptBundle load_prompt_bundle(const std::string& worker_path, const std::string& manager_path);

/// Value after the last line starting with "ANSWER:", trimmed; nullopt when absent.
std::optional<std::string> parse_answer_line(std::string_view response);

/// Artifact content from a worker's answer value. Sets *failed on unparseable input
/// and returns empty content.
ArtifactContent parse_artifact_value(const TaskInstance& instance, std::string_view value, bool* failed);

/// "NONE" and empty values map to the null answer.
Answer parse_final_answer(std::string_view value);

/// Meta-prompt asking a planner model for worker and manager templates.
std::string planner_meta_prompt(std::string_view task_description);

/// Meta-prompt for one refinement round over observed failures.
std::string refinement_meta_prompt(const PromptBundle& current,
                                   const std::vector<std::pair<const TaskInstance*, Answer>>& failures);

/// Pulls the two templates out of a planner reply. Requires the section headers
/// and the {chunk} / {responses} placeholders.
std::optional<PromptBundle> extract_planned_prompts(std::string_view response);

}  // namespace dnc
