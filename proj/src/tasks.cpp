#include "dnc/tasks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dnc/errors.hpp"
#include "dnc/seed.hpp"

namespace dnc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::string_view kKvHeader = "pairs:";
constexpr std::string_view kArrow = "->";
constexpr std::string_view kNone = "NONE";

constexpr std::string_view kFiller[] = {
    "the", "report", "noted", "that", "several", "items", "were", "moved", "before",
    "noon", "and", "later", "returned", "without", "comment", "again",
};

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
    return v;
}

std::int64_t parse_int_or_throw(std::string_view s) {
    const auto v = parse_int(s);
    if (!v) throw FormatError(fmt::format("'{}' is not an integer token", s));
    return *v;
}

// "x->y" split at the first arrow; nullopt for other tokens.
std::optional<std::pair<std::string_view, std::string_view>> split_fact(std::string_view token) {
    const auto pos = token.find(kArrow);
    if (pos == std::string_view::npos || pos == 0 || pos + kArrow.size() == token.size()) {
        return std::nullopt;
    }
    return std::pair{token.substr(0, pos), token.substr(pos + kArrow.size())};
}

bool is_entity(std::string_view name) { return !name.empty() && name.front() == 'E'; }

// Value for `key` inside the given tokens, accepting both "key:value" and "key:" "value".
template <class Seq>
std::optional<std::string> find_kv(const Seq& tokens, std::size_t n, std::string_view key) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::string_view t = tokens[i];
        if (t.size() <= key.size() || t.compare(0, key.size(), key) != 0 || t[key.size()] != ':') {
            continue;
        }
        if (t.size() > key.size() + 1) return std::string(t.substr(key.size() + 1));
        if (i + 1 < n) return std::string(tokens[i + 1]);
        return std::nullopt;
    }
    return std::nullopt;
}

// k-th order statistic (1-based) in the task direction; nullopt when fewer than k values.
Answer order_statistic(std::vector<std::int64_t> values, std::size_t k, Direction direction) {
    if (k == 0 || values.size() < k) return std::nullopt;
    const auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
    if (direction == Direction::Smallest) {
        std::nth_element(values.begin(), nth, values.end());
    } else {
        std::nth_element(values.begin(), nth, values.end(), std::greater<>());
    }
    return std::to_string(*nth);
}

// Follows alias links from `start`; resolved only when the walk ends at an entity.
Answer walk_chain(const std::unordered_map<std::string, std::string>& links, const std::string& start) {
    std::unordered_set<std::string> seen{start};
    const std::string* cur = &start;
    while (true) {
        const auto it = links.find(*cur);
        if (it == links.end()) break;
        if (!seen.insert(it->second).second) return std::nullopt;
        cur = &it->second;
    }
    if (!is_entity(*cur)) return std::nullopt;
    return *cur;
}

std::size_t resolved_budget(const AliasParams& p) {
    return p.artifact_budget > 0 ? p.artifact_budget : std::max<std::size_t>(1, p.chain_length / 4);
}

std::string build_query(const TaskParams& params, const std::string& subject) {
    return std::visit(
        overloaded{
            [&](const KvParams&) { return fmt::format("Which value is paired with key {}?", subject); },
            [&](const MathParams& p) {
                return fmt::format("What is the {} {} number in the list?", ordinal(p.k),
                                   p.direction == Direction::Smallest ? "smallest" : "largest");
            },
            [&](const AliasParams&) {
                return fmt::format(
                    "Each fact x->y says that x is another name for y. Starting from {}, which "
                    "entity (a name beginning with E) does the chain of names end at?",
                    subject);
            },
        },
        params);
}

TaskKind kind_of(const TaskParams& params) {
    return std::visit(overloaded{[](const KvParams&) { return TaskKind::KV; },
                                 [](const MathParams&) { return TaskKind::Math; },
                                 [](const AliasParams&) { return TaskKind::AliasChain; }},
                      params);
}

std::size_t budget_of(const TaskParams& params) {
    return std::visit(overloaded{[](const KvParams&) -> std::size_t { return 1; },
                                 [](const MathParams& p) { return p.k; },
                                 [](const AliasParams& p) { return resolved_budget(p); }},
                      params);
}

void check_params(const TaskParams& params) {
    std::visit(overloaded{
                   [](const KvParams& p) {
                       if (p.pair_count < 1) throw DomainError("pair_count must be >= 1");
                   },
                   [](const MathParams& p) {
                       if (p.k < 1 || p.k > p.count) {
                           throw DomainError(fmt::format("need 1 <= k <= count, got k={} count={}", p.k, p.count));
                       }
                       if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
                           throw DomainError("sigma must be positive and finite");
                       }
                   },
                   [](const AliasParams& p) {
                       if (p.chain_length < 2) throw DomainError("chain_length must be >= 2");
                   },
               },
               params);
}

std::string hex_name(char prefix, std::uint32_t id) { return fmt::format("{}{:08x}", prefix, id); }

// Distinct 32-bit ids, drawn in order.
std::vector<std::uint32_t> unique_ids(Rng& rng, std::size_t n) {
    if (n > (std::size_t{1} << 31)) throw DomainError("too many unique names requested");
    std::unordered_set<std::uint32_t> seen;
    seen.reserve(n * 2);
    std::vector<std::uint32_t> out;
    out.reserve(n);
    while (out.size() < n) {
        const auto id = static_cast<std::uint32_t>(rng.next() >> 32);
        if (seen.insert(id).second) out.push_back(id);
    }
    return out;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::KV: return "kv";
        case TaskKind::Math: return "math";
        case TaskKind::AliasChain: return "alias";
    }
    return "?";
}

std::string_view to_string(Direction direction) {
    return direction == Direction::Smallest ? "smallest" : "largest";
}

std::string_view to_string(MetricKind metric) {
    return metric == MetricKind::ExactMatch ? "exact" : "f1";
}

TaskKind task_kind_from_string(std::string_view name) {
    if (name == "kv") return TaskKind::KV;
    if (name == "math") return TaskKind::Math;
    if (name == "alias" || name == "alias_chain") return TaskKind::AliasChain;
    throw DomainError(fmt::format("unknown task kind '{}' (expected kv, math or alias)", name));
}

Direction direction_from_string(std::string_view name) {
    if (name == "smallest") return Direction::Smallest;
    if (name == "largest") return Direction::Largest;
    throw DomainError(fmt::format("unknown direction '{}' (expected smallest or largest)", name));
}

MetricKind metric_from_string(std::string_view name) {
    if (name == "exact") return MetricKind::ExactMatch;
    if (name == "f1") return MetricKind::TokenF1;
    throw DomainError(fmt::format("unknown metric '{}' (expected exact or f1)", name));
}

std::string TaskInstance::id() const { return fmt::format("{}:{}", to_string(kind), seed); }

std::string ordinal(std::size_t k) {
    const std::size_t mod100 = k % 100;
    const char* suffix = "th";
    if (mod100 < 11 || mod100 > 13) {
        switch (k % 10) {
            case 1: suffix = "st"; break;
            case 2: suffix = "nd"; break;
            case 3: suffix = "rd"; break;
            default: break;
        }
    }
    return fmt::format("{}{}", k, suffix);
}

TaskInstance gen_kv(std::size_t pair_count, std::uint64_t seed, bool aligned) {
    const TaskParams params = KvParams{pair_count, aligned};
    check_params(params);
    Rng rng(derive_seed(seed, "kv"));
    const auto keys = unique_ids(rng, pair_count);

    TaskInstance inst;
    inst.kind = TaskKind::KV;
    inst.params = params;
    inst.seed = seed;
    inst.payload.reserve(pair_count * (aligned ? 1 : 2) + 1, pair_count * 19 + 8);
    if (!aligned) inst.payload.push_back(kKvHeader);
    const std::size_t queried = rng.below(pair_count);
    for (std::size_t i = 0; i < pair_count; ++i) {
        const std::string key = fmt::format("{:08x}", keys[i]);
        const std::string value = fmt::format("{:08x}", static_cast<std::uint32_t>(rng.next() >> 32));
        if (aligned) {
            inst.payload.push_back(fmt::format("{}:{}", key, value));
        } else {
            inst.payload.push_back(key + ":");
            inst.payload.push_back(value);
        }
        if (i == queried) {
            inst.subject = key;
            inst.ground_truth = value;
        }
    }
    inst.query = build_query(params, inst.subject);
    inst.total_length = inst.payload.size();
    inst.artifact_budget = 1;
    return inst;
}

TaskInstance gen_math(std::size_t count, std::size_t k, Direction direction, std::uint64_t seed,
                      double sigma) {
    const MathParams p{count, k, direction, sigma};
    check_params(p);
    Rng rng(derive_seed(seed, "math"));
    std::vector<std::int64_t> values(count);
    for (auto& v : values) v = std::llround(sigma * rng.normal());

    TaskInstance inst;
    inst.kind = TaskKind::Math;
    inst.params = p;
    inst.seed = seed;
    inst.payload.reserve(count, count * 9);
    for (const auto v : values) inst.payload.push_back(std::to_string(v));
    inst.query = build_query(p, {});
    inst.ground_truth = order_statistic(std::move(values), k, direction);
    inst.total_length = count;
    inst.artifact_budget = k;
    return inst;
}

TaskInstance gen_alias_chain(std::size_t chain_length, std::size_t filler_tokens, std::uint64_t seed,
                             std::size_t artifact_budget, std::size_t distractor_pairs) {
    const AliasParams p{chain_length, filler_tokens, artifact_budget, distractor_pairs};
    check_params(p);
    Rng rng(derive_seed(seed, "alias"));

    // Chain: a_0 -> a_1 -> ... -> a_{L-1} -> E; distractors: a' -> E'.
    const auto ids = unique_ids(rng, chain_length + 1 + 2 * distractor_pairs);
    std::vector<std::string> facts;
    facts.reserve(chain_length + distractor_pairs);
    for (std::size_t i = 0; i < chain_length; ++i) {
        const std::string from = hex_name('a', ids[i]);
        const std::string to = i + 1 == chain_length ? hex_name('E', ids[i + 1]) : hex_name('a', ids[i + 1]);
        facts.push_back(from + std::string(kArrow) + to);
    }
    for (std::size_t d = 0; d < distractor_pairs; ++d) {
        const std::size_t base = chain_length + 1 + 2 * d;
        facts.push_back(hex_name('a', ids[base]) + std::string(kArrow) + hex_name('E', ids[base + 1]));
    }

    // Fact order is shuffled so chain order and position order are unrelated.
    for (std::size_t i = facts.size(); i > 1; --i) std::swap(facts[i - 1], facts[rng.below(i)]);

    const std::size_t total = facts.size() + filler_tokens;
    std::vector<std::size_t> positions(total);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    for (std::size_t i = 0; i < facts.size(); ++i) {
        std::swap(positions[i], positions[i + rng.below(total - i)]);
    }
    positions.resize(facts.size());
    std::sort(positions.begin(), positions.end());

    TaskInstance inst;
    inst.kind = TaskKind::AliasChain;
    inst.params = p;
    inst.seed = seed;
    inst.payload.reserve(total, total * 12);
    std::size_t next_fact = 0;
    for (std::size_t pos = 0; pos < total; ++pos) {
        if (next_fact < positions.size() && positions[next_fact] == pos) {
            inst.payload.push_back(facts[next_fact++]);
        } else {
            inst.payload.push_back(kFiller[rng.below(std::size(kFiller))]);
        }
    }
    inst.subject = hex_name('a', ids[0]);
    inst.ground_truth = hex_name('E', ids[chain_length]);
    inst.query = build_query(p, inst.subject);
    inst.total_length = total;
    inst.artifact_budget = resolved_budget(p);
    return inst;
}

TaskInstance generate(const TaskParams& params, std::uint64_t seed) {
    return std::visit(
        overloaded{
            [&](const KvParams& p) { return gen_kv(p.pair_count, seed, p.aligned); },
            [&](const MathParams& p) { return gen_math(p.count, p.k, p.direction, seed, p.sigma); },
            [&](const AliasParams& p) {
                return gen_alias_chain(p.chain_length, p.filler_tokens, seed, p.artifact_budget,
                                       p.distractor_pairs);
            },
        },
        params);
}

TaskInstance make_instance(const TaskParams& params, std::uint64_t seed, TokenSequence payload,
                           std::string subject) {
    check_params(params);
    TaskInstance inst;
    inst.kind = kind_of(params);
    inst.params = params;
    inst.seed = seed;
    inst.payload = std::move(payload);
    inst.subject = std::move(subject);
    inst.query = build_query(params, inst.subject);
    inst.total_length = inst.payload.size();
    inst.artifact_budget = budget_of(params);
    if (inst.total_length == 0) throw DomainError("instance payload is empty");
    if (inst.kind == TaskKind::Math) {
        for (std::size_t i = 0; i < inst.payload.size(); ++i) parse_int_or_throw(inst.payload[i]);
    }
    inst.ground_truth = exact_solve(inst);
    return inst;
}

Answer exact_solve(const TaskInstance& instance) {
    const auto& tokens = instance.payload;
    switch (instance.kind) {
        case TaskKind::KV:
            return find_kv(tokens, tokens.size(), instance.subject);
        case TaskKind::Math: {
            const auto& p = std::get<MathParams>(instance.params);
            std::vector<std::int64_t> values;
            values.reserve(tokens.size());
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (auto v = parse_int(tokens[i])) values.push_back(*v);
            }
            std::sort(values.begin(), values.end());
            if (values.size() < p.k) return std::nullopt;
            const std::size_t idx = p.direction == Direction::Smallest ? p.k - 1 : values.size() - p.k;
            return std::to_string(values[idx]);
        }
        case TaskKind::AliasChain: {
            std::unordered_map<std::string, std::string> links;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (auto fact = split_fact(tokens[i])) {
                    links.emplace(std::string(fact->first), std::string(fact->second));
                }
            }
            return walk_chain(links, instance.subject);
        }
    }
    return std::nullopt;
}

std::string render_content(const ArtifactContent& content) {
    return std::visit(overloaded{
                          [](const KvContent& c) { return c.value ? *c.value : std::string(kNone); },
                          [](const MathContent& c) {
                              return c.values.empty() ? std::string(kNone) : fmt::format("{}", fmt::join(c.values, " "));
                          },
                          [](const AliasContent& c) {
                              if (c.pairs.empty()) return std::string(kNone);
                              std::string out;
                              for (const auto& [from, to] : c.pairs) {
                                  if (!out.empty()) out.push_back(' ');
                                  out += from;
                                  out += kArrow;
                                  out += to;
                              }
                              return out;
                          },
                      },
                      content);
}

std::size_t content_token_cost(const ArtifactContent& content) {
    const std::size_t items = std::visit(overloaded{
                                             [](const KvContent& c) -> std::size_t { return c.value ? 1 : 0; },
                                             [](const MathContent& c) { return c.values.size(); },
                                             [](const AliasContent& c) { return c.pairs.size(); },
                                         },
                                         content);
    return std::max<std::size_t>(1, items);
}

Artifact make_artifact(std::size_t chunk_id, ArtifactContent content) {
    const std::size_t cost = content_token_cost(content);
    return Artifact{chunk_id, std::move(content), cost};
}

Artifact ideal_artifact(const TaskInstance& instance, const TokenSpan& chunk, std::size_t chunk_id) {
    switch (instance.kind) {
        case TaskKind::KV:
            return make_artifact(chunk_id, KvContent{find_kv(chunk, chunk.size(), instance.subject)});
        case TaskKind::Math: {
            const auto& p = std::get<MathParams>(instance.params);
            std::vector<std::int64_t> values;
            values.reserve(chunk.size());
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                if (auto v = parse_int(chunk[i])) values.push_back(*v);
            }
            const std::size_t keep = std::min(p.k, values.size());
            const auto mid = values.begin() + static_cast<std::ptrdiff_t>(keep);
            if (p.direction == Direction::Smallest) {
                std::partial_sort(values.begin(), mid, values.end());
            } else {
                std::partial_sort(values.begin(), mid, values.end(), std::greater<>());
            }
            values.resize(keep);
            return make_artifact(chunk_id, MathContent{std::move(values)});
        }
        case TaskKind::AliasChain: {
            AliasContent content;
            for (std::size_t i = 0; i < chunk.size() && content.pairs.size() < instance.artifact_budget; ++i) {
                if (auto fact = split_fact(chunk[i])) {
                    content.pairs.emplace_back(std::string(fact->first), std::string(fact->second));
                }
            }
            return make_artifact(chunk_id, std::move(content));
        }
    }
    throw DomainError("unknown task kind");
}

Answer ideal_aggregate(const TaskInstance& instance, const std::vector<Artifact>& artifacts) {
    switch (instance.kind) {
        case TaskKind::KV: {
            std::optional<std::string> found;
            for (const auto& a : artifacts) {
                const auto& c = std::get<KvContent>(a.content);
                if (!c.value) continue;
                if (found && *found != *c.value) {
                    throw InstanceCorruption(fmt::format("key {} reported with values {} and {}", instance.subject,
                                                         *found, *c.value));
                }
                found = c.value;
            }
            return found;
        }
        case TaskKind::Math: {
            const auto& p = std::get<MathParams>(instance.params);
            std::vector<std::int64_t> merged;
            for (const auto& a : artifacts) {
                const auto& v = std::get<MathContent>(a.content).values;
                merged.insert(merged.end(), v.begin(), v.end());
            }
            return order_statistic(std::move(merged), p.k, p.direction);
        }
        case TaskKind::AliasChain: {
            std::unordered_map<std::string, std::string> links;
            for (const auto& a : artifacts) {
                for (const auto& [from, to] : std::get<AliasContent>(a.content).pairs) links.emplace(from, to);
            }
            return walk_chain(links, instance.subject);
        }
    }
    return std::nullopt;
}

double token_f1(std::string_view prediction, std::string_view truth) {
    const auto pred = tokenize(prediction);
    const auto gold = tokenize(truth);
    if (pred.empty() || gold.empty()) return 0.0;
    std::map<std::string_view, std::size_t> counts;
    for (std::size_t i = 0; i < gold.size(); ++i) ++counts[gold[i]];
    std::size_t overlap = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        auto it = counts.find(pred[i]);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

double raw_score(const TaskInstance& instance, const Answer& prediction, MetricKind metric) {
    if (!prediction || !instance.ground_truth) return 0.0;
    if (metric == MetricKind::ExactMatch) return *prediction == *instance.ground_truth ? 1.0 : 0.0;
    return token_f1(*prediction, *instance.ground_truth);
}

Score score(const TaskInstance& instance, const Answer& prediction, MetricKind metric, bool* clamped) {
    const double raw = raw_score(instance, prediction, metric);
    if (metric == MetricKind::ExactMatch) {
        // A miss is defined as the floor, not clamped to it.
        if (clamped) *clamped = false;
        return Score(raw == 1.0 ? 1.0 : kScoreFloor);
    }
    return Score::clamp(raw, clamped);
}

}  // namespace dnc
