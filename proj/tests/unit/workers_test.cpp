#include <cmath>
#include <functional>
#include <mutex>

#include <gtest/gtest.h>

#include "dnc/errors.hpp"
#include "dnc/seed.hpp"
#include "dnc/workers.hpp"

namespace dnc {
namespace {

class ScriptedModel : public ChatModel {
public:
    explicit ScriptedModel(std::function<std::string(const std::string&)> reply) : reply_(std::move(reply)) {}
    ChatExchange complete(const std::string& system, const std::string& user, std::size_t max_out) override {
        std::lock_guard lock(mu_);
        ++calls;
        last_user = user;
        ChatExchange ex;
        ex.request = {system, user, 0.0, max_out};
        ex.response_text = reply_(user);
        ex.usage = {approx_provider_tokens(user), approx_provider_tokens(ex.response_text), false};
        ex.attempts = 1;
        return ex;
    }
    int calls = 0;
    std::string last_user;

private:
    std::mutex mu_;
    std::function<std::string(const std::string&)> reply_;
};

std::vector<Artifact> ideal_artifacts(const TaskInstance& inst, const ChunkPlan& plan) {
    std::vector<Artifact> out;
    const auto spans = slice_tokens(inst.payload, plan);
    for (std::size_t i = 0; i < spans.size(); ++i) out.push_back(ideal_artifact(inst, spans[i], i));
    return out;
}

TEST(RunWorker, OracleDelegates) {
    const auto inst = gen_math(500, 3, Direction::Smallest, 2);
    const auto plan = plan_chunks(inst.total_length, 64);
    const auto spans = slice_tokens(inst.payload, plan);
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto out = run_worker(OracleBackend{}, inst, spans[i], i);
        EXPECT_EQ(out.artifact, ideal_artifact(inst, spans[i], i));
        EXPECT_EQ(out.chunk_id, i);
        EXPECT_FALSE(out.corrupted);
        EXPECT_EQ(out.input_tokens, spans[i].size());
        EXPECT_EQ(out.output_tokens, out.artifact.token_cost);
    }
}

TEST(RunWorker, ZeroNoiseNeverCorrupts) {
    const NoisyBackend zero{Linear{0, 0}, 99, {}};
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto inst = gen_kv(100, s);
        const auto spans = slice_tokens(inst.payload, plan_chunks(100, 10));
        for (std::size_t i = 0; i < spans.size(); ++i) {
            ASSERT_EQ(run_worker(zero, inst, spans[i], i).artifact, ideal_artifact(inst, spans[i], i));
        }
    }
}

TEST(RunWorker, LatencyFromCurve) {
    const auto inst = gen_kv(100, 1);
    const auto out = run_worker(OracleBackend{{0.5, 0.01}}, inst, inst.payload.span(0, 40), 0);
    EXPECT_DOUBLE_EQ(out.latency, 0.5 + 0.01 * 40);
}

TEST(NoisyDraw, AnalyticProbability) {
    EXPECT_NEAR(corruption_probability(PowerLaw{1e-6, 2}, 1000), 1 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(1 - std::exp(-1.0), 0.6321, 1e-4);
    EXPECT_EQ(corruption_probability(PowerLaw{1e-6, 2}, 0), 0.0);

    const NoisyBackend b{PowerLaw{1e-6, 2}, 7, {}};
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += noisy_draw(b, static_cast<std::uint64_t>(i), 0, "worker", 1000);
    EXPECT_NEAR(double(hits) / n, 1 - std::exp(-1.0), 0.01);
}

TEST(NoisyDraw, SeedContract) {
    const NoisyBackend b{Linear{1e-3, 0}, 5, {}};
    const auto inst = gen_math(400, 2, Direction::Smallest, 11);
    const auto spans = slice_tokens(inst.payload, plan_chunks(400, 100));
    for (std::size_t i = 0; i < spans.size(); ++i) {
        EXPECT_EQ(run_worker(b, inst, spans[i], i), run_worker(b, inst, spans[i], i));
    }
    int differ = 0;
    for (std::uint64_t s = 0; s < 64; ++s) {
        differ += noisy_draw(b, s, 0, "worker", 500) != noisy_draw(b, s, 1, "worker", 500);
    }
    EXPECT_GT(differ, 0);
}

TEST(CorruptArtifact, Examples) {
    const auto math = make_artifact(0, MathContent{{1, 4}});
    EXPECT_EQ(std::get<MathContent>(apply_corruption(math, {CorruptionOp::AdjustValue, 0, +1}).content).values,
              (std::vector<std::int64_t>{2, 4}));
    EXPECT_EQ(std::get<MathContent>(apply_corruption(math, {CorruptionOp::RemoveValue, 1}).content).values,
              (std::vector<std::int64_t>{1}));

    const auto kv = make_artifact(0, KvContent{"v17"});
    const auto flipped = apply_corruption(kv, {CorruptionOp::FlipToAbsent});
    EXPECT_FALSE(std::get<KvContent>(flipped.content).value.has_value());
    const auto perturbed = std::get<KvContent>(apply_corruption(kv, {CorruptionOp::PerturbValue}).content).value;
    ASSERT_TRUE(perturbed.has_value());
    EXPECT_NE(*perturbed, "v17");

    const auto absent = make_artifact(0, KvContent{});
    EXPECT_TRUE(std::get<KvContent>(apply_corruption(absent, {CorruptionOp::FlipToFound}).content).value.has_value());
    EXPECT_THROW(apply_corruption(absent, {CorruptionOp::FlipToAbsent}), DomainError);

    const auto alias = make_artifact(0, AliasContent{{{"aA", "aB"}, {"aB", "EC"}}});
    EXPECT_EQ(std::get<AliasContent>(apply_corruption(alias, {CorruptionOp::DropPair, 0}).content).pairs.size(), 1u);
}

TEST(CorruptArtifact, ApplicableSets) {
    EXPECT_EQ(applicable_corruptions(make_artifact(0, KvContent{"x"})).size(), 2u);
    EXPECT_EQ(applicable_corruptions(make_artifact(0, KvContent{})).size(), 1u);
    EXPECT_EQ(applicable_corruptions(make_artifact(0, MathContent{{1, 2}})).size(), 6u);
    EXPECT_EQ(applicable_corruptions(make_artifact(0, MathContent{})).size(), 0u);
    EXPECT_EQ(applicable_corruptions(make_artifact(0, AliasContent{{{"a", "b"}}})).size(), 1u);
}

TEST(CorruptArtifact, ChoiceIsUniform) {
    const auto a = make_artifact(0, MathContent{{1, 4}});
    const auto options = applicable_corruptions(a);
    std::vector<int> counts(options.size(), 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        const auto out = corrupt_artifact(a, TaskKind::Math, mix64(static_cast<std::uint64_t>(i)));
        for (std::size_t k = 0; k < options.size(); ++k) {
            if (apply_corruption(a, options[k]) == out) {
                ++counts[k];
                break;
            }
        }
    }
    const double expected = double(n) / options.size();
    const double sd = std::sqrt(n * (1.0 / options.size()) * (1 - 1.0 / options.size()));
    for (int c : counts) EXPECT_NEAR(c, expected, 4 * sd);
}

TEST(RunManager, OracleMatchesExactSolve) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto kv = gen_kv(200, s);
        const auto math = gen_math(200, 2, Direction::Largest, s);
        for (const auto* inst : {&kv, &math}) {
            const auto arts = ideal_artifacts(*inst, plan_chunks(200, 33));
            const auto out = run_manager(OracleBackend{}, *inst, arts);
            ASSERT_EQ(out.answer, exact_solve(*inst));
            ASSERT_EQ(run_manager(NoisyBackend{Linear{0, 0}, s, {}}, *inst, arts).answer, ideal_aggregate(*inst, arts));
        }
    }
}

TEST(RunManager, AggregationLengthAndOverhead) {
    const auto inst = gen_math(200, 3, Direction::Smallest, 4);
    const auto arts = ideal_artifacts(inst, plan_chunks(200, 50));
    const auto plain = run_manager(OracleBackend{}, inst, arts);
    EXPECT_EQ(plain.l_agg, 4u * 3u);

    const PromptBundle bundle{"{chunk}", "Merge these reports {responses} now"};
    const auto with = run_manager(OracleBackend{}, inst, arts, &bundle);
    EXPECT_EQ(with.l_agg, 12u + prompt_overhead_tokens(bundle.manager, inst.query));
    EXPECT_EQ(with.l_agg, 12u + 4u);
}

TEST(RunManager, NoisyCorruptionGivesNull) {
    const auto inst = gen_kv(100, 3);
    const auto arts = ideal_artifacts(inst, plan_chunks(100, 10));
    const NoisyBackend certain{Linear{0, 800}, 1, {}};
    const auto out = run_manager(certain, inst, arts);
    EXPECT_TRUE(out.corrupted);
    EXPECT_FALSE(out.answer.has_value());
}

TEST(RunManager, KvConflictFlagged) {
    const auto inst = gen_kv(10, 3);
    const std::vector<Artifact> arts{make_artifact(0, KvContent{"a"}), make_artifact(1, KvContent{"b"})};
    const auto out = run_manager(OracleBackend{}, inst, arts);
    EXPECT_TRUE(out.conflict);
    EXPECT_FALSE(out.answer.has_value());
}

TEST(LiveBackend, WorkerParsesAnswerLine) {
    const auto inst = gen_kv(20, 5);
    auto model = std::make_shared<ScriptedModel>([&](const std::string& user) {
        return user.find(inst.subject + ":") != std::string::npos ? "ok\nANSWER: " + *inst.ground_truth : "ANSWER: NONE";
    });
    const LiveBackend live{model, PromptStyle::PlannerBased};
    const auto spans = slice_tokens(inst.payload, plan_chunks(20, 5));
    std::vector<Artifact> arts;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto out = run_worker(live, inst, spans[i], i);
        EXPECT_FALSE(out.parse_failure);
        EXPECT_EQ(out.artifact, ideal_artifact(inst, spans[i], i));
        arts.push_back(out.artifact);
    }
    EXPECT_EQ(model->calls, 4);
    EXPECT_NE(model->last_user.find(std::string(spans[3].text())), std::string::npos);
}

TEST(LiveBackend, ParseFailureYieldsNullAndFlag) {
    const auto inst = gen_kv(20, 5);
    auto model = std::make_shared<ScriptedModel>([](const std::string&) { return "I cannot tell."; });
    const LiveBackend live{model, PromptStyle::Manual};
    const auto w = run_worker(live, inst, inst.payload.all(), 0);
    EXPECT_TRUE(w.parse_failure);
    EXPECT_FALSE(std::get<KvContent>(w.artifact.content).value.has_value());

    const auto m = run_manager(live, inst, {w.artifact});
    EXPECT_TRUE(m.parse_failure);
    EXPECT_FALSE(m.answer.has_value());
}

TEST(WorkersProperty, OracleNeverDeviates) {
    Rng rng(61);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t seed = rng.next();
        const auto inst = i % 3 == 0   ? gen_kv(1 + rng.below(300), seed)
                          : i % 3 == 1 ? gen_math(50 + rng.below(300), 1 + rng.below(4), Direction::Smallest, seed)
                                       : gen_alias_chain(2 + rng.below(10), rng.below(200), seed);
        const auto plan = plan_chunks(inst.total_length, 1 + rng.below(inst.total_length));
        const auto spans = slice_tokens(inst.payload, plan);
        std::vector<Artifact> arts;
        for (std::size_t k = 0; k < spans.size(); ++k) {
            const auto out = run_worker(OracleBackend{}, inst, spans[k], k);
            ASSERT_EQ(out.artifact, ideal_artifact(inst, spans[k], k));
            arts.push_back(out.artifact);
        }
        ASSERT_EQ(run_manager(OracleBackend{}, inst, arts).answer, ideal_aggregate(inst, arts));
    }
}

TEST(WorkersProperty, CorruptionFrequencyMatchesModel) {
    const NoisyBackend b{Linear{2e-4, 0}, 3, {}};
    const auto inst = gen_kv(5000, 1);
    const auto spans = slice_tokens(inst.payload, plan_chunks(5000, 1000));
    const double p = corruption_probability(b.model, 1000);
    int hits = 0, n = 0;
    for (std::uint64_t s = 0; s < 4000; ++s) {
        auto copy = inst;
        copy.seed = s;
        for (std::size_t k = 0; k < spans.size(); ++k, ++n) hits += run_worker(b, copy, spans[k], k).corrupted;
    }
    const double sd = std::sqrt(n * p * (1 - p));
    EXPECT_NEAR(hits, n * p, 3 * sd);
}

// Smallest-number task with independent per-chunk corruption: only the chunk
// holding the global minimum matters, and every corruption of a one-value
// artifact moves that chunk's report, so accuracy = 1 - p.
TEST(WorkersProperty, MathAccuracyMatchesIndependenceModel) {
    const double p = 0.1;
    const NoisyBackend b{Linear{0, -std::log(1 - p)}, 17, {}};
    int correct = 0;
    const int runs = 10000;
    for (int s = 0; s < runs; ++s) {
        const auto inst = gen_math(200, 1, Direction::Smallest, static_cast<std::uint64_t>(s));
        const auto spans = slice_tokens(inst.payload, plan_chunks(200, 20));
        std::vector<Artifact> arts;
        for (std::size_t k = 0; k < spans.size(); ++k) arts.push_back(run_worker(b, inst, spans[k], k).artifact);
        correct += run_manager(OracleBackend{}, inst, arts).answer == inst.ground_truth;
    }
    EXPECT_NEAR(double(correct) / runs, 1 - p, 0.02);
}

}  // namespace
}  // namespace dnc
