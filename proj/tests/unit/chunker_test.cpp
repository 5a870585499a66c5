#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dnc/chunker.hpp"
#include "dnc/errors.hpp"
#include "dnc/seed.hpp"
#include "dnc/tasks.hpp"

namespace dnc {
namespace {

std::vector<ChunkBoundary> bounds(std::initializer_list<std::pair<std::size_t, std::size_t>> b) {
    std::vector<ChunkBoundary> out;
    for (auto [s, e] : b) out.push_back({s, e});
    return out;
}

std::vector<std::string> strings(const TokenSpan& s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size(); ++i) out.emplace_back(s[i]);
    return out;
}

TEST(PlanChunks, ExactDivision) {
    const auto p = plan_chunks(128000, 32000);
    ASSERT_EQ(p.chunk_count(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(p.boundaries[i], (ChunkBoundary{i * 32000, (i + 1) * 32000}));
}

TEST(PlanChunks, Remainder) {
    EXPECT_EQ(plan_chunks(10, 4).boundaries, bounds({{0, 4}, {4, 8}, {8, 10}}));
}

TEST(PlanChunks, Overlap) {
    const auto p = plan_chunks(128000, 16000, 1000);
    EXPECT_EQ(p.stride(), 15000u);
    ASSERT_EQ(p.chunk_count(), 9u);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(p.boundaries[i].start, i * 15000);
    EXPECT_EQ(p.boundaries.back(), (ChunkBoundary{120000, 128000}));
}

TEST(PlanChunks, SingleChunkWhenShort) {
    EXPECT_EQ(plan_chunks(5, 1000).boundaries, bounds({{0, 5}}));
    EXPECT_EQ(plan_chunks(1000, 1000, 999).boundaries, bounds({{0, 1000}}));
}

TEST(PlanChunks, Errors) {
    EXPECT_THROW(plan_chunks(10, 0), DomainError);
    EXPECT_THROW(plan_chunks(10, 4, 4), DomainError);
    EXPECT_THROW(plan_chunks(10, 4, 5), DomainError);
    EXPECT_THROW(plan_chunks(0, 4), DomainError);
    EXPECT_THROW(plan_chunks(10, 2000, 0, 1000), DomainError);
}

TEST(SliceTokens, Examples) {
    const auto four = tokenize("a b c d");
    const auto s = slice_tokens(four, plan_chunks(4, 2));
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(strings(s[0]), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(strings(s[1]), (std::vector<std::string>{"c", "d"}));

    const auto five = tokenize("a b c d e");
    const auto t = slice_tokens(five, plan_chunks(5, 2));
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t[2].text(), "e");
    EXPECT_EQ(t[1].text(), "c d");

    EXPECT_THROW(slice_tokens(five, plan_chunks(4, 2)), DomainError);
}

TEST(SliceTokens, OverlappedSlicesReconstructInput) {
    TokenSequence seq;
    for (int i = 0; i < 128000; ++i) seq.push_back(std::to_string(i));
    const auto plan = plan_chunks(128000, 16000, 1000);
    const auto slices = slice_tokens(seq, plan);
    ASSERT_EQ(slices.size(), 9u);

    TokenSequence rebuilt;
    for (std::size_t i = 0; i < slices.size(); ++i) {
        const std::size_t skip = i == 0 ? 0 : plan.overlap;
        for (std::size_t j = skip; j < slices[i].size(); ++j) rebuilt.push_back(slices[i][j]);
    }
    EXPECT_EQ(rebuilt, seq);
}

TEST(Tokenize, Examples) {
    const auto t = tokenize("12 7 93");
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t[0], "12");
    EXPECT_EQ(t[2], "93");
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(detokenize(tokenize("  x\t y\n z ")), "x y z");
    EXPECT_THROW(tokenize("x", "bpe"), DomainError);
}

TEST(Tokenize, CustomScheme) {
    register_tokenizer("comma", [](std::string_view text) {
        TokenSequence out;
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto end = std::min(text.find(',', start), text.size());
            if (end > start) out.push_back(text.substr(start, end - start));
            start = end + 1;
        }
        return out;
    });
    EXPECT_EQ(tokenize("a,b,,c", "comma").size(), 3u);
}

TEST(Tokenize, KvPayloadTokenCount) {
    EXPECT_EQ(gen_kv(2000, 5).payload.size(), 2000u);
    EXPECT_EQ(gen_kv(2000, 5, false).payload.size(), 1 + 2 * 2000u);
    EXPECT_EQ(tokenize(detokenize(gen_kv(2000, 5).payload)).size(), 2000u);
}

TEST(Tokenize, ProviderTokenEstimate) {
    EXPECT_EQ(approx_provider_tokens(""), 0u);
    EXPECT_EQ(approx_provider_tokens("abcd"), 1u);
    EXPECT_EQ(approx_provider_tokens("abcde"), 2u);
}

TEST(ChunkerProperty, CoverageStrideAndOverlap) {
    Rng rng(31);
    for (int i = 0; i < 3000; ++i) {
        const std::size_t total = 1 + rng.below(5000);
        const std::size_t c = 1 + rng.below(700);
        const std::size_t overlap = rng.below(c);
        const auto p = plan_chunks(total, c, overlap);
        std::vector<int> hits(total, 0);
        for (std::size_t k = 0; k < p.chunk_count(); ++k) {
            const auto& b = p.boundaries[k];
            ASSERT_LT(b.start, b.end);
            ASSERT_LE(b.length(), c);
            if (k + 1 < p.chunk_count()) {
                ASSERT_EQ(b.length(), c);
                ASSERT_EQ(p.boundaries[k + 1].start - b.start, c - overlap);
                if (k + 2 < p.chunk_count()) ASSERT_EQ(b.end - p.boundaries[k + 1].start, overlap);
            }
            for (std::size_t t = b.start; t < b.end; ++t) ++hits[t];
        }
        ASSERT_EQ(p.boundaries.back().end, total);
        for (int h : hits) {
            ASSERT_GE(h, 1);
            if (overlap == 0) ASSERT_EQ(h, 1);
        }
        ASSERT_EQ(plan_chunks(total, c, overlap), p);
    }
}

TEST(ChunkerProperty, CountNonincreasingInChunkSize) {
    for (std::size_t total : {1u, 17u, 1000u, 128000u}) {
        for (std::size_t overlap : {0u, 3u}) {
            std::size_t prev = SIZE_MAX;
            for (std::size_t c = overlap + 1; c <= 3000; c += 7) {
                const auto n = plan_chunks(total, c, overlap).chunk_count();
                ASSERT_LE(n, prev) << total << " " << c;
                prev = n;
            }
        }
    }
}

}  // namespace
}  // namespace dnc
