#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace dnc {

class TokenSpan;

/// Tokens stored as one space-joined string plus start offsets. Views handed
/// out by operator[] and span() stay valid while the sequence is alive and
/// unmodified.
class TokenSequence {
public:
    TokenSequence() = default;

    void reserve(std::size_t tokens, std::size_t chars);
    void push_back(std::string_view token);

    std::size_t size() const noexcept { return starts_.size(); }
    bool empty() const noexcept { return starts_.empty(); }
    std::string_view operator[](std::size_t i) const noexcept;

    /// All tokens joined with single spaces.
    std::string_view text() const noexcept { return text_; }

    TokenSpan span(std::size_t begin, std::size_t end) const;
    TokenSpan all() const;

    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

private:
    std::string text_;
    std::vector<std::uint32_t> starts_;
};

/// Non-owning view of a contiguous token range.
class TokenSpan {
public:
    TokenSpan() = default;
    TokenSpan(const TokenSequence& seq, std::size_t begin, std::size_t end)
        : seq_(&seq), begin_(begin), end_(end) {}

    std::size_t size() const noexcept { return end_ - begin_; }
    bool empty() const noexcept { return begin_ == end_; }
    std::string_view operator[](std::size_t i) const noexcept { return (*seq_)[begin_ + i]; }
    std::size_t begin_index() const noexcept { return begin_; }
    std::size_t end_index() const noexcept { return end_; }

    /// The covered tokens joined with single spaces.
    std::string_view text() const noexcept;

    TokenSequence materialize() const;

private:
    const TokenSequence* seq_ = nullptr;
    std::size_t begin_ = 0;
    std::size_t end_ = 0;
};

using Tokenizer = std::function<TokenSequence(std::string_view)>;

/// Registers (or replaces) a tokenizer scheme. "whitespace" and "chars4" are built in.
void register_tokenizer(std::string name, Tokenizer tokenizer);

/// Throws DomainError for an unknown scheme.
TokenSequence tokenize(std::string_view text, std::string_view scheme = "whitespace");

/// Inverse of whitespace tokenization: tokens joined by single spaces.
inline std::string detokenize(const TokenSequence& tokens) { return std::string(tokens.text()); }

/// Provider-token estimate used for live cost accounting: ceil(chars / 4).
std::size_t approx_provider_tokens(std::string_view text) noexcept;

struct ChunkBoundary {
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // exclusive

    std::size_t length() const noexcept { return end - start; }
    friend bool operator==(const ChunkBoundary&, const ChunkBoundary&) = default;
};

struct ChunkPlan {
    std::size_t total_length = 0;
    std::size_t chunk_size = 0;
    std::size_t overlap = 0;
    std::vector<ChunkBoundary> boundaries;

    std::size_t chunk_count() const noexcept { return boundaries.size(); }
    std::size_t stride() const noexcept { return chunk_size - overlap; }

    friend bool operator==(const ChunkPlan&, const ChunkPlan&) = default;
};

inline constexpr std::size_t kMaxChunkSize = std::size_t{1} << 30;

/// Equal-length chunks with a shorter final remainder; consecutive starts
/// differ by chunk_size - overlap. Throws DomainError on zero chunk size,
/// overlap >= chunk_size, chunk_size > max_chunk_size or total_length == 0.
ChunkPlan plan_chunks(std::size_t total_length, std::size_t chunk_size, std::size_t overlap = 0,
                      std::size_t max_chunk_size = kMaxChunkSize);

/// One view per boundary, in boundary order. Throws DomainError on length mismatch.
std::vector<TokenSpan> slice_tokens(const TokenSequence& tokens, const ChunkPlan& plan);

}  // namespace dnc
