#include "dnc/chunker.hpp"

#include <cctype>
#include <limits>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "dnc/errors.hpp"

namespace dnc {

void TokenSequence::reserve(std::size_t tokens, std::size_t chars) {
    starts_.reserve(tokens);
    text_.reserve(chars);
}

void TokenSequence::push_back(std::string_view token) {
    if (!starts_.empty()) {
        text_.push_back(' ');
    }
    if (text_.size() + token.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw DomainError("token sequence exceeds 4 GiB of text");
    }
    starts_.push_back(static_cast<std::uint32_t>(text_.size()));
    text_.append(token);
}

std::string_view TokenSequence::operator[](std::size_t i) const noexcept {
    const std::size_t begin = starts_[i];
    const std::size_t end = i + 1 < starts_.size() ? starts_[i + 1] - 1 : text_.size();
    return std::string_view(text_).substr(begin, end - begin);
}

TokenSpan TokenSequence::span(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) {
        throw DomainError(fmt::format("token range [{}, {}) outside sequence of {}", begin, end, size()));
    }
    return TokenSpan(*this, begin, end);
}

TokenSpan TokenSequence::all() const { return TokenSpan(*this, 0, size()); }

std::string_view TokenSpan::text() const noexcept {
    if (empty()) return {};
    const std::string_view first = (*seq_)[begin_];
    const std::string_view last = (*seq_)[end_ - 1];
    return std::string_view(first.data(), static_cast<std::size_t>(last.data() + last.size() - first.data()));
}

TokenSequence TokenSpan::materialize() const {
    TokenSequence out;
    out.reserve(size(), text().size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i]);
    return out;
}

namespace {

TokenSequence whitespace_tokenize(std::string_view text) {
    TokenSequence out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

TokenSequence chars4_tokenize(std::string_view text) {
    TokenSequence out;
    for (std::size_t i = 0; i < text.size(); i += 4) out.push_back(text.substr(i, 4));
    return out;
}

struct Registry {
    std::mutex mutex;
    std::map<std::string, Tokenizer, std::less<>> schemes{
        {"whitespace", whitespace_tokenize},
        {"chars4", chars4_tokenize},
    };
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

void register_tokenizer(std::string name, Tokenizer tokenizer) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.schemes[std::move(name)] = std::move(tokenizer);
}

TokenSequence tokenize(std::string_view text, std::string_view scheme) {
    Tokenizer fn;
    {
        auto& r = registry();
        std::lock_guard lock(r.mutex);
        const auto it = r.schemes.find(scheme);
        if (it == r.schemes.end()) {
            throw DomainError(fmt::format("unknown tokenizer scheme '{}'", scheme));
        }
        fn = it->second;
    }
    return fn(text);
}

std::size_t approx_provider_tokens(std::string_view text) noexcept { return (text.size() + 3) / 4; }

ChunkPlan plan_chunks(std::size_t total_length, std::size_t chunk_size, std::size_t overlap,
                      std::size_t max_chunk_size) {
    if (chunk_size == 0) {
        throw DomainError("chunk size must be >= 1");
    }
    if (chunk_size > max_chunk_size) {
        throw DomainError(fmt::format("chunk size {} exceeds the maximum {}", chunk_size, max_chunk_size));
    }
    if (overlap >= chunk_size) {
        throw DomainError(fmt::format("overlap {} must be smaller than chunk size {}", overlap, chunk_size));
    }
    if (total_length == 0) {
        throw DomainError("total length must be >= 1");
    }
    ChunkPlan plan{total_length, chunk_size, overlap, {}};
    if (total_length <= chunk_size) {
        plan.boundaries.push_back({0, total_length});
        return plan;
    }
    const std::size_t stride = chunk_size - overlap;
    const std::size_t count = (total_length - chunk_size + stride - 1) / stride + 1;
    plan.boundaries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t start = i * stride;
        plan.boundaries.push_back({start, std::min(start + chunk_size, total_length)});
    }
    return plan;
}

std::vector<TokenSpan> slice_tokens(const TokenSequence& tokens, const ChunkPlan& plan) {
    if (tokens.size() != plan.total_length) {
        throw DomainError(fmt::format("plan covers {} tokens but the sequence has {}", plan.total_length,
                                      tokens.size()));
    }
    std::vector<TokenSpan> out;
    out.reserve(plan.boundaries.size());
    for (const auto& b : plan.boundaries) out.push_back(tokens.span(b.start, b.end));
    return out;
}

}  // namespace dnc
