#pragma once

#include <stdexcept>
#include <string>

namespace dnc {

/// Precondition or value-domain violation (bad fidelity component, zero chunk size, ...).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

class InsufficientPoints : public DomainError {
public:
    explicit InsufficientPoints(const std::string& what) : DomainError(what) {}
};

/// Artifacts that cannot have come from a well-formed instance (e.g. two
/// different values found for a unique KV key).
class InstanceCorruption : public std::runtime_error {
public:
    explicit InstanceCorruption(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Live-mode client failures.
class LlmError : public std::runtime_error {
public:
    explicit LlmError(const std::string& what) : std::runtime_error(what) {}
};

class AuthError : public LlmError {
public:
    explicit AuthError(const std::string& what) : LlmError(what) {}
};

class RetriesExhausted : public LlmError {
public:
    RetriesExhausted(const std::string& what, int attempts)
        : LlmError(what), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class MalformedResponse : public LlmError {
public:
    explicit MalformedResponse(const std::string& what) : LlmError(what) {}
};

}  // namespace dnc
