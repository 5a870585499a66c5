#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>

namespace dnc {

struct EndpointConfig {
    std::string base_url;     // e.g. https://api.example.com/v1
    std::string model_name;
    std::string api_key_env;  // name of the variable holding the key; empty for keyless endpoints
    double timeout_s = 60.0;
    int max_retries = 3;
    int max_concurrent = 4;
    double backoff_base_s = 1.0;

    void validate() const;
};

struct ChatRequest {
    std::string system;
    std::string user;
    double temperature = 0.0;
    std::size_t max_output_tokens = 512;
};

struct Usage {
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    /// False when the server sent no usage block and counts were estimated.
    bool from_server = false;
};

struct ChatExchange {
    ChatRequest request;
    std::string response_text;
    Usage usage;
    double latency_s = 0.0;
    int attempts = 0;
};

/// Anything that answers chat requests. Implementations must be safe to call
/// from several threads.
class ChatModel {
public:
    virtual ~ChatModel() = default;
    virtual ChatExchange complete(const std::string& system, const std::string& user,
                                  std::size_t max_output_tokens) = 0;
};

/// Delay before retry number `retry` (1-based), without jitter.
double backoff_delay(double base_s, int retry);

/// Chat-completions client over HTTP(S). Temperature is always 0.
class LlmClient final : public ChatModel {
public:
    explicit LlmClient(EndpointConfig config);
    ~LlmClient() override;

    ChatExchange complete(const std::string& system, const std::string& user,
                          std::size_t max_output_tokens) override;

    const EndpointConfig& config() const noexcept { return config_; }

private:
    EndpointConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;    // {base path}/chat/completions
    std::unique_ptr<std::counting_semaphore<>> slots_;
    std::atomic<std::uint64_t> jitter_counter_{0};
};

}  // namespace dnc
