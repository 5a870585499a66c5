#include "dnc/llm_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "dnc/chunker.hpp"
#include "dnc/errors.hpp"
#include "dnc/seed.hpp"

namespace dnc {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void set_timeouts(httplib::Client& cli, double timeout_s) {
    const auto whole = static_cast<time_t>(timeout_s);
    const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(whole)) * 1e6);
    cli.set_connection_timeout(whole, usec);
    cli.set_read_timeout(whole, usec);
    cli.set_write_timeout(whole, usec);
}

}  // namespace

void EndpointConfig::validate() const {
    if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
    if (base_url.find("://") == std::string::npos) {
        throw ConfigError(fmt::format("endpoint base_url '{}' needs a scheme (http:// or https://)", base_url));
    }
    if (model_name.empty()) throw ConfigError("endpoint model_name is empty");
    if (!(timeout_s > 0.0)) throw ConfigError("endpoint timeout must be > 0");
    if (max_retries < 0) throw ConfigError("endpoint max_retries must be >= 0");
    if (max_concurrent < 1) throw ConfigError("endpoint max_concurrent must be >= 1");
    if (!(backoff_base_s >= 0.0)) throw ConfigError("endpoint backoff base must be >= 0");
}

double backoff_delay(double base_s, int retry) { return base_s * std::ldexp(1.0, retry - 1); }

LlmClient::LlmClient(EndpointConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto scheme_end = config_.base_url.find("://") + 3;
    const auto path_start = config_.base_url.find('/', scheme_end);
    origin_ = config_.base_url.substr(0, path_start);
    std::string base_path = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();
    path_ = base_path + "/chat/completions";
    slots_ = std::make_unique<std::counting_semaphore<>>(config_.max_concurrent);
}

LlmClient::~LlmClient() = default;

ChatExchange LlmClient::complete(const std::string& system, const std::string& user,
                                 std::size_t max_output_tokens) {
    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError(fmt::format("environment variable {} holding the API key is not set",
                                          config_.api_key_env));
        }
        headers.emplace("Authorization", fmt::format("Bearer {}", key));
    }

    ChatExchange ex;
    ex.request = ChatRequest{system, user, 0.0, max_output_tokens};
    const json body = {
        {"model", config_.model_name},
        {"messages", json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}})},
        {"temperature", 0},
        {"max_tokens", max_output_tokens},
    };
    const std::string payload = body.dump();

    const auto start = Clock::now();
    std::string last_error;
    const int max_attempts = config_.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        ex.attempts = attempt;
        httplib::Result res;
        {
            slots_->acquire();
            httplib::Client cli(origin_);
            set_timeouts(cli, config_.timeout_s);
            res = cli.Post(path_, headers, payload, "application/json");
            slots_->release();
        }

        bool retryable = false;
        if (!res) {
            last_error = fmt::format("transport error: {}", httplib::to_string(res.error()));
            retryable = true;
        } else if (res->status == 401 || res->status == 403) {
            throw AuthError(fmt::format("endpoint rejected credentials (HTTP {})", res->status));
        } else if (res->status == 429 || res->status >= 500) {
            last_error = fmt::format("HTTP {}", res->status);
            retryable = true;
        } else if (res->status != 200) {
            throw LlmError(fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200)));
        } else {
            json reply;
            try {
                reply = json::parse(res->body);
                ex.response_text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                throw MalformedResponse(fmt::format("unexpected response body: {}", e.what()));
            }
            const auto usage = reply.find("usage");
            if (usage != reply.end() && usage->is_object() && usage->contains("prompt_tokens") &&
                usage->contains("completion_tokens")) {
                ex.usage = {usage->at("prompt_tokens").get<std::size_t>(),
                            usage->at("completion_tokens").get<std::size_t>(), true};
            } else {
                ex.usage = {approx_provider_tokens(system) + approx_provider_tokens(user),
                            approx_provider_tokens(ex.response_text), false};
            }
            ex.latency_s = seconds_since(start);
            return ex;
        }

        if (retryable && attempt < max_attempts) {
            const double delay = backoff_delay(config_.backoff_base_s, attempt);
            const double jitter = 0.25 * delay * unit_draw(fnv1a(origin_), jitter_counter_++, attempt, "jitter");
            std::this_thread::sleep_for(std::chrono::duration<double>(delay + jitter));
        }
    }
    throw RetriesExhausted(fmt::format("{} after {} attempts", last_error, max_attempts), max_attempts);
}

}  // namespace dnc
