#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "crowdscore/live_backend.hpp"

#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

using ordered_json = nlohmann::ordered_json;

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must include scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport : public Transport {
public:
    explicit HttplibTransport(int timeout_s) : timeout_s_(timeout_s) {}

    HttpResponse post(const std::string& url, const HttpHeaders& headers,
                      const std::string& body) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        client.set_connection_timeout(timeout_s_, 0);
        client.set_read_timeout(timeout_s_, 0);
        client.set_write_timeout(timeout_s_, 0);
        httplib::Headers hdrs;
        for (const auto& [k, v] : headers) hdrs.emplace(k, v);
        auto result = client.Post(path, hdrs, body, "application/json");
        if (!result) {
            HttpResponse failure;
            failure.error = httplib::to_string(result.error());
            return failure;
        }
        HttpResponse response;
        response.status = result->status;
        response.body = result->body;
        for (const auto& [k, v] : result->headers) response.headers[k] = v;
        return response;
    }

private:
    int timeout_s_;
};

double parse_retry_after(const HttpResponse& response) {
    auto it = response.headers.find("Retry-After");
    if (it == response.headers.end()) it = response.headers.find("retry-after");
    if (it == response.headers.end()) return 0.0;
    double seconds = 0.0;
    auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(),
                                     seconds);
    (void)ptr;
    return ec == std::errc{} ? seconds : 0.0;
}

std::string extract_completion(const HttpResponse& response) {
    ordered_json obj = ordered_json::parse(response.body, nullptr, false);
    if (obj.is_discarded() || !obj.contains("choices") || !obj["choices"].is_array() ||
        obj["choices"].empty())
        throw TransportError("malformed completion response body");
    const auto& choice = obj["choices"][0];
    if (!choice.contains("text") || !choice["text"].is_string())
        throw TransportError("completion response missing choices[0].text");
    return choice["text"].get<std::string>();
}

}  // namespace

std::shared_ptr<Transport> make_httplib_transport(int timeout_s) {
    return std::make_shared<HttplibTransport>(timeout_s);
}

/// Counting gate: bounds the number of in-flight live calls.
class LiveBackend::Gate {
public:
    explicit Gate(int limit) : available_(limit > 0 ? limit : 1) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

LiveBackend::LiveBackend(LiveConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_httplib_transport(config_.timeout_s)),
      gate_(std::make_unique<Gate>(config_.concurrency)) {
    if (config_.endpoint_url.empty()) throw ConfigError("live backend requires endpoint_url");
}

LiveBackend::~LiveBackend() = default;

CompletionRecord LiveBackend::complete(const std::string& prompt,
                                       const CompletionParams& params, int attempt_index) {
    if (prompt.empty()) throw ConfigError("prompt must be non-empty");
    if (params.model.empty()) throw ConfigError("live backend requires a model id");

    ordered_json request;
    request["model"] = params.model;
    request["prompt"] = prompt;
    request["temperature"] = params.temperature;
    request["top_p"] = params.top_p;
    request["max_tokens"] = params.max_tokens;
    if (!params.stop_sequences.empty()) request["stop"] = params.stop_sequences;
    std::string body = request.dump();

    HttpHeaders headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace_back("Authorization", std::string("Bearer ") + key);

    gate_->acquire();
    struct Release {
        Gate* gate;
        ~Release() { gate->release(); }
    } release{gate_.get()};

    int backoff_ms = config_.backoff_base_ms;
    double last_retry_after = 0.0;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms = std::min(backoff_ms * 2, config_.backoff_cap_ms);
        }
        HttpResponse response = transport_->post(config_.endpoint_url, headers, body);
        if (response.status == 200) {
            CompletionRecord rec;
            rec.digest = cache_key(prompt, params, attempt_index);
            rec.prompt = prompt;
            rec.params = params;
            rec.completion = extract_completion(response);
            rec.backend_kind = BackendKind::Live;
            rec.timestamp = static_cast<std::int64_t>(
                std::chrono::duration_cast<std::chrono::seconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count());
            rec.attempt_index = attempt_index;
            journal_.append(rec);
            return rec;
        }
        if (response.status == 401 || response.status == 403)
            throw AuthError("authentication rejected (HTTP " + std::to_string(response.status) +
                            ")");
        if (response.status == 429) {
            last_retry_after = parse_retry_after(response);
            last_error = "rate limited (HTTP 429)";
            continue;
        }
        if (response.status == 0) {
            last_error = "transport failure: " + response.error;
            continue;
        }
        if (response.status >= 500) {
            last_error = "server error (HTTP " + std::to_string(response.status) + ")";
            continue;
        }
        throw TransportError("unexpected HTTP status " + std::to_string(response.status) + ": " +
                             response.body.substr(0, 200));
    }
    if (last_retry_after > 0.0)
        throw RateLimitedError("rate limited after retries exhausted", last_retry_after);
    throw TransportError("retries exhausted: " + last_error);
}

}  // namespace crowdscore
