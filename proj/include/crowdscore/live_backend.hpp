#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "crowdscore/backend.hpp"

namespace crowdscore {

struct HttpResponse {
    int status = 0;  // 0 = transport-level failure (connect/timeout)
    std::string body;
    std::map<std::string, std::string> headers;
    std::string error;  // transport failure detail when status == 0
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Minimal HTTP POST abstraction so the live client can be exercised
/// without a network.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& url, const HttpHeaders& headers,
                              const std::string& body) = 0;
};

/// cpp-httplib transport. `timeout_s` applies to connect/read/write.
std::shared_ptr<Transport> make_httplib_transport(int timeout_s);

struct LiveConfig {
    std::string endpoint_url;  // e.g. https://host/v1/completions
    std::string api_key_env = "CROWDSCORE_API_KEY";
    int concurrency = 4;
    int timeout_s = 60;
    int max_retries = 3;       // transient failures: 5xx, 429, connect errors
    int backoff_base_ms = 250; // doubled per retry, capped
    int backoff_cap_ms = 4000;
};

/// HTTP JSON completion client in the de facto completions shape: POST
/// {model, prompt, temperature, top_p, max_tokens[, stop]}, response
/// {"choices":[{"text": ...}]}. Bearer auth from the configured env var
/// when set. Transient failures are retried with capped exponential
/// backoff; 401/403 fail immediately. Calls beyond `concurrency` wait.
class LiveBackend : public Backend {
public:
    explicit LiveBackend(LiveConfig config, std::shared_ptr<Transport> transport = nullptr);
    ~LiveBackend() override;

    CompletionRecord complete(const std::string& prompt, const CompletionParams& params,
                              int attempt_index = 0) override;
    BackendKind kind() const override { return BackendKind::Live; }

private:
    class Gate;  // bounded in-flight counter

    LiveConfig config_;
    std::shared_ptr<Transport> transport_;
    std::unique_ptr<Gate> gate_;
};

}  // namespace crowdscore
