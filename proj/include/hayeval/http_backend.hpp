#pragma once

#include <chrono>

#include "hayeval/gateway.hpp"

namespace hayeval {

/// HTTP client for OpenAI-compatible chat/embedding APIs and the Cohere
/// rerank API. The endpoint's base_url is the API root (for example
/// https://api.openai.com/v1); requests go to <root>/chat/completions,
/// <root>/embeddings and <root>/rerank.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}
    BackendResponse call(const Endpoint& endpoint, const BackendRequest& request) override;

private:
    std::chrono::seconds timeout_;
};

}  // namespace hayeval
