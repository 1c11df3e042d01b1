#include "hayeval/http_backend.hpp"

#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "hayeval/errors.hpp"

namespace hayeval {

using nlohmann::json;

namespace {

struct Url {
    std::string scheme_host_port;
    std::string path_prefix;
};

Url split_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("malformed url '" + base_url + "'");
    const auto path_start = base_url.find('/', scheme_end + 3);
    Url u;
    if (path_start == std::string::npos) {
        u.scheme_host_port = base_url;
    } else {
        u.scheme_host_port = base_url.substr(0, path_start);
        u.path_prefix = base_url.substr(path_start);
    }
    while (!u.path_prefix.empty() && u.path_prefix.back() == '/') u.path_prefix.pop_back();
    return u;
}

}  // namespace

BackendResponse HttpBackend::call(const Endpoint& endpoint, const BackendRequest& request) {
    const Url url = split_url(endpoint.base_url);
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);

    httplib::Headers headers;
    if (!endpoint.auth_env.empty()) {
        const char* key = std::getenv(endpoint.auth_env.c_str());
        if (key == nullptr || *key == '\0')
            throw GatewayError("environment variable " + endpoint.auth_env + " is not set for endpoint '" +
                               endpoint.name + "'");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string path;
    json body;
    switch (request.kind) {
        case Capability::generate:
        case Capability::judge:
            path = url.path_prefix + "/chat/completions";
            body = {{"model", endpoint.model},
                    {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                    {"temperature", request.params.temperature},
                    {"max_tokens", request.params.max_output_tokens}};
            if (request.params.seed) body["seed"] = *request.params.seed;
            break;
        case Capability::embed:
            path = url.path_prefix + "/embeddings";
            body = {{"model", endpoint.model}, {"input", request.texts}};
            break;
        case Capability::rerank:
            path = url.path_prefix + "/rerank";
            body = {{"model", endpoint.model}, {"query", request.query}, {"documents", request.texts}};
            break;
    }

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("request to '" + endpoint.name + "' failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw TransportError("endpoint '" + endpoint.name + "' returned HTTP " + std::to_string(res->status));
    if (res->status >= 400)
        throw GatewayError("endpoint '" + endpoint.name + "' returned HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 500));

    BackendResponse out;
    try {
        const auto reply = json::parse(res->body);
        switch (request.kind) {
            case Capability::generate:
            case Capability::judge:
                out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
                if (reply.contains("usage")) {
                    out.input_tokens = reply["usage"].value("prompt_tokens", std::size_t{0});
                    out.output_tokens = reply["usage"].value("completion_tokens", std::size_t{0});
                }
                break;
            case Capability::embed: {
                const auto& data = reply.at("data");
                out.vectors.resize(data.size());
                for (const auto& item : data) {
                    const auto idx = item.value("index", std::size_t{0});
                    if (idx >= out.vectors.size()) throw GatewayError("embedding index out of range");
                    out.vectors[idx] = item.at("embedding").get<std::vector<double>>();
                }
                if (reply.contains("usage")) out.input_tokens = reply["usage"].value("prompt_tokens", std::size_t{0});
                break;
            }
            case Capability::rerank: {
                out.scores.assign(request.texts.size(), 0.0);
                std::size_t seen = 0;
                for (const auto& item : reply.at("results")) {
                    const auto idx = item.at("index").get<std::size_t>();
                    if (idx >= out.scores.size()) throw GatewayError("rerank index out of range");
                    out.scores[idx] = item.at("relevance_score").get<double>();
                    ++seen;
                }
                if (seen != request.texts.size())
                    throw GatewayError("rerank returned " + std::to_string(seen) + " results for " +
                                       std::to_string(request.texts.size()) + " documents");
                break;
            }
        }
    } catch (const json::exception& ex) {
        throw GatewayError("endpoint '" + endpoint.name + "' returned an unexpected body: " + ex.what());
    }
    return out;
}

std::shared_ptr<RoutingBackend> make_default_backend() {
    return std::make_shared<RoutingBackend>(std::make_shared<MockBackend>(), std::make_shared<HttpBackend>());
}

}  // namespace hayeval
