#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hayeval/text.hpp"

namespace hayeval {

enum class Capability { generate, embed, rerank, judge };

std::string_view to_string(Capability c);
Capability parse_capability(std::string_view s);

struct Endpoint {
    std::string name;
    Capability capability = Capability::generate;
    std::string base_url;  // http(s)://... or mock://<behaviour>
    std::string auth_env;  // environment variable holding the API key; credentials never live in files
    std::string model;
    double price_per_1k_input = 0.0;
    double price_per_1k_output = 0.0;
    std::size_t max_context_tokens = 128000;
    int max_in_flight = 4;
};

/// Named endpoints loaded from a registry file.
class EndpointRegistry {
public:
    EndpointRegistry() = default;
    explicit EndpointRegistry(std::vector<Endpoint> endpoints);

    static EndpointRegistry from_json(const nlohmann::json& j);
    static EndpointRegistry load(const std::filesystem::path& path);

    void add(Endpoint e);
    const Endpoint& get(std::string_view name) const;
    bool contains(std::string_view name) const;
    const std::vector<Endpoint>& endpoints() const { return endpoints_; }

private:
    std::vector<Endpoint> endpoints_;
};

struct UsageRecord {
    std::string endpoint;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    double cost = 0.0;
    bool cache_hit = false;
    std::int64_t latency_ms = 0;
};

nlohmann::json to_json(const UsageRecord& u);

/// Uncached price of a request.
double request_cost(const Endpoint& e, std::size_t input_tokens, std::size_t output_tokens);

struct GenerateParams {
    double temperature = 0.0;
    int max_output_tokens = 1024;
    std::optional<std::uint64_t> seed;
};

/// Wire-level request handed to a backend.
struct BackendRequest {
    Capability kind = Capability::generate;
    std::string prompt;
    GenerateParams params;
    std::vector<std::string> texts;  // embed / rerank
    std::string query;               // rerank
};

struct BackendResponse {
    std::string text;
    std::vector<std::vector<double>> vectors;
    std::vector<double> scores;
    std::optional<std::size_t> input_tokens;  // provider-declared counts, when reported
    std::optional<std::size_t> output_tokens;
};

/// Something that can execute a request against an endpoint. Must be safe
/// for concurrent calls. Throw TransportError for retryable failures and
/// GatewayError for everything else.
class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendResponse call(const Endpoint& endpoint, const BackendRequest& request) = 0;
};

/// Backend wrapping a callable; the usual way to script a mock in tests.
class FunctionBackend : public Backend {
public:
    using Fn = std::function<BackendResponse(const Endpoint&, const BackendRequest&)>;
    explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
    BackendResponse call(const Endpoint& endpoint, const BackendRequest& request) override {
        return fn_(endpoint, request);
    }

private:
    Fn fn_;
};

/// Built-in offline behaviours selected by mock://<name> URLs:
///   mock://echo-hash       generate: "echo:" + first 16 hex of sha256(prompt)
///   mock://hash-embed      embed: 64-dim hashed bag of content tokens, unit norm
///   mock://overlap-rerank  rerank: fraction of query content tokens present in text
/// Anything else under mock:// is routed to handlers registered with on().
class MockBackend : public Backend {
public:
    BackendResponse call(const Endpoint& endpoint, const BackendRequest& request) override;
    void on(std::string url, FunctionBackend::Fn fn);

private:
    std::mutex mu_;
    std::map<std::string, FunctionBackend::Fn> handlers_;
};

/// Dispatches mock:// URLs to a MockBackend and http(s):// to the HTTP backend.
class RoutingBackend : public Backend {
public:
    RoutingBackend(std::shared_ptr<MockBackend> mock, std::shared_ptr<Backend> http);
    BackendResponse call(const Endpoint& endpoint, const BackendRequest& request) override;
    MockBackend& mock() { return *mock_; }

private:
    std::shared_ptr<MockBackend> mock_;
    std::shared_ptr<Backend> http_;
};

/// Default backend: built-in mocks plus the OpenAI/Cohere-compatible HTTP client.
std::shared_ptr<RoutingBackend> make_default_backend();

struct GatewayOptions {
    bool cache_enabled = true;
    std::optional<std::filesystem::path> cache_dir;  // content-addressed on-disk cache
    int max_attempts = 3;
    std::chrono::milliseconds base_backoff{200};
    TokenCounter counter = TokenCounter::words_four_thirds();
};

struct GenerateResult {
    std::string text;
    UsageRecord usage;
};

struct EmbedResult {
    std::vector<std::vector<double>> vectors;
    UsageRecord usage;
};

struct RerankResult {
    std::vector<double> scores;
    UsageRecord usage;
};

struct UsageTotals {
    std::size_t requests = 0;
    std::size_t cache_hits = 0;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    double cost = 0.0;
};

nlohmann::json to_json(const UsageTotals& t);

/// Provider-agnostic access point with caching, retry, per-endpoint
/// in-flight limits and cost accounting. Safe for concurrent callers;
/// concurrent identical cacheable requests are collapsed into one call.
class Gateway {
public:
    Gateway(EndpointRegistry registry, std::shared_ptr<Backend> backend, GatewayOptions options = {});
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    GenerateResult generate(std::string_view endpoint, std::string_view prompt, const GenerateParams& params = {});
    EmbedResult embed(std::string_view endpoint, const std::vector<std::string>& texts);
    RerankResult rerank(std::string_view endpoint, std::string_view query, const std::vector<std::string>& texts);

    const EndpointRegistry& registry() const { return registry_; }
    const TokenCounter& counter() const { return options_.counter; }

    UsageTotals totals() const;
    std::vector<UsageRecord> usage_log() const;
    /// Highest number of simultaneous backend calls observed for an endpoint.
    int max_observed_in_flight(std::string_view endpoint) const;

    /// Cache key for a request: sha256 over endpoint, capability and the
    /// canonical request payload.
    static std::string cache_key(const Endpoint& e, const BackendRequest& request);
    static bool cacheable(const BackendRequest& request);

private:
    struct Slot;
    struct Outcome;

    Outcome execute(const Endpoint& e, const BackendRequest& request);
    BackendResponse call_with_retry(const Endpoint& e, const BackendRequest& request, Slot& slot);
    void record(const UsageRecord& u);
    Slot& slot_for(const std::string& name);

    std::optional<nlohmann::json> disk_lookup(const std::string& key) const;
    void disk_store(const std::string& key, const nlohmann::json& payload) const;

    EndpointRegistry registry_;
    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;

    mutable std::mutex mu_;
    std::map<std::string, std::unique_ptr<Slot>> slots_;
    std::map<std::string, nlohmann::json> memory_cache_;
    std::map<std::string, std::shared_future<nlohmann::json>> pending_;
    std::vector<UsageRecord> log_;
};

}  // namespace hayeval
