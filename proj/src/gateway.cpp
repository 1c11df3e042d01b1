#include "hayeval/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <semaphore>
#include <thread>

#include "hayeval/errors.hpp"
#include "hayeval/haystack.hpp"

namespace hayeval {

using nlohmann::json;

std::string_view to_string(Capability c) {
    switch (c) {
        case Capability::generate: return "generate";
        case Capability::embed: return "embed";
        case Capability::rerank: return "rerank";
        case Capability::judge: return "judge";
    }
    return "generate";
}

Capability parse_capability(std::string_view s) {
    if (s == "generate") return Capability::generate;
    if (s == "embed") return Capability::embed;
    if (s == "rerank") return Capability::rerank;
    if (s == "judge") return Capability::judge;
    throw ConfigError("unknown endpoint capability '" + std::string(s) + "'");
}

EndpointRegistry::EndpointRegistry(std::vector<Endpoint> endpoints) {
    for (auto& e : endpoints) add(std::move(e));
}

void EndpointRegistry::add(Endpoint e) {
    if (e.name.empty()) throw ConfigError("endpoint name is empty");
    if (e.price_per_1k_input < 0 || e.price_per_1k_output < 0)
        throw ConfigError("endpoint '" + e.name + "' has a negative price");
    if (e.max_in_flight < 1) throw ConfigError("endpoint '" + e.name + "' needs max_in_flight >= 1");
    if (contains(e.name)) throw ConfigError("duplicate endpoint '" + e.name + "'");
    endpoints_.push_back(std::move(e));
}

const Endpoint& EndpointRegistry::get(std::string_view name) const {
    for (const auto& e : endpoints_)
        if (e.name == name) return e;
    throw ConfigError("unknown endpoint '" + std::string(name) + "'");
}

bool EndpointRegistry::contains(std::string_view name) const {
    return std::any_of(endpoints_.begin(), endpoints_.end(), [&](const Endpoint& e) { return e.name == name; });
}

EndpointRegistry EndpointRegistry::from_json(const json& j) {
    EndpointRegistry reg;
    try {
        for (const auto& item : j.at("endpoints")) {
            Endpoint e;
            e.name = item.at("name").get<std::string>();
            e.capability = parse_capability(item.at("capability").get<std::string>());
            e.base_url = item.at("base_url").get<std::string>();
            e.auth_env = item.value("auth_env", "");
            e.model = item.value("model", "");
            e.price_per_1k_input = item.value("price_per_1k_input", 0.0);
            e.price_per_1k_output = item.value("price_per_1k_output", 0.0);
            e.max_context_tokens = item.value("max_context_tokens", e.max_context_tokens);
            e.max_in_flight = item.value("max_in_flight", e.max_in_flight);
            reg.add(std::move(e));
        }
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("malformed endpoint registry: ") + ex.what());
    }
    return reg;
}

EndpointRegistry EndpointRegistry::load(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& ex) {
        throw ConfigError("endpoint registry " + path.string() + " is not valid JSON: " + ex.what());
    }
}

json to_json(const UsageRecord& u) {
    return json{{"endpoint", u.endpoint},         {"input_tokens", u.input_tokens},
                {"output_tokens", u.output_tokens}, {"cost", u.cost},
                {"cache_hit", u.cache_hit},         {"latency_ms", u.latency_ms}};
}

json to_json(const UsageTotals& t) {
    return json{{"requests", t.requests},         {"cache_hits", t.cache_hits}, {"input_tokens", t.input_tokens},
                {"output_tokens", t.output_tokens}, {"cost", t.cost}};
}

double request_cost(const Endpoint& e, std::size_t input_tokens, std::size_t output_tokens) {
    return static_cast<double>(input_tokens) / 1000.0 * e.price_per_1k_input +
           static_cast<double>(output_tokens) / 1000.0 * e.price_per_1k_output;
}

// ---------------------------------------------------------------------------
// Mock backend

namespace {

std::vector<double> hashed_bag_of_words(std::string_view text) {
    constexpr std::size_t kDim = 64;
    std::vector<double> v(kDim, 0.0);
    for (const auto& tok : content_tokens(text)) {
        const auto h = sha256_hex(tok);
        const auto bucket = std::stoul(h.substr(0, 8), nullptr, 16) % kDim;
        v[bucket] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0)
        for (double& x : v) x /= std::sqrt(norm);
    return v;
}

}  // namespace

void MockBackend::on(std::string url, FunctionBackend::Fn fn) {
    std::lock_guard lock(mu_);
    handlers_[std::move(url)] = std::move(fn);
}

BackendResponse MockBackend::call(const Endpoint& endpoint, const BackendRequest& request) {
    {
        std::unique_lock lock(mu_);
        auto it = handlers_.find(endpoint.base_url);
        if (it != handlers_.end()) {
            auto fn = it->second;
            lock.unlock();
            return fn(endpoint, request);
        }
    }
    BackendResponse r;
    if (endpoint.base_url == "mock://echo-hash") {
        r.text = "echo:" + sha256_hex(request.prompt).substr(0, 16);
        return r;
    }
    if (endpoint.base_url == "mock://hash-embed") {
        for (const auto& t : request.texts) r.vectors.push_back(hashed_bag_of_words(t));
        return r;
    }
    if (endpoint.base_url == "mock://overlap-rerank") {
        const auto q = content_tokens(request.query);
        if (q.empty()) throw GatewayError("rerank provider rejected an empty query");
        for (const auto& t : request.texts) {
            const auto d = content_tokens(t);
            std::size_t hit = 0;
            for (const auto& w : q) hit += d.contains(w) ? 1 : 0;
            r.scores.push_back(static_cast<double>(hit) / static_cast<double>(q.size()));
        }
        return r;
    }
    throw GatewayError("no mock behaviour registered for " + endpoint.base_url);
}

RoutingBackend::RoutingBackend(std::shared_ptr<MockBackend> mock, std::shared_ptr<Backend> http)
    : mock_(std::move(mock)), http_(std::move(http)) {}

BackendResponse RoutingBackend::call(const Endpoint& endpoint, const BackendRequest& request) {
    if (endpoint.base_url.starts_with("mock://")) return mock_->call(endpoint, request);
    if (endpoint.base_url.starts_with("http://") || endpoint.base_url.starts_with("https://")) {
        if (!http_) throw GatewayError("no HTTP backend configured");
        return http_->call(endpoint, request);
    }
    throw ConfigError("endpoint '" + endpoint.name + "' has unsupported url '" + endpoint.base_url + "'");
}

// ---------------------------------------------------------------------------
// Gateway

struct Gateway::Slot {
    explicit Slot(int max_in_flight) : sem(max_in_flight) {}
    std::counting_semaphore<1024> sem;
    std::atomic<int> in_flight{0};
    std::atomic<int> max_observed{0};
};

struct Gateway::Outcome {
    json payload;
    bool cache_hit = false;
};

Gateway::Gateway(EndpointRegistry registry, std::shared_ptr<Backend> backend, GatewayOptions options)
    : registry_(std::move(registry)), backend_(std::move(backend)), options_(std::move(options)) {
    if (!backend_) throw ConfigError("gateway needs a backend");
    if (options_.max_attempts < 1) throw ConfigError("gateway max_attempts must be >= 1");
    for (const auto& e : registry_.endpoints()) {
        if (e.max_in_flight > 1024) throw ConfigError("endpoint '" + e.name + "' max_in_flight above 1024");
        slots_.emplace(e.name, std::make_unique<Slot>(e.max_in_flight));
    }
}

Gateway::~Gateway() = default;

Gateway::Slot& Gateway::slot_for(const std::string& name) {
    std::lock_guard lock(mu_);
    return *slots_.at(name);
}

bool Gateway::cacheable(const BackendRequest& request) {
    if (request.kind != Capability::generate && request.kind != Capability::judge) return true;
    return request.params.temperature == 0.0 || request.params.seed.has_value();
}

std::string Gateway::cache_key(const Endpoint& e, const BackendRequest& request) {
    json payload{{"endpoint", e.name}, {"model", e.model}, {"capability", to_string(request.kind)}};
    switch (request.kind) {
        case Capability::generate:
        case Capability::judge:
            payload["prompt"] = request.prompt;
            payload["temperature"] = request.params.temperature;
            payload["max_output_tokens"] = request.params.max_output_tokens;
            payload["seed"] = request.params.seed ? json(*request.params.seed) : json(nullptr);
            break;
        case Capability::embed:
            payload["texts"] = request.texts;
            break;
        case Capability::rerank:
            payload["query"] = request.query;
            payload["texts"] = request.texts;
            break;
    }
    return sha256_hex(payload.dump());
}

std::optional<json> Gateway::disk_lookup(const std::string& key) const {
    if (!options_.cache_dir) return std::nullopt;
    const auto path = *options_.cache_dir / key.substr(0, 2) / (key + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        return json::parse(read_file(path));
    } catch (const std::exception&) {
        return std::nullopt;  // corrupt entry: treat as a miss and overwrite
    }
}

void Gateway::disk_store(const std::string& key, const json& payload) const {
    if (!options_.cache_dir) return;
    write_file_atomic(*options_.cache_dir / key.substr(0, 2) / (key + ".json"), payload.dump());
}

namespace {

json response_to_json(const BackendResponse& r) {
    json j{{"text", r.text}, {"vectors", r.vectors}, {"scores", r.scores}};
    j["input_tokens"] = r.input_tokens ? json(*r.input_tokens) : json(nullptr);
    j["output_tokens"] = r.output_tokens ? json(*r.output_tokens) : json(nullptr);
    return j;
}

void check_response(const Endpoint& e, const BackendRequest& request, const BackendResponse& r) {
    if (request.kind == Capability::embed) {
        if (r.vectors.size() != request.texts.size())
            throw GatewayError("endpoint '" + e.name + "' returned " + std::to_string(r.vectors.size()) +
                               " vectors for " + std::to_string(request.texts.size()) + " texts");
        for (const auto& v : r.vectors)
            if (v.size() != r.vectors.front().size() || v.empty())
                throw GatewayError("endpoint '" + e.name + "' returned vectors of mismatched dimension");
    } else if (request.kind == Capability::rerank) {
        if (r.scores.size() != request.texts.size())
            throw GatewayError("endpoint '" + e.name + "' returned " + std::to_string(r.scores.size()) +
                               " scores for " + std::to_string(request.texts.size()) + " texts");
        for (double s : r.scores)
            if (!std::isfinite(s)) throw GatewayError("endpoint '" + e.name + "' returned a non-finite score");
    }
}

}  // namespace

BackendResponse Gateway::call_with_retry(const Endpoint& e, const BackendRequest& request, Slot& slot) {
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        try {
            slot.sem.acquire();
            const int now = ++slot.in_flight;
            int seen = slot.max_observed.load();
            while (now > seen && !slot.max_observed.compare_exchange_weak(seen, now)) {
            }
            struct Release {
                Slot& s;
                ~Release() {
                    --s.in_flight;
                    s.sem.release();
                }
            } release{slot};
            auto response = backend_->call(e, request);
            check_response(e, request, response);
            return response;
        } catch (const TransportError& ex) {
            last_error = ex.what();
            if (attempt < options_.max_attempts)
                std::this_thread::sleep_for(options_.base_backoff * (1 << (attempt - 1)));
        }
    }
    throw GatewayError("endpoint '" + e.name + "' failed after " + std::to_string(options_.max_attempts) +
                       " attempts: " + last_error);
}

Gateway::Outcome Gateway::execute(const Endpoint& e, const BackendRequest& request) {
    Slot& slot = slot_for(e.name);
    if (!options_.cache_enabled || !cacheable(request)) return {response_to_json(call_with_retry(e, request, slot)), false};

    const auto key = cache_key(e, request);
    std::promise<json> promise;
    {
        std::unique_lock lock(mu_);
        if (auto it = memory_cache_.find(key); it != memory_cache_.end()) return {it->second, true};
        if (auto hit = disk_lookup(key)) {
            memory_cache_[key] = *hit;
            return {*hit, true};
        }
        if (auto it = pending_.find(key); it != pending_.end()) {
            auto fut = it->second;
            lock.unlock();
            return {fut.get(), true};
        }
        pending_[key] = promise.get_future().share();
    }
    try {
        auto payload = response_to_json(call_with_retry(e, request, slot));
        disk_store(key, payload);
        {
            std::lock_guard lock(mu_);
            memory_cache_[key] = payload;
            pending_.erase(key);
        }
        promise.set_value(payload);
        return {std::move(payload), false};
    } catch (...) {
        {
            std::lock_guard lock(mu_);
            pending_.erase(key);
        }
        promise.set_exception(std::current_exception());
        throw;
    }
}

void Gateway::record(const UsageRecord& u) {
    std::lock_guard lock(mu_);
    log_.push_back(u);
}

namespace {

std::size_t token_field(const json& payload, const char* name, std::size_t fallback) {
    const auto& v = payload.at(name);
    return v.is_null() ? fallback : v.get<std::size_t>();
}

}  // namespace

GenerateResult Gateway::generate(std::string_view endpoint, std::string_view prompt, const GenerateParams& params) {
    const Endpoint& e = registry_.get(endpoint);
    if (e.capability != Capability::generate && e.capability != Capability::judge)
        throw ConfigError("endpoint '" + e.name + "' cannot generate text");
    const std::size_t estimate = options_.counter(prompt);
    if (estimate > e.max_context_tokens)
        throw PreflightError("prompt of ~" + std::to_string(estimate) + " tokens exceeds '" + e.name + "' context of " +
                             std::to_string(e.max_context_tokens));

    BackendRequest request;
    request.kind = e.capability;
    request.prompt = std::string(prompt);
    request.params = params;

    const auto start = std::chrono::steady_clock::now();
    auto outcome = execute(e, request);
    GenerateResult result;
    result.text = outcome.payload.at("text").get<std::string>();
    result.usage.endpoint = e.name;
    result.usage.input_tokens = token_field(outcome.payload, "input_tokens", estimate);
    result.usage.output_tokens = token_field(outcome.payload, "output_tokens", options_.counter(result.text));
    result.usage.cache_hit = outcome.cache_hit;
    result.usage.cost = outcome.cache_hit ? 0.0 : request_cost(e, result.usage.input_tokens, result.usage.output_tokens);
    result.usage.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    record(result.usage);
    return result;
}

EmbedResult Gateway::embed(std::string_view endpoint, const std::vector<std::string>& texts) {
    const Endpoint& e = registry_.get(endpoint);
    if (e.capability != Capability::embed) throw ConfigError("endpoint '" + e.name + "' is not an embedder");
    if (texts.empty()) throw GatewayError("embed called with no texts");
    std::size_t estimate = 0;
    for (const auto& t : texts) {
        const auto n = options_.counter(t);
        if (n > e.max_context_tokens)
            throw PreflightError("text of ~" + std::to_string(n) + " tokens exceeds '" + e.name + "' context");
        estimate += n;
    }
    BackendRequest request;
    request.kind = Capability::embed;
    request.texts = texts;

    const auto start = std::chrono::steady_clock::now();
    auto outcome = execute(e, request);
    EmbedResult result;
    result.vectors = outcome.payload.at("vectors").get<std::vector<std::vector<double>>>();
    result.usage.endpoint = e.name;
    result.usage.input_tokens = token_field(outcome.payload, "input_tokens", estimate);
    result.usage.output_tokens = token_field(outcome.payload, "output_tokens", 0);
    result.usage.cache_hit = outcome.cache_hit;
    result.usage.cost = outcome.cache_hit ? 0.0 : request_cost(e, result.usage.input_tokens, result.usage.output_tokens);
    result.usage.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    record(result.usage);
    return result;
}

RerankResult Gateway::rerank(std::string_view endpoint, std::string_view query, const std::vector<std::string>& texts) {
    const Endpoint& e = registry_.get(endpoint);
    if (e.capability != Capability::rerank) throw ConfigError("endpoint '" + e.name + "' is not a reranker");
    if (texts.empty()) throw GatewayError("rerank called with no texts");
    std::size_t estimate = options_.counter(query);
    for (const auto& t : texts) estimate += options_.counter(t);

    BackendRequest request;
    request.kind = Capability::rerank;
    request.query = std::string(query);
    request.texts = texts;

    const auto start = std::chrono::steady_clock::now();
    auto outcome = execute(e, request);
    RerankResult result;
    result.scores = outcome.payload.at("scores").get<std::vector<double>>();
    result.usage.endpoint = e.name;
    result.usage.input_tokens = token_field(outcome.payload, "input_tokens", estimate);
    result.usage.output_tokens = token_field(outcome.payload, "output_tokens", 0);
    result.usage.cache_hit = outcome.cache_hit;
    result.usage.cost = outcome.cache_hit ? 0.0 : request_cost(e, result.usage.input_tokens, result.usage.output_tokens);
    result.usage.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    record(result.usage);
    return result;
}

UsageTotals Gateway::totals() const {
    std::lock_guard lock(mu_);
    UsageTotals t;
    for (const auto& u : log_) {
        ++t.requests;
        t.cache_hits += u.cache_hit ? 1 : 0;
        t.input_tokens += u.input_tokens;
        t.output_tokens += u.output_tokens;
        t.cost += u.cost;
    }
    return t;
}

std::vector<UsageRecord> Gateway::usage_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

int Gateway::max_observed_in_flight(std::string_view endpoint) const {
    std::lock_guard lock(mu_);
    auto it = slots_.find(std::string(endpoint));
    if (it == slots_.end()) throw ConfigError("unknown endpoint '" + std::string(endpoint) + "'");
    return it->second->max_observed.load();
}

}  // namespace hayeval
