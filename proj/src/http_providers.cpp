#include "pairs/http_providers.hpp"

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pairs/errors.hpp"
#include "pairs/geometry.hpp"

namespace pairs {

namespace {

// Transport plumbing shared by the three provider kinds: auth header,
// bounded in-flight requests, retry with exponential backoff on transport
// errors and 5xx. 4xx responses fail immediately (retrying cannot help).
class HttpCore {
public:
    HttpCore(HttpProviderConfig config, const char* kind) : config_(std::move(config)) {
        if (config_.base_url.empty()) {
            throw ConfigError(std::string(kind) + " provider needs a base_url");
        }
        if (config_.max_attempts < 1) {
            throw ConfigError("max_attempts must be at least 1");
        }
        if (config_.max_in_flight < 1) {
            throw ConfigError("max_in_flight must be at least 1");
        }
        if (!config_.api_key_env.empty()) {
            const char* key = std::getenv(config_.api_key_env.c_str());
            if (key == nullptr || *key == '\0') {
                throw ConfigError("credential environment variable '" +
                                  config_.api_key_env + "' is not set");
            }
            api_key_ = key;
        }
        in_flight_ = std::make_unique<std::counting_semaphore<>>(
            static_cast<std::ptrdiff_t>(config_.max_in_flight));
    }

    const HttpProviderConfig& config() const noexcept { return config_; }

    nlohmann::json post_json(const std::string& path, const nlohmann::json& body) const {
        in_flight_->acquire();
        struct Release {
            std::counting_semaphore<>* sem;
            ~Release() { sem->release(); }
        } release{in_flight_.get()};

        const std::string endpoint = config_.base_url + path;
        const std::string payload = body.dump();
        std::string last_error;
        int last_status = 0;
        for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(100L << (attempt - 2)));
            }
            httplib::Client client(config_.base_url);
            client.set_connection_timeout(config_.connect_timeout_seconds, 0);
            client.set_read_timeout(config_.read_timeout_seconds, 0);
            httplib::Headers headers;
            if (!api_key_.empty()) {
                headers.emplace("Authorization", "Bearer " + api_key_);
            }
            const auto result = client.Post(path, headers, payload, "application/json");
            if (!result) {
                last_error = httplib::to_string(result.error());
                continue;
            }
            if (result->status >= 200 && result->status < 300) {
                try {
                    return nlohmann::json::parse(result->body);
                } catch (const nlohmann::json::exception& e) {
                    throw ProtocolError(std::string("response is not valid JSON: ") +
                                            e.what(),
                                        endpoint, result->status);
                }
            }
            last_status = result->status;
            if (result->status >= 500) {
                last_error = "status " + std::to_string(result->status);
                continue;
            }
            throw ProviderError("request failed with status " +
                                    std::to_string(result->status),
                                endpoint, result->status);
        }
        throw ProviderError("request failed after " + std::to_string(config_.max_attempts) +
                                " attempts (" + last_error + ")",
                            endpoint, last_status);
    }

private:
    HttpProviderConfig config_;
    std::string api_key_;
    std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpProviderConfig config)
        : core_(std::move(config), "embedder"),
          id_("http-embed:" + core_.config().model) {
        if (core_.config().dimension == 0) {
            throw ConfigError("http embedder needs a positive dimension");
        }
        if (core_.config().batch_size == 0) {
            throw ConfigError("batch_size must be at least 1");
        }
    }

    const std::string& id() const override { return id_; }
    std::size_t dimension() const override { return core_.config().dimension; }

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        const std::size_t batch = core_.config().batch_size;
        for (std::size_t start = 0; start < texts.size(); start += batch) {
            const auto count = std::min(batch, texts.size() - start);
            embed_batch(texts.subspan(start, count), out);
        }
        return out;
    }

private:
    void embed_batch(std::span<const std::string> texts,
                     std::vector<EmbeddingVector>& out) const {
        nlohmann::json body{{"model", core_.config().model},
                            {"input", nlohmann::json::array()}};
        for (const std::string& text : texts) {
            body["input"].push_back(text);
        }
        const auto response = core_.post_json("/v1/embeddings", body);
        if (!response.is_object() || !response.contains("data") ||
            !response["data"].is_array()) {
            throw ProtocolError("embeddings response has no 'data' array",
                                core_.config().base_url + "/v1/embeddings");
        }
        const auto& data = response["data"];
        if (data.size() != texts.size()) {
            throw ProtocolError("embeddings response has " + std::to_string(data.size()) +
                                    " rows for " + std::to_string(texts.size()) + " inputs",
                                core_.config().base_url + "/v1/embeddings");
        }
        for (const auto& row : data) {
            if (!row.is_object() || !row.contains("embedding") ||
                !row["embedding"].is_array()) {
                throw ProtocolError("embeddings row has no 'embedding' array",
                                    core_.config().base_url + "/v1/embeddings");
            }
            const auto& values = row["embedding"];
            if (values.size() != core_.config().dimension) {
                throw ProtocolError(
                    "embedding has dimension " + std::to_string(values.size()) +
                        ", expected " + std::to_string(core_.config().dimension),
                    core_.config().base_url + "/v1/embeddings");
            }
            std::vector<double> raw;
            raw.reserve(values.size());
            for (const auto& v : values) {
                if (!v.is_number()) {
                    throw ProtocolError("embedding contains a non-numeric entry",
                                        core_.config().base_url + "/v1/embeddings");
                }
                raw.push_back(v.get<double>());
            }
            try {
                out.push_back(normalize(std::span<const double>(raw)));
            } catch (const InvalidInputError& e) {
                throw ProtocolError(std::string("unusable embedding: ") + e.what(),
                                    core_.config().base_url + "/v1/embeddings");
            }
        }
    }

    HttpCore core_;
    std::string id_;
};

class HttpGenerator final : public Generator {
public:
    explicit HttpGenerator(HttpProviderConfig config)
        : core_(std::move(config), "generator"),
          id_("http-chat:" + core_.config().model) {}

    const std::string& id() const override { return id_; }

    std::string complete(const std::string& prompt) const override {
        const nlohmann::json body{
            {"model", core_.config().model},
            {"messages",
             nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", 0.0}};
        const auto response = core_.post_json("/v1/chat/completions", body);
        // choices[0].message.content, the chat-completions shape.
        if (response.is_object() && response.contains("choices") &&
            response["choices"].is_array() && !response["choices"].empty()) {
            const auto& choice = response["choices"][0];
            if (choice.is_object() && choice.contains("message") &&
                choice["message"].is_object() && choice["message"].contains("content") &&
                choice["message"]["content"].is_string()) {
                return choice["message"]["content"].get<std::string>();
            }
        }
        throw ProtocolError("completion response lacks choices[0].message.content",
                            core_.config().base_url + "/v1/chat/completions");
    }

private:
    HttpCore core_;
    std::string id_;
};

class HttpReranker final : public Reranker {
public:
    explicit HttpReranker(HttpProviderConfig config)
        : core_(std::move(config), "reranker"),
          id_("http-rerank:" + core_.config().model) {}

    const std::string& id() const override { return id_; }

    double score(const std::string& query, const std::string& document) const override {
        const std::vector<std::string> documents{document};
        return score_batch(query, documents).front();
    }

    std::vector<double> score_batch(const std::string& query,
                                    std::span<const std::string> documents) const override {
        nlohmann::json body{{"query", query}, {"documents", nlohmann::json::array()}};
        for (const std::string& document : documents) {
            body["documents"].push_back(document);
        }
        const auto response = core_.post_json("/rerank", body);
        if (!response.is_object() || !response.contains("scores") ||
            !response["scores"].is_array() ||
            response["scores"].size() != documents.size()) {
            throw ProtocolError("rerank response lacks a 'scores' array matching the input",
                                core_.config().base_url + "/rerank");
        }
        std::vector<double> scores;
        scores.reserve(documents.size());
        for (const auto& v : response["scores"]) {
            if (!v.is_number()) {
                throw ProtocolError("rerank score is not numeric",
                                    core_.config().base_url + "/rerank");
            }
            scores.push_back(v.get<double>());
        }
        return scores;
    }

private:
    HttpCore core_;
    std::string id_;
};

}  // namespace

std::shared_ptr<Embedder> http_embedder(const HttpProviderConfig& config) {
    return std::make_shared<HttpEmbedder>(config);
}

std::shared_ptr<Generator> http_generator(const HttpProviderConfig& config) {
    return std::make_shared<HttpGenerator>(config);
}

std::shared_ptr<Reranker> http_reranker(const HttpProviderConfig& config) {
    return std::make_shared<HttpReranker>(config);
}

}  // namespace pairs
