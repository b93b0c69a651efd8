#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "pairs/providers.hpp"

namespace pairs {

/// Connection settings shared by the three remote provider kinds. The
/// credential is looked up from the environment variable named by
/// api_key_env when that is non-empty; the key itself never appears in
/// errors or logs.
struct HttpProviderConfig {
    std::string base_url;     // e.g. "http://127.0.0.1:8080"
    std::string model;        // provider-side model name; also used as the id
    std::string api_key_env;  // env var holding the bearer token; empty = none
    std::size_t dimension = 0;    // embedder only; must be set there
    std::size_t batch_size = 32;  // embedder only; texts per request
    int max_attempts = 3;         // total tries for transient failures
    int connect_timeout_seconds = 10;
    int read_timeout_seconds = 60;
    std::size_t max_in_flight = 8;  // concurrent requests per provider
};

/// POST {base}/v1/embeddings with {"model", "input": [...]}. Vectors are
/// re-normalized locally, so the provider need not return unit vectors.
std::shared_ptr<Embedder> http_embedder(const HttpProviderConfig& config);

/// POST {base}/v1/chat/completions with a single user message at
/// temperature 0.0; returns the first choice's content.
std::shared_ptr<Generator> http_generator(const HttpProviderConfig& config);

/// POST {base}/rerank with {"query", "documents": [...]} -> {"scores": [...]}.
/// Scores are passed through unscaled.
std::shared_ptr<Reranker> http_reranker(const HttpProviderConfig& config);

}  // namespace pairs
