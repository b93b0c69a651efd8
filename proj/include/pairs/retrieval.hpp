#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pairs/geometry.hpp"
#include "pairs/index.hpp"
#include "pairs/providers.hpp"

namespace pairs {

/// A merged retrieval hit. s1 is the inner product with the query embedding
/// and s2 with the pseudo-context embedding; both are populated even when
/// the chunk was reached through only one path. score is written by the
/// scorer that last ranked the candidate.
struct Candidate {
    std::string chunk_id;
    std::string text;
    double s1 = 0.0;
    double s2 = 0.0;
    double score = 0.0;

    bool operator==(const Candidate&) const = default;
};

enum class Scorer {
    ais,       // s1*s2 - sqrt(1-s1^2)*sqrt(1-s2^2), higher is better
    additive,  // s1 + s2, higher is better
    dynamic,   // alpha-blended angle, lower is better
    rerank,    // reranker fusion; served by rerank_select, not select()
};

const char* scorer_name(Scorer scorer);
Scorer scorer_from_name(std::string_view name);  // throws ConfigError on unknown names

struct SelectionConfig {
    std::size_t n = 5;  // per-path retrieval depth
    std::size_t k = 3;  // documents kept after scoring
    Scorer scorer = Scorer::ais;
    std::optional<AlphaModel> alpha_model;  // required by the dynamic scorer
};

/// Throws ConfigError unless 1 <= k <= 2n.
void validate(const SelectionConfig& config);

/// Runs top-n probes with the query and pseudo-context embeddings and merges
/// the results into one deduplicated candidate set of size <= 2n, ordered by
/// ascending chunk id. A chunk found by only one probe gets the other
/// similarity computed from its stored embedding.
std::vector<Candidate> dual_path_retrieve(const VectorIndex& index,
                                          const EmbeddingVector& q_emb,
                                          const EmbeddingVector& p_emb, std::size_t n);

/// Scores every candidate with config.scorer and keeps the best k, ties
/// broken by ascending chunk id, result ordered best-first. The embeddings
/// are only consulted by the dynamic scorer, which derives one alpha from
/// the query/pseudo-context angle and applies it to all candidates. Passing
/// Scorer::rerank here is a ConfigError; an empty candidate set is not.
std::vector<Candidate> select(std::vector<Candidate> candidates,
                              const SelectionConfig& config, const EmbeddingVector& q_emb,
                              const EmbeddingVector& p_emb);

/// Reranker fusion: score(d) = K(d, q_text) + K(d, p_text) with the scores
/// taken verbatim from the reranker. Ranking rules match select().
std::vector<Candidate> rerank_select(const std::string& q_text, const std::string& p_text,
                                     std::vector<Candidate> candidates,
                                     const Reranker& reranker, std::size_t k);

}  // namespace pairs
