#include "pairs/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pairs/errors.hpp"

namespace pairs {

namespace {

// Same input contract as ais_score: reject beyond 1e-9 outside [-1, 1],
// clamp the rest, then take the arccos.
double angle_from_similarity(double s) {
    constexpr double kSlack = 1e-9;
    if (!std::isfinite(s) || s < -1.0 - kSlack || s > 1.0 + kSlack) {
        throw InvalidInputError("similarity outside [-1, 1]");
    }
    return std::acos(std::clamp(s, -1.0, 1.0));
}

void sort_best_first(std::vector<Candidate>& candidates, bool ascending, std::size_t k) {
    std::sort(candidates.begin(), candidates.end(),
              [ascending](const Candidate& a, const Candidate& b) {
                  if (a.score != b.score) {
                      return ascending ? a.score < b.score : a.score > b.score;
                  }
                  return a.chunk_id < b.chunk_id;
              });
    if (candidates.size() > k) {
        candidates.resize(k);
    }
}

}  // namespace

const char* scorer_name(Scorer scorer) {
    switch (scorer) {
        case Scorer::ais:
            return "ais";
        case Scorer::additive:
            return "additive";
        case Scorer::dynamic:
            return "dynamic";
        case Scorer::rerank:
            return "rerank";
    }
    throw InvalidInputError("unknown scorer value");
}

Scorer scorer_from_name(std::string_view name) {
    if (name == "ais") return Scorer::ais;
    if (name == "additive") return Scorer::additive;
    if (name == "dynamic") return Scorer::dynamic;
    if (name == "rerank") return Scorer::rerank;
    throw ConfigError("unknown scorer '" + std::string(name) +
                      "' (expected ais, additive, dynamic, or rerank)");
}

void validate(const SelectionConfig& config) {
    if (config.n == 0) {
        throw ConfigError("retrieval depth n must be at least 1");
    }
    if (config.k == 0 || config.k > 2 * config.n) {
        throw ConfigError("selection size k must satisfy 1 <= k <= 2n (k=" +
                          std::to_string(config.k) + ", n=" + std::to_string(config.n) + ")");
    }
}

std::vector<Candidate> dual_path_retrieve(const VectorIndex& index,
                                          const EmbeddingVector& q_emb,
                                          const EmbeddingVector& p_emb, std::size_t n) {
    if (n == 0) {
        throw InvalidInputError("retrieval depth n must be at least 1");
    }
    const auto q_hits = index.top_n(q_emb, n);
    const auto p_hits = index.top_n(p_emb, n);

    // Keyed map both deduplicates and fixes the output order (ascending id).
    std::map<std::string, Candidate> merged;
    for (const ScoredHit& hit : q_hits) {
        merged.emplace(hit.chunk_id, Candidate{hit.chunk_id, "", hit.similarity, 0.0, 0.0});
    }
    for (const ScoredHit& hit : p_hits) {
        auto [it, inserted] =
            merged.emplace(hit.chunk_id, Candidate{hit.chunk_id, "", 0.0, hit.similarity, 0.0});
        if (!inserted) {
            it->second.s2 = hit.similarity;
        }
    }

    std::vector<Candidate> out;
    out.reserve(merged.size());
    const auto q_values = q_emb.values();
    const auto p_values = p_emb.values();
    for (auto& [id, candidate] : merged) {
        const auto position = index.position_of(id);
        // top_n only returns stored ids, so the lookup cannot miss.
        const auto row = index.embedding_row(*position);
        candidate.text = index.chunk_at(*position).text;
        const bool from_q = std::any_of(q_hits.begin(), q_hits.end(),
                                        [&](const ScoredHit& h) { return h.chunk_id == id; });
        const bool from_p = std::any_of(p_hits.begin(), p_hits.end(),
                                        [&](const ScoredHit& h) { return h.chunk_id == id; });
        if (!from_q) {
            candidate.s1 = inner_product(row, q_values);
        }
        if (!from_p) {
            candidate.s2 = inner_product(row, p_values);
        }
        out.push_back(std::move(candidate));
    }
    return out;
}

std::vector<Candidate> select(std::vector<Candidate> candidates,
                              const SelectionConfig& config, const EmbeddingVector& q_emb,
                              const EmbeddingVector& p_emb) {
    validate(config);
    if (config.scorer == Scorer::rerank) {
        throw ConfigError("the rerank scorer needs a reranker provider; use rerank_select");
    }
    if (candidates.empty()) {
        return {};
    }

    bool ascending = false;
    switch (config.scorer) {
        case Scorer::ais:
            for (Candidate& c : candidates) {
                c.score = ais_score(c.s1, c.s2);
            }
            break;
        case Scorer::additive:
            for (Candidate& c : candidates) {
                c.score = additive_score(c.s1, c.s2);
            }
            break;
        case Scorer::dynamic: {
            if (!config.alpha_model) {
                throw ConfigError("the dynamic scorer requires an alpha model");
            }
            const double theta0 = angle(q_emb, p_emb);
            const double alpha = predict_alpha(theta0, *config.alpha_model);
            for (Candidate& c : candidates) {
                c.score = dynamic_angle(angle_from_similarity(c.s1),
                                        angle_from_similarity(c.s2), alpha);
            }
            ascending = true;
            break;
        }
        case Scorer::rerank:
            break;  // rejected above
    }
    sort_best_first(candidates, ascending, config.k);
    return candidates;
}

std::vector<Candidate> rerank_select(const std::string& q_text, const std::string& p_text,
                                     std::vector<Candidate> candidates,
                                     const Reranker& reranker, std::size_t k) {
    if (k == 0) {
        throw ConfigError("selection size k must be at least 1");
    }
    if (candidates.empty()) {
        return {};
    }
    std::vector<std::string> documents;
    documents.reserve(candidates.size());
    for (const Candidate& c : candidates) {
        documents.push_back(c.text);
    }
    const auto q_scores = reranker.score_batch(q_text, documents);
    const auto p_scores = reranker.score_batch(p_text, documents);
    if (q_scores.size() != documents.size() || p_scores.size() != documents.size()) {
        throw ProtocolError("reranker '" + reranker.id() +
                            "' returned the wrong number of scores");
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        candidates[i].score = q_scores[i] + p_scores[i];
    }
    sort_best_first(candidates, /*ascending=*/false, k);
    return candidates;
}

}  // namespace pairs
