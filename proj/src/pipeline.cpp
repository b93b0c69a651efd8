#include "pairs/pipeline.hpp"

#include <atomic>
#include <mutex>
#include <thread>
#include <utility>

#include <json.hpp>

#include "pairs/errors.hpp"
#include "pairs/eval.hpp"

namespace pairs {

namespace {

// Rethrows provider failures with the pipeline stage prepended, preserving
// the error type so callers can still distinguish protocol breakage from
// transport trouble.
template <typename F>
auto at_stage(const char* stage, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ProtocolError& e) {
        throw ProtocolError(std::string(stage) + ": " + e.what(), e.endpoint(), e.status());
    } catch (const ProviderError& e) {
        throw ProviderError(std::string(stage) + ": " + e.what(), e.endpoint(), e.status());
    }
}

void require_generator(const Providers& providers, Mode mode) {
    if (!providers.generator) {
        throw ConfigError(std::string("mode ") + mode_name(mode) + " needs a generator");
    }
}

void require_embedder(const Providers& providers, Mode mode) {
    if (!providers.embedder) {
        throw ConfigError(std::string("mode ") + mode_name(mode) + " needs an embedder");
    }
}

void check_embedder_matches_index(const Embedder& embedder, const VectorIndex& index) {
    if (embedder.dimension() != index.dimension()) {
        throw ConfigError("embedder dimension " + std::to_string(embedder.dimension()) +
                          " does not match index dimension " +
                          std::to_string(index.dimension()));
    }
    if (embedder.id() != index.embedder_id()) {
        throw ConfigError("index was built with embedder '" + index.embedder_id() +
                          "' but '" + embedder.id() + "' is configured");
    }
}

// The dedicated dynamic/rerank modes force their scorer; dpr_ais and the
// pairs fallback honor the configured one (ais unless overridden). The
// dynamic scorer gets the shipped alpha coefficients when none are set.
SelectionConfig effective_selection(const PipelineConfig& config) {
    SelectionConfig sel = config.selection;
    if (config.mode == Mode::dpr_ais_dynamic) {
        sel.scorer = Scorer::dynamic;
    } else if (config.mode == Mode::dpr_ais_rerank) {
        sel.scorer = Scorer::rerank;
    }
    if (sel.scorer == Scorer::dynamic && !sel.alpha_model) {
        sel.alpha_model = default_alpha_model();
    }
    return sel;
}

struct RetrievalPass {
    std::vector<Candidate> selected;
    std::string answer;
};

// Pseudo-context-driven retrieval and answering, shared by the dpr modes
// and the divergent branch of the gate. `pseudo` was generated by the
// caller so the gate can reuse one generation for both verification and
// retrieval.
RetrievalPass dual_path_pass(const std::string& question, const std::string& pseudo,
                             const VectorIndex& index, const Providers& providers,
                             const PipelineConfig& config, const SelectionConfig& sel) {
    if (index.size() == 0) {
        throw InvalidInputError("index has no entries");
    }
    const std::vector<std::string> texts{question, pseudo};
    const auto embedded = at_stage("query/pseudo-context embedding", [&] {
        return providers.embedder->embed(texts);
    });
    if (embedded.size() != 2) {
        throw ProtocolError("embedder '" + providers.embedder->id() +
                            "' returned the wrong number of vectors");
    }
    const EmbeddingVector& q_emb = embedded[0];
    const EmbeddingVector& p_emb = embedded[1];

    auto candidates = dual_path_retrieve(index, q_emb, p_emb, sel.n);
    std::vector<Candidate> selected;
    if (sel.scorer == Scorer::rerank) {
        if (!providers.reranker) {
            throw ConfigError("the rerank scorer needs a reranker provider");
        }
        selected = at_stage("reranking", [&] {
            return rerank_select(question, pseudo, std::move(candidates),
                                 *providers.reranker, sel.k);
        });
    } else {
        selected = select(std::move(candidates), sel, q_emb, p_emb);
    }

    RetrievalPass pass;
    pass.answer = at_stage("context answer generation", [&] {
        return answer_with_context(question, join_context(selected), *providers.generator,
                                   config.templates);
    });
    pass.selected = std::move(selected);
    return pass;
}

}  // namespace

bool answers_agree(const std::string& a1, const std::string& a2,
                   const AgreementPolicy& policy) {
    switch (policy.mode) {
        case AgreementMode::normalized_exact:
            return normalize_answer(a1) == normalize_answer(a2);
        case AgreementMode::token_f1_threshold:
            if (!(policy.threshold > 0.0) || policy.threshold > 1.0) {
                throw ConfigError("agreement threshold must lie in (0, 1]");
            }
            return token_f1(a1, a2) >= policy.threshold;
    }
    throw ConfigError("unknown agreement mode");
}

bool numeric_guard(const std::string& answer) {
    for (const char c : answer) {
        if (c >= '0' && c <= '9') {
            return true;
        }
    }
    return false;
}

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::no_retrieval:
            return "no-retrieval";
        case Mode::standard:
            return "standard";
        case Mode::pairs:
            return "pairs";
        case Mode::dpr_ais:
            return "dpr-ais";
        case Mode::dpr_ais_dynamic:
            return "dpr-ais-dynamic";
        case Mode::dpr_ais_rerank:
            return "dpr-ais-rerank";
    }
    throw InvalidInputError("unknown mode value");
}

Mode mode_from_name(std::string_view name) {
    if (name == "no-retrieval") return Mode::no_retrieval;
    if (name == "standard") return Mode::standard;
    if (name == "pairs") return Mode::pairs;
    if (name == "dpr-ais") return Mode::dpr_ais;
    if (name == "dpr-ais-dynamic") return Mode::dpr_ais_dynamic;
    if (name == "dpr-ais-rerank") return Mode::dpr_ais_rerank;
    throw ConfigError("unknown mode '" + std::string(name) +
                      "' (expected no-retrieval, standard, pairs, dpr-ais, dpr-ais-dynamic, "
                      "or dpr-ais-rerank)");
}

std::vector<std::string> QueryResult::selected_chunk_ids() const {
    std::vector<std::string> ids;
    ids.reserve(selected.size());
    for (const Candidate& c : selected) {
        ids.push_back(c.chunk_id);
    }
    return ids;
}

std::string to_json_string(const QueryResult& result, int indent) {
    nlohmann::json j;
    j["question"] = result.question;
    j["answer"] = result.answer;
    j["mode"] = mode_name(result.mode);
    j["retrieval_activated"] = result.retrieval_activated;
    j["selected_chunk_ids"] = result.selected_chunk_ids();
    auto& selected = j["selected"] = nlohmann::json::array();
    for (const Candidate& c : result.selected) {
        selected.push_back(nlohmann::json{
            {"chunk_id", c.chunk_id}, {"s1", c.s1}, {"s2", c.s2}, {"score", c.score}});
    }
    if (result.gate) {
        j["gate"] = nlohmann::json{{"direct_answer", result.gate->direct_answer},
                                   {"pseudo_context", result.gate->pseudo_context},
                                   {"context_answer", result.gate->context_answer},
                                   {"agreed", result.gate->agreed},
                                   {"numeric_guard_tripped", result.gate->numeric_guard_tripped}};
    } else {
        j["gate"] = nullptr;
    }
    return j.dump(indent);
}

std::string generate_pseudo_context(const std::string& question, const Generator& generator,
                                    const PromptTemplates& templates) {
    return generator.complete(render_question_prompt(templates.pseudo_context, question));
}

std::string answer_direct(const std::string& question, const Generator& generator,
                          const PromptTemplates& templates) {
    return generator.complete(render_question_prompt(templates.direct_answer, question));
}

std::string answer_with_context(const std::string& question, const std::string& context,
                                const Generator& generator,
                                const PromptTemplates& templates) {
    return generator.complete(
        render_context_prompt(templates.context_answer, question, context));
}

std::string join_context(std::span<const Candidate> selected) {
    std::string context;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        if (i > 0) {
            context += "\n\n";
        }
        context += selected[i].text;
    }
    return context;
}

QueryResult run_query(const std::string& question, const VectorIndex& index,
                      const Providers& providers, const PipelineConfig& config) {
    if (question.empty()) {
        throw InvalidInputError("question must be non-empty");
    }
    require_generator(providers, config.mode);
    const SelectionConfig sel = effective_selection(config);
    if (config.mode != Mode::no_retrieval) {
        validate(sel);
        require_embedder(providers, config.mode);
        check_embedder_matches_index(*providers.embedder, index);
    }

    QueryResult result;
    result.question = question;
    result.mode = config.mode;

    switch (config.mode) {
        case Mode::no_retrieval: {
            result.answer = at_stage("direct answer generation", [&] {
                return answer_direct(question, *providers.generator, config.templates);
            });
            result.retrieval_activated = false;
            return result;
        }
        case Mode::standard: {
            if (index.size() == 0) {
                throw InvalidInputError("index has no entries");
            }
            const auto q_emb = at_stage("query embedding", [&] {
                return providers.embedder->embed_one(question);
            });
            const auto hits = index.top_n(q_emb, sel.k);
            for (const ScoredHit& hit : hits) {
                const auto position = index.position_of(hit.chunk_id);
                result.selected.push_back(Candidate{hit.chunk_id,
                                                    index.chunk_at(*position).text,
                                                    hit.similarity, 0.0, hit.similarity});
            }
            result.answer = at_stage("context answer generation", [&] {
                return answer_with_context(question, join_context(result.selected),
                                           *providers.generator, config.templates);
            });
            result.retrieval_activated = true;
            return result;
        }
        case Mode::dpr_ais:
        case Mode::dpr_ais_dynamic:
        case Mode::dpr_ais_rerank: {
            const auto pseudo = at_stage("pseudo-context generation", [&] {
                return generate_pseudo_context(question, *providers.generator,
                                               config.templates);
            });
            auto pass = dual_path_pass(question, pseudo, index, providers, config, sel);
            result.answer = std::move(pass.answer);
            result.selected = std::move(pass.selected);
            result.retrieval_activated = true;
            return result;
        }
        case Mode::pairs: {
            const auto pseudo = at_stage("pseudo-context generation", [&] {
                return generate_pseudo_context(question, *providers.generator,
                                               config.templates);
            });
            const auto direct = at_stage("direct answer generation", [&] {
                return answer_direct(question, *providers.generator, config.templates);
            });
            const auto grounded = at_stage("pseudo-grounded answer generation", [&] {
                return answer_with_context(question, pseudo, *providers.generator,
                                           config.templates);
            });
            GateOutcome gate;
            gate.direct_answer = direct;
            gate.pseudo_context = pseudo;
            gate.context_answer = grounded;
            gate.agreed = answers_agree(direct, grounded, config.agreement);
            gate.numeric_guard_tripped =
                config.exclude_num && gate.agreed && numeric_guard(direct);

            if (gate.agreed && !gate.numeric_guard_tripped) {
                result.answer = direct;
                result.retrieval_activated = false;
                result.gate = std::move(gate);
                return result;
            }
            auto pass = dual_path_pass(question, pseudo, index, providers, config, sel);
            result.answer = std::move(pass.answer);
            result.selected = std::move(pass.selected);
            result.retrieval_activated = true;
            result.gate = std::move(gate);
            return result;
        }
    }
    throw ConfigError("unknown mode value");
}

std::vector<QueryResult> run_batch(std::span<const std::string> questions,
                                   const VectorIndex& index, const Providers& providers,
                                   const PipelineConfig& config) {
    if (config.parallelism == 0) {
        throw ConfigError("parallelism must be at least 1");
    }
    std::vector<std::optional<QueryResult>> slots(questions.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_at = questions.size();

    auto work = [&]() noexcept {
        while (true) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= questions.size()) {
                return;
            }
            try {
                slots[i] = run_query(questions[i], index, providers, config);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                // Keep the failure with the lowest input position so the
                // reported error does not depend on thread scheduling.
                if (i < first_error_at) {
                    first_error_at = i;
                    first_error = std::current_exception();
                }
            }
        }
    };

    const std::size_t worker_count = std::min(config.parallelism, questions.size());
    if (worker_count <= 1) {
        work();
    } else {
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) {
            workers.emplace_back(work);
        }
        for (std::thread& worker : workers) {
            worker.join();
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    std::vector<QueryResult> results;
    results.reserve(slots.size());
    for (auto& slot : slots) {
        results.push_back(std::move(*slot));
    }
    return results;
}

}  // namespace pairs
