#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairs/index.hpp"
#include "pairs/prompts.hpp"
#include "pairs/providers.hpp"
#include "pairs/retrieval.hpp"

namespace pairs {

enum class AgreementMode { normalized_exact, token_f1_threshold };

/// How the two gate answers are compared. normalized_exact compares the
/// normalized strings; token_f1_threshold accepts token-level F1 >= threshold
/// (threshold must lie in (0, 1]).
struct AgreementPolicy {
    AgreementMode mode = AgreementMode::normalized_exact;
    double threshold = 1.0;
};

bool answers_agree(const std::string& a1, const std::string& a2,
                   const AgreementPolicy& policy);

/// True iff the answer contains an ASCII decimal digit. Number words and
/// Roman numerals do not count.
bool numeric_guard(const std::string& answer);

/// Record of one dual-generation round: the memory-only answer, the
/// generated pseudo-context, the answer grounded in that pseudo-context,
/// and the resulting verdicts.
struct GateOutcome {
    std::string direct_answer;
    std::string pseudo_context;
    std::string context_answer;
    bool agreed = false;
    // Set when agreeing answers were forced into retrieval because the
    // direct answer contains digits (only possible with exclude_num on).
    bool numeric_guard_tripped = false;

    bool operator==(const GateOutcome&) const = default;
};

enum class Mode {
    no_retrieval,
    standard,
    pairs,
    dpr_ais,
    dpr_ais_dynamic,
    dpr_ais_rerank,
};

const char* mode_name(Mode mode);            // hyphenated, e.g. "dpr-ais"
Mode mode_from_name(std::string_view name);  // throws ConfigError on unknown names

struct Providers {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<Generator> generator;
    std::shared_ptr<Reranker> reranker;
};

struct PipelineConfig {
    Mode mode = Mode::pairs;
    SelectionConfig selection;
    AgreementPolicy agreement;
    bool exclude_num = false;
    PromptTemplates templates = default_templates();
    std::size_t parallelism = 8;  // worker cap for run_batch
};

/// One answered question. gate is present only when the dual-generation
/// check actually ran (pairs mode); selected holds the context documents in
/// rank order, so selected_chunk_ids() is empty whenever retrieval_activated
/// is false.
struct QueryResult {
    std::string question;
    std::string answer;
    bool retrieval_activated = false;
    std::vector<Candidate> selected;
    std::optional<GateOutcome> gate;
    Mode mode = Mode::pairs;

    std::vector<std::string> selected_chunk_ids() const;
};

/// Single JSON object (alphabetical keys, no trailing newline) for CLI and
/// log output.
std::string to_json_string(const QueryResult& result, int indent = -1);

std::string generate_pseudo_context(const std::string& question, const Generator& generator,
                                    const PromptTemplates& templates);
std::string answer_direct(const std::string& question, const Generator& generator,
                          const PromptTemplates& templates);
std::string answer_with_context(const std::string& question, const std::string& context,
                                const Generator& generator,
                                const PromptTemplates& templates);

/// Joins candidate texts in rank order, separated by blank lines.
std::string join_context(std::span<const Candidate> selected);

/// Answers one question according to config.mode. The scorer is implied by
/// the mode (standard probes with the query only; the dpr modes run
/// dual-path retrieval; pairs gates first and falls back to the dpr_ais
/// flow). Provider failures are rethrown with the pipeline stage named.
QueryResult run_query(const std::string& question, const VectorIndex& index,
                      const Providers& providers, const PipelineConfig& config);

/// run_query over a batch with at most config.parallelism worker threads.
/// Results are in input order; the first failure is rethrown after all
/// workers stop.
std::vector<QueryResult> run_batch(std::span<const std::string> questions,
                                   const VectorIndex& index, const Providers& providers,
                                   const PipelineConfig& config);

}  // namespace pairs
