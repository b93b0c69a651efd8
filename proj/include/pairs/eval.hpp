#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pairs/geometry.hpp"
#include "pairs/index.hpp"
#include "pairs/pipeline.hpp"
#include "pairs/prompts.hpp"
#include "pairs/providers.hpp"

namespace pairs {

/// One labeled question: gold answers plus, for angle analysis, the ids of
/// the chunks known to contain the answer.
struct QARecord {
    std::string id;
    std::string question;
    std::vector<std::string> answers;
    std::vector<std::string> gt_chunk_ids;
};

/// Lowercase, strip punctuation, drop the articles "a"/"an"/"the" as whole
/// tokens, collapse whitespace. Idempotent.
std::string normalize_answer(const std::string& s);

/// Token-level F1 between two strings after normalization. Multiset token
/// overlap; 1 when both token lists are empty, 0 when exactly one is.
double token_f1(const std::string& a, const std::string& b);

/// 1 iff the normalized prediction equals some normalized gold.
/// golds must be non-empty.
int exact_match(const std::string& pred, std::span<const std::string> golds);

/// Maximum token_f1 over the golds. golds must be non-empty.
double f1_score(const std::string& pred, std::span<const std::string> golds);

struct PerQueryRow {
    std::string id;
    int em = 0;
    double f1 = 0.0;
    bool retrieval_activated = false;
};

struct RunAggregate {
    double em_mean = 0.0;
    double f1_mean = 0.0;
    double ra_ratio = 0.0;
};

struct RunReport {
    std::vector<PerQueryRow> per_query;  // sorted by id
    RunAggregate aggregate;
};

/// Scores a batch of results against the dataset. Alignment is positional
/// and each result must answer the question of its dataset record; any
/// mismatch is an InvalidInputError naming the offending record.
RunReport evaluate_run(std::span<const QARecord> dataset,
                       std::span<const QueryResult> results);

/// "EM=0.950 F1=0.972 RA=0.750"
std::string summary_line(const RunAggregate& aggregate);

/// One theta sample that could not be produced, with the reason.
struct AngleIssue {
    std::string query_id;
    std::string chunk_id;  // empty when the problem is the record itself
    std::string reason;
};

struct AngleAnalysis {
    std::vector<AngleSample> samples;
    std::vector<AngleIssue> issues;
};

/// For every (query, gt chunk) pair: generate a pseudo-context, embed, and
/// measure theta0 (query vs pseudo-context), theta1 (query vs chunk),
/// theta2 (pseudo-context vs chunk) plus alpha = theta2/(theta1+theta2).
/// Missing chunks and degenerate geometry go to `issues`; the run continues.
AngleAnalysis analyze_angles(std::span<const QARecord> dataset, const VectorIndex& index,
                             const Generator& generator, const Embedder& embedder,
                             const PromptTemplates& templates);

/// JSON-lines: {"id", "question", "answers": [...], "gt_chunk_ids": [...]?}.
/// Duplicate ids, empty answers, and malformed lines are FormatErrors with
/// the line number.
std::vector<QARecord> read_qa_dataset(const std::filesystem::path& path);

/// Writes results.jsonl (one row per query, sorted by id) and summary.json
/// into out_dir. Unless deterministic is set, the summary carries a
/// generated_at timestamp.
void write_run_report(const RunReport& report, const std::filesystem::path& out_dir,
                      bool deterministic);

/// CSV with header theta0,theta1,theta2,alpha; one sample per row, printed
/// with enough digits to round-trip.
void write_angle_csv(std::span<const AngleSample> samples,
                     const std::filesystem::path& path);
std::vector<AngleSample> read_angle_csv(const std::filesystem::path& path);

}  // namespace pairs
