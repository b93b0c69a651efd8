#include "pairs/eval.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "pairs/errors.hpp"

namespace pairs {

namespace {

std::vector<std::string> whitespace_tokens(const std::string& s) {
    std::vector<std::string> tokens;
    std::istringstream stream(s);
    std::string token;
    while (stream >> token) {
        tokens.push_back(token);
    }
    return tokens;
}

std::size_t multiset_overlap(const std::vector<std::string>& a,
                             const std::vector<std::string>& b) {
    std::map<std::string, std::size_t> counts;
    for (const std::string& token : a) {
        ++counts[token];
    }
    std::size_t overlap = 0;
    for (const std::string& token : b) {
        auto it = counts.find(token);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    return overlap;
}

void require_golds(std::span<const std::string> golds) {
    if (golds.empty()) {
        throw InvalidInputError("at least one gold answer is required");
    }
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&seconds, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

QARecord qa_record_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        !j.contains("question") || !j["question"].is_string() || !j.contains("answers") ||
        !j["answers"].is_array()) {
        throw FormatError(
            "record must be an object with string 'id', string 'question', and array "
            "'answers'");
    }
    QARecord record;
    record.id = j["id"].get<std::string>();
    record.question = j["question"].get<std::string>();
    if (record.id.empty()) {
        throw FormatError("record id must be non-empty");
    }
    if (record.question.empty()) {
        throw FormatError("record '" + record.id + "' has an empty question");
    }
    for (const auto& answer : j["answers"]) {
        if (!answer.is_string()) {
            throw FormatError("record '" + record.id + "' has a non-string gold answer");
        }
        record.answers.push_back(answer.get<std::string>());
    }
    if (record.answers.empty()) {
        throw FormatError("record '" + record.id + "' has no gold answers");
    }
    if (j.contains("gt_chunk_ids")) {
        if (!j["gt_chunk_ids"].is_array()) {
            throw FormatError("record '" + record.id + "': gt_chunk_ids must be an array");
        }
        for (const auto& chunk_id : j["gt_chunk_ids"]) {
            if (!chunk_id.is_string()) {
                throw FormatError("record '" + record.id +
                                  "' has a non-string gt chunk id");
            }
            record.gt_chunk_ids.push_back(chunk_id.get<std::string>());
        }
    }
    return record;
}

}  // namespace

std::string normalize_answer(const std::string& s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (const char c : s) {
        const auto uc = static_cast<unsigned char>(c);
        if (uc >= 0x80) {
            // Non-ASCII bytes pass through; only ASCII punctuation is removed.
            cleaned.push_back(c);
        } else if (std::isalnum(uc)) {
            cleaned.push_back(static_cast<char>(std::tolower(uc)));
        } else if (std::isspace(uc)) {
            cleaned.push_back(' ');
        }
    }
    std::string out;
    out.reserve(cleaned.size());
    for (const std::string& token : whitespace_tokens(cleaned)) {
        if (token == "a" || token == "an" || token == "the") {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += token;
    }
    return out;
}

double token_f1(const std::string& a, const std::string& b) {
    const auto a_tokens = whitespace_tokens(normalize_answer(a));
    const auto b_tokens = whitespace_tokens(normalize_answer(b));
    if (a_tokens.empty() && b_tokens.empty()) {
        return 1.0;
    }
    if (a_tokens.empty() || b_tokens.empty()) {
        return 0.0;
    }
    const auto overlap = static_cast<double>(multiset_overlap(a_tokens, b_tokens));
    if (overlap == 0.0) {
        return 0.0;
    }
    const double precision = overlap / static_cast<double>(a_tokens.size());
    const double recall = overlap / static_cast<double>(b_tokens.size());
    return 2.0 * precision * recall / (precision + recall);
}

int exact_match(const std::string& pred, std::span<const std::string> golds) {
    require_golds(golds);
    const std::string normalized = normalize_answer(pred);
    for (const std::string& gold : golds) {
        if (normalized == normalize_answer(gold)) {
            return 1;
        }
    }
    return 0;
}

double f1_score(const std::string& pred, std::span<const std::string> golds) {
    require_golds(golds);
    double best = 0.0;
    for (const std::string& gold : golds) {
        best = std::max(best, token_f1(pred, gold));
    }
    return best;
}

RunReport evaluate_run(std::span<const QARecord> dataset,
                       std::span<const QueryResult> results) {
    if (dataset.empty()) {
        throw InvalidInputError("dataset is empty");
    }
    if (results.size() != dataset.size()) {
        throw InvalidInputError("got " + std::to_string(results.size()) + " results for " +
                                std::to_string(dataset.size()) + " dataset records");
    }
    std::unordered_set<std::string_view> seen_ids;
    for (const QARecord& record : dataset) {
        if (!seen_ids.insert(record.id).second) {
            throw InvalidInputError("duplicate dataset id '" + record.id + "'");
        }
    }

    RunReport report;
    report.per_query.reserve(dataset.size());
    double em_sum = 0.0;
    double f1_sum = 0.0;
    std::size_t activated = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const QARecord& record = dataset[i];
        const QueryResult& result = results[i];
        if (result.question != record.question) {
            throw InvalidInputError("result " + std::to_string(i) +
                                    " does not answer dataset record '" + record.id + "'");
        }
        PerQueryRow row;
        row.id = record.id;
        row.em = exact_match(result.answer, record.answers);
        row.f1 = f1_score(result.answer, record.answers);
        row.retrieval_activated = result.retrieval_activated;
        em_sum += row.em;
        f1_sum += row.f1;
        activated += result.retrieval_activated ? 1 : 0;
        report.per_query.push_back(std::move(row));
    }
    std::sort(report.per_query.begin(), report.per_query.end(),
              [](const PerQueryRow& a, const PerQueryRow& b) { return a.id < b.id; });

    const auto total = static_cast<double>(dataset.size());
    report.aggregate.em_mean = em_sum / total;
    report.aggregate.f1_mean = f1_sum / total;
    report.aggregate.ra_ratio = static_cast<double>(activated) / total;
    return report;
}

std::string summary_line(const RunAggregate& aggregate) {
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "EM=%.3f F1=%.3f RA=%.3f", aggregate.em_mean,
                  aggregate.f1_mean, aggregate.ra_ratio);
    return buffer;
}

AngleAnalysis analyze_angles(std::span<const QARecord> dataset, const VectorIndex& index,
                             const Generator& generator, const Embedder& embedder,
                             const PromptTemplates& templates) {
    if (embedder.dimension() != index.dimension()) {
        throw ConfigError("embedder dimension " + std::to_string(embedder.dimension()) +
                          " does not match index dimension " +
                          std::to_string(index.dimension()));
    }
    AngleAnalysis analysis;
    for (const QARecord& record : dataset) {
        if (record.gt_chunk_ids.empty()) {
            analysis.issues.push_back({record.id, "", "record lists no gt chunk ids"});
            continue;
        }
        const std::string pseudo = generate_pseudo_context(record.question, generator,
                                                           templates);
        const std::vector<std::string> texts{record.question, pseudo};
        const auto embedded = embedder.embed(texts);
        if (embedded.size() != 2) {
            throw ProtocolError("embedder '" + embedder.id() +
                                "' returned the wrong number of vectors");
        }
        const EmbeddingVector& q_emb = embedded[0];
        const EmbeddingVector& p_emb = embedded[1];
        const double theta0 = angle(q_emb, p_emb);
        for (const std::string& chunk_id : record.gt_chunk_ids) {
            const auto position = index.position_of(chunk_id);
            if (!position) {
                analysis.issues.push_back({record.id, chunk_id, "chunk not in index"});
                continue;
            }
            const auto row = index.embedding_row(*position);
            const auto d_emb =
                EmbeddingVector::from_unit(std::vector<float>(row.begin(), row.end()));
            const double theta1 = angle(q_emb, d_emb);
            const double theta2 = angle(p_emb, d_emb);
            if (theta1 + theta2 <= 0.0) {
                analysis.issues.push_back(
                    {record.id, chunk_id, "degenerate geometry: theta1 + theta2 = 0"});
                continue;
            }
            analysis.samples.push_back(
                {theta0, theta1, theta2, alpha_from_angles(theta1, theta2)});
        }
    }
    return analysis;
}

std::vector<QARecord> read_qa_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open dataset '" + path.string() + "'");
    }
    std::vector<QARecord> records;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            records.push_back(qa_record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " +
                              e.what());
        } catch (const FormatError& e) {
            throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " +
                              e.what());
        }
        if (!seen_ids.insert(records.back().id).second) {
            throw FormatError(path.string() + " line " + std::to_string(line_no) +
                              ": duplicate id '" + records.back().id + "'");
        }
    }
    return records;
}

void write_run_report(const RunReport& report, const std::filesystem::path& out_dir,
                      bool deterministic) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw FormatError("cannot create output directory '" + out_dir.string() +
                          "': " + ec.message());
    }
    {
        std::ofstream out(out_dir / "results.jsonl", std::ios::binary);
        if (!out) {
            throw FormatError("cannot write results.jsonl in '" + out_dir.string() + "'");
        }
        for (const PerQueryRow& row : report.per_query) {
            const nlohmann::json j{{"id", row.id},
                                   {"em", row.em},
                                   {"f1", row.f1},
                                   {"retrieval_activated", row.retrieval_activated}};
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(out_dir / "summary.json", std::ios::binary);
        if (!out) {
            throw FormatError("cannot write summary.json in '" + out_dir.string() + "'");
        }
        nlohmann::json j{{"em_mean", report.aggregate.em_mean},
                         {"f1_mean", report.aggregate.f1_mean},
                         {"ra_ratio", report.aggregate.ra_ratio},
                         {"query_count", report.per_query.size()}};
        if (!deterministic) {
            j["generated_at"] = utc_timestamp();
        }
        out << j.dump(2) << '\n';
    }
}

void write_angle_csv(std::span<const AngleSample> samples,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write angle CSV '" + path.string() + "'");
    }
    out << "theta0,theta1,theta2,alpha\n";
    char buffer[128];
    for (const AngleSample& sample : samples) {
        std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,%.17g,%.17g\n", sample.theta0,
                      sample.theta1, sample.theta2, sample.alpha);
        out << buffer;
    }
}

std::vector<AngleSample> read_angle_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open angle CSV '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || line != "theta0,theta1,theta2,alpha") {
        throw FormatError(path.string() + ": expected header theta0,theta1,theta2,alpha");
    }
    std::vector<AngleSample> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        double values[4];
        const char* cursor = line.c_str();
        for (int i = 0; i < 4; ++i) {
            char* end = nullptr;
            values[i] = std::strtod(cursor, &end);
            if (end == cursor || !std::isfinite(values[i])) {
                throw FormatError(path.string() + " line " + std::to_string(line_no) +
                                  ": malformed number");
            }
            cursor = end;
            if (i < 3) {
                if (*cursor != ',') {
                    throw FormatError(path.string() + " line " + std::to_string(line_no) +
                                      ": expected 4 comma-separated values");
                }
                ++cursor;
            }
        }
        if (*cursor != '\0' && *cursor != '\r') {
            throw FormatError(path.string() + " line " + std::to_string(line_no) +
                              ": trailing characters");
        }
        samples.push_back({values[0], values[1], values[2], values[3]});
    }
    return samples;
}

}  // namespace pairs
