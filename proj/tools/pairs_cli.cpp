// Command-line front end: ingest corpora, answer single questions, evaluate
// batches, and run the angle-measurement/regression workflow.
//
// Exit codes: 0 success, 1 data or processing failure, 2 usage or
// configuration failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairs/config.hpp"
#include "pairs/errors.hpp"
#include "pairs/eval.hpp"
#include "pairs/geometry.hpp"
#include "pairs/index.hpp"
#include "pairs/pipeline.hpp"
#include "pairs/retrieval.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

void require_readable(const std::filesystem::path& path, const char* what) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec) || ec) {
        throw pairs::ConfigError(std::string(what) + " '" + path.string() +
                                 "' does not exist");
    }
}

struct CommonFlags {
    std::optional<std::filesystem::path> config_path;
    pairs::ConfigOverrides overrides;

    // CLI11 stores into these; unset markers are sentinel values translated
    // in collect().
    std::string mode;
    std::string scorer;
    std::string agreement;
    std::string embedder_spec;
    std::string templates_dir;
    std::string config_file;
    std::int64_t n = -1;
    std::int64_t k = -1;
    std::int64_t parallelism = -1;
    double threshold = -1.0;
    double alpha_slope = std::numeric_limits<double>::quiet_NaN();
    double alpha_intercept = std::numeric_limits<double>::quiet_NaN();
    bool exclude_num = false;
    bool no_exclude_num = false;

    void add_to(CLI::App& cmd, bool with_pipeline_flags) {
        cmd.add_option("--config", config_file, "JSON config file");
        cmd.add_option("--embedder", embedder_spec,
                       "mock embedder spec hash:<dim>:<seed> or token:<dim>:<seed>");
        if (!with_pipeline_flags) {
            return;
        }
        cmd.add_option("--mode", mode, "pipeline mode")
            ->check(CLI::IsMember({"no-retrieval", "standard", "pairs", "dpr-ais",
                                   "dpr-ais-dynamic", "dpr-ais-rerank"}));
        cmd.add_option("--n", n, "per-path retrieval depth")->check(CLI::NonNegativeNumber);
        cmd.add_option("--k", k, "documents kept for the answer prompt")
            ->check(CLI::NonNegativeNumber);
        cmd.add_option("--scorer", scorer, "selection scorer")
            ->check(CLI::IsMember({"ais", "additive", "dynamic", "rerank"}));
        cmd.add_option("--agreement", agreement, "gate agreement policy")
            ->check(CLI::IsMember({"normalized_exact", "token_f1_threshold"}));
        cmd.add_option("--threshold", threshold, "token F1 agreement threshold");
        cmd.add_flag("--exclude-num", exclude_num,
                     "force retrieval when an agreed direct answer contains digits");
        cmd.add_flag("--no-exclude-num", no_exclude_num, "turn the digit guard off");
        cmd.add_option("--alpha-slope", alpha_slope, "dynamic scorer alpha slope");
        cmd.add_option("--alpha-intercept", alpha_intercept,
                       "dynamic scorer alpha intercept");
        cmd.add_option("--templates", templates_dir, "prompt template directory");
        cmd.add_option("--parallelism", parallelism, "worker cap for batch evaluation")
            ->check(CLI::PositiveNumber);
    }

    void collect() {
        if (!config_file.empty()) {
            config_path = config_file;
            require_readable(*config_path, "config file");
        }
        if (!mode.empty()) overrides.mode = mode;
        if (!scorer.empty()) overrides.scorer = scorer;
        if (!agreement.empty()) overrides.agreement_mode = agreement;
        if (!embedder_spec.empty()) overrides.embedder_spec = embedder_spec;
        if (!templates_dir.empty()) overrides.templates_dir = templates_dir;
        if (n >= 0) overrides.n = static_cast<std::size_t>(n);
        if (k >= 0) overrides.k = static_cast<std::size_t>(k);
        if (parallelism > 0) overrides.parallelism = static_cast<std::size_t>(parallelism);
        if (threshold >= 0.0) overrides.agreement_threshold = threshold;
        if (!std::isnan(alpha_slope)) overrides.alpha_slope = alpha_slope;
        if (!std::isnan(alpha_intercept)) overrides.alpha_intercept = alpha_intercept;
        if (exclude_num) overrides.exclude_num = true;
        if (no_exclude_num) overrides.exclude_num = false;
    }
};

pairs::ChunkingPolicy parse_chunking(const std::string& text) {
    if (text.empty() || text == "passthrough") {
        return {};
    }
    if (text.rfind("window:", 0) == 0) {
        pairs::ChunkingPolicy policy;
        policy.kind = pairs::ChunkingPolicy::Kind::fixed_window;
        const std::string rest = text.substr(7);
        const auto colon = rest.find(':');
        try {
            policy.window_words = std::stoul(rest.substr(0, colon));
            policy.overlap_words =
                colon == std::string::npos ? 0 : std::stoul(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw pairs::ConfigError("bad chunking spec '" + text + "'");
        }
        return policy;
    }
    throw pairs::ConfigError("chunking must be 'passthrough' or 'window:<words>[:overlap]'");
}

int cmd_ingest(const std::string& corpus, const std::string& index_path,
               CommonFlags& flags, const std::string& chunking) {
    flags.collect();
    require_readable(corpus, "corpus file");
    const auto setup = pairs::load_engine_setup(flags.config_path, flags.overrides);
    if (!setup.providers.embedder) {
        throw pairs::ConfigError("no embedder configured; pass --embedder or a config file");
    }
    const auto chunks = pairs::read_corpus_jsonl(corpus);
    const auto index = pairs::VectorIndex::ingest(chunks, *setup.providers.embedder,
                                                  parse_chunking(chunking));
    index.save(index_path);
    std::cout << "ingested " << index.size() << " chunks (dimension " << index.dimension()
              << ") to " << index_path << "\n";
    return kExitOk;
}

int cmd_query(const std::string& index_path, const std::string& question,
              CommonFlags& flags) {
    flags.collect();
    require_readable(index_path, "index directory");
    const auto setup = pairs::load_engine_setup(flags.config_path, flags.overrides);
    const auto index = pairs::VectorIndex::load(index_path);
    const auto result = pairs::run_query(question, index, setup.providers, setup.pipeline);
    std::cout << pairs::to_json_string(result) << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& index_path, const std::string& dataset_path,
             const std::string& out_dir, CommonFlags& flags, bool deterministic) {
    flags.collect();
    require_readable(index_path, "index directory");
    require_readable(dataset_path, "dataset file");
    const auto setup = pairs::load_engine_setup(flags.config_path, flags.overrides);
    const auto index = pairs::VectorIndex::load(index_path);
    const auto dataset = pairs::read_qa_dataset(dataset_path);
    if (dataset.empty()) {
        throw pairs::FormatError("dataset '" + dataset_path + "' has no records");
    }

    std::vector<std::string> questions;
    questions.reserve(dataset.size());
    for (const auto& record : dataset) {
        questions.push_back(record.question);
    }
    const auto results = pairs::run_batch(questions, index, setup.providers,
                                          setup.pipeline);
    const auto report = pairs::evaluate_run(dataset, results);
    if (!out_dir.empty()) {
        pairs::write_run_report(report, out_dir, deterministic);
        std::cerr << "wrote " << report.per_query.size() << " rows to " << out_dir << "\n";
    }
    std::cout << pairs::summary_line(report.aggregate) << "\n";
    return kExitOk;
}

int cmd_analyze_angles(const std::string& index_path, const std::string& dataset_path,
                       const std::string& out_csv, CommonFlags& flags) {
    flags.collect();
    require_readable(index_path, "index directory");
    require_readable(dataset_path, "dataset file");
    const auto setup = pairs::load_engine_setup(flags.config_path, flags.overrides);
    if (!setup.providers.embedder || !setup.providers.generator) {
        throw pairs::ConfigError("angle analysis needs an embedder and a generator");
    }
    const auto index = pairs::VectorIndex::load(index_path);
    const auto dataset = pairs::read_qa_dataset(dataset_path);
    const auto analysis = pairs::analyze_angles(dataset, index, *setup.providers.generator,
                                                *setup.providers.embedder,
                                                setup.pipeline.templates);
    for (const auto& issue : analysis.issues) {
        std::cerr << "skipped " << issue.query_id;
        if (!issue.chunk_id.empty()) {
            std::cerr << "/" << issue.chunk_id;
        }
        std::cerr << ": " << issue.reason << "\n";
    }
    if (analysis.samples.empty()) {
        throw pairs::InvalidInputError("no usable angle samples in '" + dataset_path + "'");
    }
    if (out_csv.empty()) {
        std::cout << "theta0,theta1,theta2,alpha\n";
        char buffer[128];
        for (const auto& sample : analysis.samples) {
            std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,%.17g,%.17g\n", sample.theta0,
                          sample.theta1, sample.theta2, sample.alpha);
            std::cout << buffer;
        }
    } else {
        pairs::write_angle_csv(analysis.samples, out_csv);
        std::cerr << "wrote " << analysis.samples.size() << " samples to " << out_csv
                  << "\n";
    }
    return kExitOk;
}

int cmd_fit_alpha(const std::string& angles_csv, const std::string& out_json) {
    require_readable(angles_csv, "angle CSV");
    const auto samples = pairs::read_angle_csv(angles_csv);
    const auto model = pairs::fit_alpha_model(samples);
    const double r2 = pairs::r_squared(samples, model);
    const nlohmann::json j{{"slope", model.slope},
                           {"intercept", model.intercept},
                           {"r2", r2},
                           {"n", samples.size()}};
    if (out_json.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_json, std::ios::binary);
        if (!out) {
            throw pairs::FormatError("cannot write '" + out_json + "'");
        }
        out << j.dump(2) << "\n";
        std::cerr << "wrote fit to " << out_json << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gated dual-path retrieval pipeline"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "embed a JSONL corpus into an index");
    std::string corpus, index_path, chunking;
    CommonFlags ingest_flags;
    ingest->add_option("--corpus", corpus, "corpus JSONL file")->required();
    ingest->add_option("--index", index_path, "output index directory")->required();
    ingest->add_option("--chunking", chunking,
                       "passthrough (default) or window:<words>[:overlap]");
    ingest_flags.add_to(*ingest, false);

    // query
    auto* query = app.add_subcommand("query", "answer one question, JSON on stdout");
    std::string q_index, question;
    CommonFlags query_flags;
    query->add_option("--index", q_index, "index directory")->required();
    query->add_option("--question", question, "question text")->required();
    query_flags.add_to(*query, true);

    // eval
    auto* eval = app.add_subcommand("eval", "run a dataset and score EM/F1/RA");
    std::string e_index, dataset, out_dir;
    bool deterministic = false;
    CommonFlags eval_flags;
    eval->add_option("--index", e_index, "index directory")->required();
    eval->add_option("--dataset", dataset, "QA dataset JSONL")->required();
    eval->add_option("--out", out_dir, "directory for results.jsonl and summary.json");
    eval->add_flag("--deterministic", deterministic,
                   "omit the timestamp so outputs are byte-stable");
    eval_flags.add_to(*eval, true);

    // analyze-angles
    auto* analyze = app.add_subcommand("analyze-angles",
                                       "measure theta0/theta1/theta2/alpha per gt chunk");
    std::string a_index, a_dataset, out_csv;
    CommonFlags analyze_flags;
    analyze->add_option("--index", a_index, "index directory")->required();
    analyze->add_option("--dataset", a_dataset, "QA dataset JSONL with gt_chunk_ids")
        ->required();
    analyze->add_option("--out", out_csv, "output CSV (stdout when omitted)");
    analyze_flags.add_to(*analyze, true);

    // fit-alpha
    auto* fit = app.add_subcommand("fit-alpha", "least-squares alpha-vs-theta0 fit");
    std::string angles_csv, out_json;
    fit->add_option("--angles", angles_csv, "angle CSV from analyze-angles")->required();
    fit->add_option("--out", out_json, "output JSON (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(corpus, index_path, ingest_flags, chunking);
        if (query->parsed()) return cmd_query(q_index, question, query_flags);
        if (eval->parsed()) {
            return cmd_eval(e_index, dataset, out_dir, eval_flags, deterministic);
        }
        if (analyze->parsed()) {
            return cmd_analyze_angles(a_index, a_dataset, out_csv, analyze_flags);
        }
        if (fit->parsed()) return cmd_fit_alpha(angles_csv, out_json);
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const pairs::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const pairs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
