#include "pairs/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <initializer_list>

#include <json.hpp>

#include "pairs/errors.hpp"
#include "pairs/http_providers.hpp"

namespace pairs {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& message) { throw ConfigError(message); }

void check_keys(const json& object, const char* where,
                std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            bad("unknown key '" + key + "' in " + where);
        }
    }
}

std::string require_string(const json& object, const char* key, const char* where) {
    if (!object.contains(key) || !object[key].is_string()) {
        bad(std::string(where) + " needs a string '" + key + "'");
    }
    return object[key].get<std::string>();
}

std::size_t get_size(const json& value, const char* what) {
    if (!value.is_number_unsigned()) {
        bad(std::string(what) + " must be a nonnegative integer");
    }
    return value.get<std::size_t>();
}

double get_number(const json& value, const char* what) {
    if (!value.is_number()) {
        bad(std::string(what) + " must be a number");
    }
    return value.get<double>();
}

std::uint64_t parse_u64(std::string_view text, const char* what) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        bad(std::string(what) + " must be an unsigned integer, got '" + std::string(text) +
            "'");
    }
    return out;
}

HttpProviderConfig http_config_from_json(const json& spec, const char* where) {
    check_keys(spec, where,
               {"kind", "base_url", "model", "api_key_env", "dimension", "batch_size",
                "max_attempts", "connect_timeout_seconds", "read_timeout_seconds",
                "max_in_flight"});
    HttpProviderConfig config;
    config.base_url = require_string(spec, "base_url", where);
    if (spec.contains("model")) config.model = require_string(spec, "model", where);
    if (spec.contains("api_key_env")) {
        config.api_key_env = require_string(spec, "api_key_env", where);
    }
    if (spec.contains("dimension")) {
        config.dimension = get_size(spec["dimension"], "dimension");
    }
    if (spec.contains("batch_size")) {
        config.batch_size = get_size(spec["batch_size"], "batch_size");
    }
    if (spec.contains("max_attempts")) {
        config.max_attempts = static_cast<int>(get_size(spec["max_attempts"], "max_attempts"));
    }
    if (spec.contains("connect_timeout_seconds")) {
        config.connect_timeout_seconds =
            static_cast<int>(get_size(spec["connect_timeout_seconds"],
                                      "connect_timeout_seconds"));
    }
    if (spec.contains("read_timeout_seconds")) {
        config.read_timeout_seconds =
            static_cast<int>(get_size(spec["read_timeout_seconds"],
                                      "read_timeout_seconds"));
    }
    if (spec.contains("max_in_flight")) {
        config.max_in_flight = get_size(spec["max_in_flight"], "max_in_flight");
    }
    return config;
}

std::vector<GeneratorRule> rules_from_json(const json& array, const std::string& where) {
    if (!array.is_array()) {
        bad(where + " must be an array of {match, completion} objects");
    }
    std::vector<GeneratorRule> rules;
    rules.reserve(array.size());
    for (const auto& entry : array) {
        if (!entry.is_object() || !entry.contains("match") || !entry["match"].is_string() ||
            !entry.contains("completion") || !entry["completion"].is_string()) {
            bad(where + " entries need string 'match' and 'completion'");
        }
        rules.push_back(GeneratorRule{entry["match"].get<std::string>(),
                                      entry["completion"].get<std::string>()});
    }
    return rules;
}

std::shared_ptr<Embedder> embedder_from_json(const json& spec,
                                             const std::filesystem::path& base_dir) {
    (void)base_dir;
    const std::string kind = require_string(spec, "kind", "providers.embedder");
    if (kind == "hash" || kind == "token-hash") {
        check_keys(spec, "providers.embedder", {"kind", "dimension", "seed"});
        if (!spec.contains("dimension") || !spec.contains("seed")) {
            bad("mock embedders need 'dimension' and 'seed'");
        }
        const auto dimension = get_size(spec["dimension"], "dimension");
        const auto seed = static_cast<std::uint64_t>(get_size(spec["seed"], "seed"));
        return kind == "hash" ? hash_embedder(dimension, seed)
                              : token_hash_embedder(dimension, seed);
    }
    if (kind == "http") {
        return http_embedder(http_config_from_json(spec, "providers.embedder"));
    }
    bad("unknown embedder kind '" + kind + "' (expected hash, token-hash, or http)");
}

std::shared_ptr<Generator> generator_from_json(const json& spec,
                                               const std::filesystem::path& base_dir) {
    const std::string kind = require_string(spec, "kind", "providers.generator");
    if (kind == "table") {
        check_keys(spec, "providers.generator", {"kind", "rules", "rules_path", "fallback"});
        std::vector<GeneratorRule> rules;
        if (spec.contains("rules") && spec.contains("rules_path")) {
            bad("providers.generator: give either 'rules' or 'rules_path', not both");
        }
        if (spec.contains("rules")) {
            rules = rules_from_json(spec["rules"], "providers.generator.rules");
        } else if (spec.contains("rules_path")) {
            const std::filesystem::path path =
                base_dir / require_string(spec, "rules_path", "providers.generator");
            std::ifstream in(path, std::ios::binary);
            if (!in) {
                bad("cannot open generator rules file '" + path.string() + "'");
            }
            json parsed;
            try {
                in >> parsed;
            } catch (const json::exception& e) {
                bad("generator rules file '" + path.string() + "': " + e.what());
            }
            rules = rules_from_json(parsed, "generator rules file");
        } else {
            bad("table generator needs 'rules' or 'rules_path'");
        }
        std::string fallback;
        if (spec.contains("fallback")) {
            fallback = require_string(spec, "fallback", "providers.generator");
        }
        return table_generator(std::move(rules), std::move(fallback));
    }
    if (kind == "http") {
        return http_generator(http_config_from_json(spec, "providers.generator"));
    }
    bad("unknown generator kind '" + kind + "' (expected table or http)");
}

std::shared_ptr<Reranker> reranker_from_json(const json& spec) {
    const std::string kind = require_string(spec, "kind", "providers.reranker");
    if (kind == "token-overlap") {
        check_keys(spec, "providers.reranker", {"kind"});
        return token_overlap_reranker();
    }
    if (kind == "http") {
        return http_reranker(http_config_from_json(spec, "providers.reranker"));
    }
    bad("unknown reranker kind '" + kind + "' (expected token-overlap or http)");
}

AgreementMode agreement_mode_from_name(std::string_view name) {
    if (name == "normalized_exact") return AgreementMode::normalized_exact;
    if (name == "token_f1_threshold") return AgreementMode::token_f1_threshold;
    throw ConfigError("unknown agreement mode '" + std::string(name) +
                      "' (expected normalized_exact or token_f1_threshold)");
}

}  // namespace

std::shared_ptr<Embedder> embedder_from_spec(const std::string& spec) {
    const auto first = spec.find(':');
    const auto second = first == std::string::npos ? std::string::npos
                                                   : spec.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos) {
        bad("embedder spec must look like hash:<dim>:<seed> or token:<dim>:<seed>, got '" +
            spec + "'");
    }
    const std::string kind = spec.substr(0, first);
    const auto dimension = static_cast<std::size_t>(
        parse_u64(std::string_view(spec).substr(first + 1, second - first - 1),
                  "embedder dimension"));
    const auto seed = parse_u64(std::string_view(spec).substr(second + 1), "embedder seed");
    if (kind == "hash") {
        return hash_embedder(dimension, seed);
    }
    if (kind == "token") {
        return token_hash_embedder(dimension, seed);
    }
    bad("unknown embedder spec kind '" + kind + "' (expected hash or token)");
}

EngineSetup load_engine_setup(const std::optional<std::filesystem::path>& config_path,
                              const ConfigOverrides& overrides) {
    EngineSetup setup;
    std::optional<std::filesystem::path> templates_dir;

    if (config_path) {
        std::ifstream in(*config_path, std::ios::binary);
        if (!in) {
            bad("cannot open config file '" + config_path->string() + "'");
        }
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            bad("config file '" + config_path->string() + "': " + e.what());
        }
        if (!doc.is_object()) {
            bad("config file '" + config_path->string() + "' must hold a JSON object");
        }
        check_keys(doc, "config",
                   {"mode", "n", "k", "scorer", "agreement", "exclude_num", "parallelism",
                    "alpha", "templates_dir", "providers"});
        const std::filesystem::path base_dir = config_path->parent_path();

        if (doc.contains("mode")) {
            setup.pipeline.mode = mode_from_name(require_string(doc, "mode", "config"));
        }
        if (doc.contains("n")) setup.pipeline.selection.n = get_size(doc["n"], "n");
        if (doc.contains("k")) setup.pipeline.selection.k = get_size(doc["k"], "k");
        if (doc.contains("scorer")) {
            setup.pipeline.selection.scorer =
                scorer_from_name(require_string(doc, "scorer", "config"));
        }
        if (doc.contains("agreement")) {
            const auto& agreement = doc["agreement"];
            check_keys(agreement, "agreement", {"mode", "threshold"});
            if (agreement.contains("mode")) {
                setup.pipeline.agreement.mode = agreement_mode_from_name(
                    require_string(agreement, "mode", "agreement"));
            }
            if (agreement.contains("threshold")) {
                setup.pipeline.agreement.threshold =
                    get_number(agreement["threshold"], "agreement.threshold");
            }
        }
        if (doc.contains("exclude_num")) {
            if (!doc["exclude_num"].is_boolean()) {
                bad("exclude_num must be a boolean");
            }
            setup.pipeline.exclude_num = doc["exclude_num"].get<bool>();
        }
        if (doc.contains("parallelism")) {
            setup.pipeline.parallelism = get_size(doc["parallelism"], "parallelism");
        }
        if (doc.contains("alpha")) {
            const auto& alpha = doc["alpha"];
            check_keys(alpha, "alpha", {"slope", "intercept"});
            if (!alpha.contains("slope") || !alpha.contains("intercept")) {
                bad("alpha needs 'slope' and 'intercept'");
            }
            setup.pipeline.selection.alpha_model =
                AlphaModel{get_number(alpha["slope"], "alpha.slope"),
                           get_number(alpha["intercept"], "alpha.intercept")};
        }
        if (doc.contains("templates_dir")) {
            templates_dir = base_dir / require_string(doc, "templates_dir", "config");
        }
        if (doc.contains("providers")) {
            const auto& providers = doc["providers"];
            check_keys(providers, "providers", {"embedder", "generator", "reranker"});
            if (providers.contains("embedder")) {
                setup.providers.embedder = embedder_from_json(providers["embedder"],
                                                              base_dir);
            }
            if (providers.contains("generator")) {
                setup.providers.generator = generator_from_json(providers["generator"],
                                                                base_dir);
            }
            if (providers.contains("reranker")) {
                setup.providers.reranker = reranker_from_json(providers["reranker"]);
            }
        }
    }

    if (overrides.mode) setup.pipeline.mode = mode_from_name(*overrides.mode);
    if (overrides.n) setup.pipeline.selection.n = *overrides.n;
    if (overrides.k) setup.pipeline.selection.k = *overrides.k;
    if (overrides.scorer) {
        setup.pipeline.selection.scorer = scorer_from_name(*overrides.scorer);
    }
    if (overrides.agreement_mode) {
        setup.pipeline.agreement.mode = agreement_mode_from_name(*overrides.agreement_mode);
    }
    if (overrides.agreement_threshold) {
        setup.pipeline.agreement.threshold = *overrides.agreement_threshold;
    }
    if (overrides.exclude_num) setup.pipeline.exclude_num = *overrides.exclude_num;
    if (overrides.parallelism) setup.pipeline.parallelism = *overrides.parallelism;
    if (overrides.alpha_slope || overrides.alpha_intercept) {
        AlphaModel model = setup.pipeline.selection.alpha_model.value_or(AlphaModel{});
        if (overrides.alpha_slope) model.slope = *overrides.alpha_slope;
        if (overrides.alpha_intercept) model.intercept = *overrides.alpha_intercept;
        setup.pipeline.selection.alpha_model = model;
    }
    if (overrides.templates_dir) templates_dir = *overrides.templates_dir;
    if (overrides.embedder_spec) {
        setup.providers.embedder = embedder_from_spec(*overrides.embedder_spec);
    }

    if (templates_dir) {
        try {
            setup.pipeline.templates = load_templates(*templates_dir);
        } catch (const FormatError& e) {
            bad(e.what());
        }
    }
    return setup;
}

}  // namespace pairs
