#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pairs/pipeline.hpp"

namespace pairs {

/// Flag-level overrides applied on top of a JSON config document. Anything
/// left unset keeps the config file's value (or the built-in default).
struct ConfigOverrides {
    std::optional<std::string> mode;
    std::optional<std::size_t> n;
    std::optional<std::size_t> k;
    std::optional<std::string> scorer;
    std::optional<std::string> agreement_mode;
    std::optional<double> agreement_threshold;
    std::optional<bool> exclude_num;
    std::optional<std::size_t> parallelism;
    std::optional<double> alpha_slope;
    std::optional<double> alpha_intercept;
    std::optional<std::filesystem::path> templates_dir;
    std::optional<std::string> embedder_spec;
};

struct EngineSetup {
    PipelineConfig pipeline;
    Providers providers;
};

/// Builds the pipeline configuration and providers from an optional JSON
/// config file plus overrides (overrides win). Relative paths inside the
/// config document (rules_path, templates_dir) resolve against the config
/// file's own directory. All validation failures are ConfigErrors.
EngineSetup load_engine_setup(const std::optional<std::filesystem::path>& config_path,
                              const ConfigOverrides& overrides);

/// Compact mock-embedder notation for flags: "hash:<dim>:<seed>" or
/// "token:<dim>:<seed>".
std::shared_ptr<Embedder> embedder_from_spec(const std::string& spec);

}  // namespace pairs
