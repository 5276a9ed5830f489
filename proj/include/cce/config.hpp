#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "cce/backends.hpp"
#include "cce/remote.hpp"

namespace cce {

enum class BackendMode { Mock, Remote };

std::string backend_mode_name(BackendMode m);
BackendMode backend_mode_from_name(const std::string& name);  // throws ConfigError

// Full description of a working set: one JSON document plus command-line
// overrides, with precedence flags > file > defaults. A config is validated
// completely before any command writes output, so a rejected config never
// leaves partial files behind.
struct ProjectConfig {
    std::string taxonomy_path;
    std::string corpus_path;
    std::string class_from;  // label being explained
    std::string class_to;    // label the counterfactual must reach
    std::string strategy = "local_global";
    BackendMode backend = BackendMode::Mock;
    MockScenario mock;
    RemoteEndpoints remote;
    int consistency_runs = 7;
    int max_steps = 0;  // 0 means "one step per plan edit"
    int jobs = 1;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    // Structural checks shared by every command: required paths, a known
    // strategy, distinct class labels, sane numeric ranges.
    void validate() const;
    // Additionally requires a backend usable for pipeline runs.
    void validate_for_run() const;
};

// Strict parsers: unknown keys and wrongly typed values are ConfigError, so
// typos surface in `validate` instead of silently falling back to defaults.
ProjectConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ProjectConfig& config);
ProjectConfig load_config(const std::string& path);  // IoError on unreadable file

// Command-line values that take precedence over the file.
struct ConfigOverrides {
    std::optional<std::string> taxonomy_path;
    std::optional<std::string> corpus_path;
    std::optional<std::string> class_from;
    std::optional<std::string> class_to;
    std::optional<std::string> strategy;
    std::optional<std::string> output_dir;
    std::optional<int> consistency_runs;
    std::optional<int> max_steps;
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
};

void apply_overrides(ProjectConfig& config, const ConfigOverrides& overrides);

} // namespace cce
