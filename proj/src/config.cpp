#include "cce/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "cce/errors.hpp"
#include "cce/pipeline.hpp"

namespace cce {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) {
    throw Error(ErrorCode::ConfigError, what);
}

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) bad(where + " must be a JSON object");
}

void expect_keys(const json& j, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) bad(where + ": unknown key '" + it.key() + "'");
    }
}

std::string get_string(const json& j, const char* key, const std::string& where) {
    const json& v = j.at(key);
    if (!v.is_string()) bad(where + "." + key + " must be a string");
    return v.get<std::string>();
}

std::string get_string_or(const json& j, const char* key, const std::string& where,
                          const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    return get_string(j, key, where);
}

int get_int_or(const json& j, const char* key, const std::string& where, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) bad(where + "." + key + " must be an integer");
    return v.get<int>();
}

std::uint64_t get_uint64_or(const json& j, const char* key, const std::string& where,
                            std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        bad(where + "." + key + " must be a non-negative integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
        bad(where + "." + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

double get_double_or(const json& j, const char* key, const std::string& where, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) bad(where + "." + key + " must be a number");
    return v.get<double>();
}

std::vector<std::string> get_string_array_or(const json& j, const char* key,
                                             const std::string& where) {
    if (!j.contains(key)) return {};
    const json& v = j.at(key);
    if (!v.is_array()) bad(where + "." + key + " must be an array of strings");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const json& item : v) {
        if (!item.is_string()) bad(where + "." + key + " must be an array of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

PresenceRule rule_from_json(const json& j, const std::string& where) {
    expect_object(j, where);
    expect_keys(j, where, {"label", "all_of", "none_of"});
    if (!j.contains("label")) bad(where + " needs a 'label'");
    PresenceRule rule;
    rule.label = get_string(j, "label", where);
    if (rule.label.empty()) bad(where + ".label must not be empty");
    rule.all_of = get_string_array_or(j, "all_of", where);
    rule.none_of = get_string_array_or(j, "none_of", where);
    return rule;
}

json rule_to_json(const PresenceRule& rule) {
    json j;
    j["label"] = rule.label;
    if (!rule.all_of.empty()) j["all_of"] = rule.all_of;
    if (!rule.none_of.empty()) j["none_of"] = rule.none_of;
    return j;
}

MockScenario mock_from_json(const json& j) {
    const std::string where = "backend.mock";
    expect_object(j, where);
    expect_keys(j, where,
                {"rules", "classifier_noise", "editor_failure_rate", "selector_mode",
                 "selector_script"});
    MockScenario scenario;
    if (j.contains("rules")) {
        const json& rules = j.at("rules");
        if (!rules.is_array()) bad(where + ".rules must be an array");
        for (std::size_t i = 0; i < rules.size(); ++i) {
            scenario.rules.push_back(
                rule_from_json(rules[i], where + ".rules[" + std::to_string(i) + "]"));
        }
    }
    scenario.classifier_noise = get_double_or(j, "classifier_noise", where, 0.0);
    scenario.editor_failure_rate = get_double_or(j, "editor_failure_rate", where, 0.0);
    scenario.selector_mode = get_string_or(j, "selector_mode", where, "heuristic");
    scenario.selector_script = get_string_array_or(j, "selector_script", where);
    return scenario;
}

json mock_to_json(const MockScenario& scenario) {
    json j;
    j["rules"] = json::array();
    for (const PresenceRule& rule : scenario.rules) j["rules"].push_back(rule_to_json(rule));
    j["classifier_noise"] = scenario.classifier_noise;
    j["editor_failure_rate"] = scenario.editor_failure_rate;
    j["selector_mode"] = scenario.selector_mode;
    if (!scenario.selector_script.empty()) j["selector_script"] = scenario.selector_script;
    return j;
}

RemoteEndpoint endpoint_from_json(const json& j, const std::string& where) {
    expect_object(j, where);
    expect_keys(j, where, {"base_url", "token_env", "attempts", "backoff_ms"});
    RemoteEndpoint endpoint;
    endpoint.base_url = get_string_or(j, "base_url", where, "");
    endpoint.token_env = get_string_or(j, "token_env", where, "");
    endpoint.attempts = get_int_or(j, "attempts", where, endpoint.attempts);
    endpoint.backoff_ms = get_int_or(j, "backoff_ms", where, endpoint.backoff_ms);
    if (endpoint.attempts < 1) bad(where + ".attempts must be at least 1");
    if (endpoint.backoff_ms < 0) bad(where + ".backoff_ms must not be negative");
    return endpoint;
}

json endpoint_to_json(const RemoteEndpoint& endpoint) {
    json j;
    j["base_url"] = endpoint.base_url;
    if (!endpoint.token_env.empty()) j["token_env"] = endpoint.token_env;
    j["attempts"] = endpoint.attempts;
    j["backoff_ms"] = endpoint.backoff_ms;
    return j;
}

RemoteEndpoints remote_from_json(const json& j) {
    const std::string where = "backend.remote";
    expect_object(j, where);
    expect_keys(j, where, {"classifier", "grounder", "inpainter", "selector", "images_dir"});
    RemoteEndpoints endpoints;
    if (j.contains("classifier"))
        endpoints.classifier = endpoint_from_json(j.at("classifier"), where + ".classifier");
    if (j.contains("grounder"))
        endpoints.grounder = endpoint_from_json(j.at("grounder"), where + ".grounder");
    if (j.contains("inpainter"))
        endpoints.inpainter = endpoint_from_json(j.at("inpainter"), where + ".inpainter");
    if (j.contains("selector"))
        endpoints.selector = endpoint_from_json(j.at("selector"), where + ".selector");
    endpoints.images_dir = get_string_or(j, "images_dir", where, "");
    return endpoints;
}

json remote_to_json(const RemoteEndpoints& endpoints) {
    json j;
    if (!endpoints.classifier.base_url.empty())
        j["classifier"] = endpoint_to_json(endpoints.classifier);
    if (!endpoints.grounder.base_url.empty()) j["grounder"] = endpoint_to_json(endpoints.grounder);
    if (!endpoints.inpainter.base_url.empty())
        j["inpainter"] = endpoint_to_json(endpoints.inpainter);
    if (!endpoints.selector.base_url.empty()) j["selector"] = endpoint_to_json(endpoints.selector);
    if (!endpoints.images_dir.empty()) j["images_dir"] = endpoints.images_dir;
    return j;
}

} // namespace

std::string backend_mode_name(BackendMode m) {
    return m == BackendMode::Mock ? "mock" : "remote";
}

BackendMode backend_mode_from_name(const std::string& name) {
    if (name == "mock") return BackendMode::Mock;
    if (name == "remote") return BackendMode::Remote;
    bad("unknown backend mode '" + name + "' (expected mock or remote)");
}

ProjectConfig config_from_json(const json& j) {
    expect_object(j, "config");
    expect_keys(j, "config",
                {"taxonomy_path", "corpus_path", "class_pair", "strategy", "backend",
                 "consistency_runs", "max_steps", "jobs", "seed", "output_dir"});
    ProjectConfig config;
    config.taxonomy_path = get_string_or(j, "taxonomy_path", "config", "");
    config.corpus_path = get_string_or(j, "corpus_path", "config", "");
    if (j.contains("class_pair")) {
        const json& pair = j.at("class_pair");
        expect_object(pair, "config.class_pair");
        expect_keys(pair, "config.class_pair", {"from", "to"});
        config.class_from = get_string_or(pair, "from", "config.class_pair", "");
        config.class_to = get_string_or(pair, "to", "config.class_pair", "");
    }
    config.strategy = get_string_or(j, "strategy", "config", config.strategy);
    if (j.contains("backend")) {
        const json& backend = j.at("backend");
        expect_object(backend, "config.backend");
        expect_keys(backend, "config.backend", {"mode", "mock", "remote"});
        config.backend = backend_mode_from_name(get_string(backend, "mode", "config.backend"));
        if (backend.contains("mock")) config.mock = mock_from_json(backend.at("mock"));
        if (backend.contains("remote")) config.remote = remote_from_json(backend.at("remote"));
    }
    config.consistency_runs = get_int_or(j, "consistency_runs", "config", config.consistency_runs);
    config.max_steps = get_int_or(j, "max_steps", "config", config.max_steps);
    config.jobs = get_int_or(j, "jobs", "config", config.jobs);
    config.seed = get_uint64_or(j, "seed", "config", config.seed);
    config.output_dir = get_string_or(j, "output_dir", "config", config.output_dir);
    return config;
}

json config_to_json(const ProjectConfig& config) {
    json j;
    j["taxonomy_path"] = config.taxonomy_path;
    j["corpus_path"] = config.corpus_path;
    j["class_pair"] = {{"from", config.class_from}, {"to", config.class_to}};
    j["strategy"] = config.strategy;
    json backend;
    backend["mode"] = backend_mode_name(config.backend);
    if (config.backend == BackendMode::Mock) {
        backend["mock"] = mock_to_json(config.mock);
    } else {
        backend["remote"] = remote_to_json(config.remote);
    }
    j["backend"] = backend;
    j["consistency_runs"] = config.consistency_runs;
    j["max_steps"] = config.max_steps;
    j["jobs"] = config.jobs;
    j["seed"] = config.seed;
    j["output_dir"] = config.output_dir;
    return j;
}

ProjectConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json j = json::parse(buffer.str(), nullptr, false);
    if (j.is_discarded()) bad("config file '" + path + "' is not valid JSON");
    return config_from_json(j);
}

void ProjectConfig::validate() const {
    if (taxonomy_path.empty()) bad("taxonomy_path is required");
    if (corpus_path.empty()) bad("corpus_path is required");
    if (class_from.empty()) bad("class_pair.from is required");
    if (class_to.empty()) bad("class_pair.to is required");
    if (class_from == class_to) bad("class_pair.from and class_pair.to must differ");
    strategy_from_name(strategy);  // throws on unknown names
    if (consistency_runs < 1 || consistency_runs % 2 == 0)
        bad("consistency_runs must be odd and at least 1");
    if (max_steps < 0) bad("max_steps must not be negative");
    if (jobs < 1) bad("jobs must be at least 1");
    if (output_dir.empty()) bad("output_dir is required");
}

void ProjectConfig::validate_for_run() const {
    validate();
    if (backend == BackendMode::Mock) {
        if (mock.rules.empty()) bad("backend.mock.rules must contain at least one rule");
        const PresenceRule& last = mock.rules.back();
        if (!last.all_of.empty() || !last.none_of.empty())
            bad("the last mock rule must be unconditional so every scene gets a label");
        if (mock.classifier_noise < 0.0 || mock.classifier_noise > 1.0)
            bad("backend.mock.classifier_noise must lie in [0, 1]");
        if (mock.editor_failure_rate < 0.0 || mock.editor_failure_rate > 1.0)
            bad("backend.mock.editor_failure_rate must lie in [0, 1]");
        if (mock.selector_mode != "heuristic" && mock.selector_mode != "adversarial" &&
            mock.selector_mode != "scripted")
            bad("backend.mock.selector_mode must be heuristic, adversarial, or scripted");
        if (mock.selector_mode == "scripted" && mock.selector_script.empty())
            bad("backend.mock.selector_mode 'scripted' needs a non-empty selector_script");
    } else {
        if (remote.classifier.base_url.empty()) bad("backend.remote.classifier needs a base_url");
        if (remote.grounder.base_url.empty()) bad("backend.remote.grounder needs a base_url");
        if (remote.inpainter.base_url.empty()) bad("backend.remote.inpainter needs a base_url");
        if (strategy_from_name(strategy) == OrderingStrategy::Local &&
            remote.selector.base_url.empty())
            bad("the local strategy needs backend.remote.selector");
    }
}

void apply_overrides(ProjectConfig& config, const ConfigOverrides& overrides) {
    if (overrides.taxonomy_path) config.taxonomy_path = *overrides.taxonomy_path;
    if (overrides.corpus_path) config.corpus_path = *overrides.corpus_path;
    if (overrides.class_from) config.class_from = *overrides.class_from;
    if (overrides.class_to) config.class_to = *overrides.class_to;
    if (overrides.strategy) config.strategy = *overrides.strategy;
    if (overrides.output_dir) config.output_dir = *overrides.output_dir;
    if (overrides.consistency_runs) config.consistency_runs = *overrides.consistency_runs;
    if (overrides.max_steps) config.max_steps = *overrides.max_steps;
    if (overrides.jobs) config.jobs = *overrides.jobs;
    if (overrides.seed) config.seed = *overrides.seed;
}

} // namespace cce
