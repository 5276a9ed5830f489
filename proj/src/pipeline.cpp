#include "cce/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "cce/errors.hpp"
#include "cce/prompts.hpp"
#include "cce/util.hpp"

namespace cce {

std::string strategy_name(OrderingStrategy s) {
    switch (s) {
        case OrderingStrategy::Local: return "local";
        case OrderingStrategy::Global: return "global";
        case OrderingStrategy::LocalGlobal: return "local_global";
    }
    return "local_global";
}

OrderingStrategy strategy_from_name(const std::string& name) {
    std::string n = normalize_token(name);
    if (n == "local") return OrderingStrategy::Local;
    if (n == "global") return OrderingStrategy::Global;
    if (n == "local_global" || n == "local-global" || n == "localglobal") {
        return OrderingStrategy::LocalGlobal;
    }
    throw Error(ErrorCode::ConfigError,
                "unknown ordering strategy '" + name + "'; use local, global, or local_global");
}

void RunConfig::validate() const {
    if (consistency_runs < 1 || consistency_runs % 2 == 0) {
        throw Error(ErrorCode::ConfigError, "consistency_runs must be odd and positive; got " +
                                                std::to_string(consistency_runs));
    }
    if (max_steps < 0) {
        throw Error(ErrorCode::ConfigError, "max_steps must be >= 0 (0 means one per plan edit)");
    }
    if (selector_retries < 1) {
        throw Error(ErrorCode::ConfigError, "selector_retries must be >= 1");
    }
}

Consensus classify_consistent(ClassifierClient& classifier, const ImagePayload& image,
                              const std::vector<std::string>& labels, int runs) {
    if (runs < 1 || runs % 2 == 0) {
        throw Error(ErrorCode::ConfigError,
                    "self-consistency requires an odd positive run count; got " +
                        std::to_string(runs));
    }
    if (labels.empty()) {
        throw Error(ErrorCode::ConfigError, "classification requires a non-empty label set");
    }

    ClassifyRequest request;
    request.image = image;
    request.labels = labels;

    Consensus consensus;
    for (int i = 0; i < runs; ++i) {
        ClassifyResponse response = classifier.classify(request);
        std::string vote;
        if (response.has_scores) {
            // Logit mode: vote for the best-scoring label; map order breaks
            // exact ties toward the lexicographically smaller label.
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& [label, score] : response.scores) {
                if (score > best) {
                    best = score;
                    vote = label;
                }
            }
        } else {
            vote = response.label;
        }
        consensus.votes.push_back(vote);
    }

    // Votes that match no expected label are abstentions: they stay in the
    // trace but drop out of the majority denominator.
    std::map<std::string, std::string> canonical;
    for (const std::string& label : labels) canonical[normalize_label(label)] = label;
    std::map<std::string, int> counts;
    int recognized = 0;
    for (const std::string& vote : consensus.votes) {
        auto it = canonical.find(normalize_label(vote));
        if (it == canonical.end()) continue;
        ++counts[it->second];
        ++recognized;
    }
    if (recognized == 0) {
        throw Error(ErrorCode::UnparsableResponse,
                    "classifier produced no recognizable label in " + std::to_string(runs) +
                        " votes");
    }
    int best = 0;
    for (const auto& [label, count] : counts) {
        if (count > best) {
            best = count;
            consensus.verdict = label;
        }
    }
    if (2 * best <= recognized) {
        throw Error(ErrorCode::UnparsableResponse,
                    "no strict majority among the recognized classifier votes");
    }
    consensus.ambiguity = static_cast<double>(best) / static_cast<double>(recognized);
    return consensus;
}

namespace {

// Stable identifier for a wire payload; refs and paths already are one.
std::string payload_ref(const ImagePayload& image) {
    if (image.mode == "ref" || image.mode == "path") return image.data;
    return "content/" + to_hex(fnv1a64(image.mode + "|" + image.data));
}

// Free-text answers to the anchor/backdrop questions: accept one bare token,
// tolerating an "Answer:" prefix, quotes, and a trailing period.
std::string parse_context_answer(const std::string& text) {
    std::string t = trim(text);
    std::string lowered = to_lower(t);
    if (lowered.rfind("answer:", 0) == 0) t = trim(t.substr(7));
    while (!t.empty() && t.back() == '.') t.pop_back();
    if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                          (t.front() == '\'' && t.back() == '\''))) {
        t = t.substr(1, t.size() - 2);
    }
    t = normalize_token(t);
    if (t.empty() || t.find_first_of(" \t\n\r") != std::string::npos) return "";
    return t;
}

std::string ask_context(SelectorClient* selector, const ImagePayload& image,
                        const std::string& prompt, bool& fell_back) {
    if (selector != nullptr) {
        try {
            SelectRequest request;
            request.image = image;
            request.prompt = prompt;
            std::string answer = parse_context_answer(selector->select(request).text);
            if (!answer.empty()) return answer;
        } catch (const Error&) {
            // A broken context answer must not kill the run; fall through.
        }
    }
    fell_back = true;
    return "background";
}

Cost descriptor_cost(const Taxonomy& t, const EditDescriptor& d) {
    switch (d.kind) {
        case EditKind::Insert: return t.insertion_cost(d.target);
        case EditKind::Delete: return t.deletion_cost(d.source);
        case EditKind::Substitute: return t.concept_distance(d.source, d.target);
    }
    return Cost::infinite();
}

bool descriptor_known(const Taxonomy& t, const EditDescriptor& d) {
    if (d.kind != EditKind::Insert && !t.contains(d.source)) return false;
    if (d.kind != EditKind::Delete && !t.contains(d.target)) return false;
    return true;
}

// The class-level ranking the Global strategy walks: every directed edit the
// table endorses, strongest first, ties in canonical edit order.
std::vector<Edit> table_ranked_edits(const Taxonomy& taxonomy, const CostPolicy& policy,
                                     const ImportanceTable& table) {
    struct Ranked {
        EditDescriptor descriptor;
        double weight;
    };
    std::vector<Ranked> ranked;
    for (const auto& [key, entry] : table.entries) {
        auto endorsed = ImportanceTable::endorsed_edit(key, entry);
        if (!endorsed || policy.is_nonactionable(*endorsed)) continue;
        // Entries from a stale or foreign table may name concepts this
        // taxonomy lacks; such edits can never be grounded, so skip them.
        if (!descriptor_known(taxonomy, *endorsed)) continue;
        if (descriptor_cost(taxonomy, *endorsed).is_infinite()) continue;
        ranked.push_back({*endorsed, std::fabs(entry.score())});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.descriptor < b.descriptor;
    });
    std::vector<Edit> out;
    out.reserve(ranked.size());
    for (const Ranked& r : ranked) {
        out.push_back(Edit{r.descriptor.kind, r.descriptor.source, r.descriptor.target,
                           descriptor_cost(taxonomy, r.descriptor)});
    }
    return out;
}

bool edit_applies(const ConceptAnnotation& scene, const Edit& e) {
    if (e.kind == EditKind::Insert) return true;
    return std::find(scene.concepts.begin(), scene.concepts.end(), e.source) !=
           scene.concepts.end();
}

std::vector<std::string> scene_objects(const ConceptAnnotation& a) {
    std::set<std::string> unique(a.concepts.begin(), a.concepts.end());
    return {unique.begin(), unique.end()};
}

nlohmann::json consensus_to_json(const Consensus& c) {
    nlohmann::json j;
    j["ambiguity"] = c.ambiguity;
    j["verdict"] = c.verdict;
    j["votes"] = c.votes;
    return j;
}

} // namespace

EditContext resolve_edit_context(SelectorClient* selector, const ImagePayload& image,
                                 const Edit& edit) {
    EditContext ctx;
    ctx.negative_prompt = default_negative_prompt();
    switch (edit.kind) {
        case EditKind::Substitute:
            ctx.query = edit.source;
            ctx.prompt = inpaint_prompt_substitute(edit.target);
            return ctx;
        case EditKind::Insert: {
            std::string anchor = ask_context(selector, image, insert_anchor_prompt(edit.target),
                                             ctx.selector_fallback);
            ctx.query = anchor;
            ctx.prompt = inpaint_prompt_insert(edit.target, anchor);
            return ctx;
        }
        case EditKind::Delete: {
            std::string backdrop = ask_context(selector, image, delete_backdrop_prompt(edit.source),
                                               ctx.selector_fallback);
            ctx.query = edit.source;
            ctx.prompt = inpaint_prompt_delete(backdrop);
            return ctx;
        }
    }
    throw Error(ErrorCode::ConfigError, "edit has no recognized kind");
}

std::string run_status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "completed";
        case RunStatus::SourceMisclassified: return "source_misclassified";
        case RunStatus::Failed: return "failed";
    }
    return "failed";
}

RunStatus run_status_from_name(const std::string& name) {
    if (name == "completed") return RunStatus::Completed;
    if (name == "source_misclassified") return RunStatus::SourceMisclassified;
    if (name == "failed") return RunStatus::Failed;
    throw Error(ErrorCode::SchemaMismatch, "unknown run status '" + name + "'");
}

nlohmann::json RunTrace::to_json() const {
    nlohmann::json j;
    j["trace_version"] = trace_version;
    j["image_id"] = source.image_id;
    j["source_label"] = source.label;
    j["source_concepts"] = source.concepts;
    j["target_label"] = target_label;
    j["target_image"] = target_image;
    j["edit_plan"] = edit_set_to_json_value(edit_plan);
    j["source_check"] = consensus_to_json(source_check);
    j["steps"] = nlohmann::json::array();
    for (const StepRecord& s : steps) {
        nlohmann::json js;
        js["ambiguity"] = s.ambiguity;
        js["edit"] = edit_to_json(s.edit);
        js["image_ref"] = s.image_ref;
        js["index"] = s.index;
        js["selector_fallback"] = s.selector_fallback;
        js["verdict"] = s.verdict;
        js["votes"] = s.votes;
        j["steps"].push_back(js);
    }
    j["status"] = run_status_name(status);
    if (failed_step) j["failed_step"] = *failed_step;
    if (!failure_reason.empty()) j["failure_reason"] = failure_reason;
    j["flipped"] = flipped;
    if (steps_to_flip) j["steps_to_flip"] = *steps_to_flip;
    j["strategy"] = strategy_name(strategy);
    j["seed"] = seed;
    return j;
}

namespace {

const nlohmann::json& trace_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) {
        throw Error(ErrorCode::SchemaMismatch, std::string("trace record lacks '") + key + "'");
    }
    return j.at(key);
}

std::string trace_string(const nlohmann::json& j, const char* key) {
    const nlohmann::json& v = trace_field(j, key);
    if (!v.is_string()) {
        throw Error(ErrorCode::SchemaMismatch, std::string("trace field '") + key +
                                                   "' must be a string");
    }
    return v.get<std::string>();
}

std::vector<std::string> trace_string_array(const nlohmann::json& j, const char* key) {
    const nlohmann::json& v = trace_field(j, key);
    if (!v.is_array()) {
        throw Error(ErrorCode::SchemaMismatch, std::string("trace field '") + key +
                                                   "' must be an array");
    }
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) {
            throw Error(ErrorCode::SchemaMismatch, std::string("trace field '") + key +
                                                       "' must hold strings");
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

Consensus consensus_from_json(const nlohmann::json& j) {
    Consensus c;
    c.verdict = trace_string(j, "verdict");
    c.votes = trace_string_array(j, "votes");
    const nlohmann::json& a = trace_field(j, "ambiguity");
    if (!a.is_number()) {
        throw Error(ErrorCode::SchemaMismatch, "consensus ambiguity must be a number");
    }
    c.ambiguity = a.get<double>();
    return c;
}

} // namespace

RunTrace RunTrace::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw Error(ErrorCode::SchemaMismatch, "trace record must be a JSON object");
    }
    RunTrace t;
    const nlohmann::json& version = trace_field(j, "trace_version");
    if (!version.is_number_integer() || version.get<int>() != 1) {
        throw Error(ErrorCode::SchemaMismatch, "unsupported trace_version");
    }
    t.source.image_id = trace_string(j, "image_id");
    t.source.label = trace_string(j, "source_label");
    t.source.concepts = trace_string_array(j, "source_concepts");
    t.target_label = trace_string(j, "target_label");
    t.target_image = trace_string(j, "target_image");
    try {
        t.edit_plan = edit_set_from_json_value(trace_field(j, "edit_plan"));
    } catch (const Error& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("bad edit_plan in trace: ") + e.what());
    }
    t.source_check = consensus_from_json(trace_field(j, "source_check"));
    const nlohmann::json& steps = trace_field(j, "steps");
    if (!steps.is_array()) {
        throw Error(ErrorCode::SchemaMismatch, "trace steps must be an array");
    }
    for (const auto& js : steps) {
        StepRecord s;
        const nlohmann::json& index = trace_field(js, "index");
        if (!index.is_number_integer() || index.get<int>() < 1) {
            throw Error(ErrorCode::SchemaMismatch, "step index must be a positive integer");
        }
        s.index = index.get<int>();
        try {
            s.edit = edit_from_json(trace_field(js, "edit"));
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaMismatch, std::string("bad step edit: ") + e.what());
        }
        s.image_ref = trace_string(js, "image_ref");
        Consensus c = consensus_from_json(js);
        s.verdict = c.verdict;
        s.votes = c.votes;
        s.ambiguity = c.ambiguity;
        const nlohmann::json& fb = trace_field(js, "selector_fallback");
        if (!fb.is_boolean()) {
            throw Error(ErrorCode::SchemaMismatch, "selector_fallback must be a boolean");
        }
        s.selector_fallback = fb.get<bool>();
        t.steps.push_back(std::move(s));
    }
    t.status = run_status_from_name(trace_string(j, "status"));
    if (j.contains("failed_step")) t.failed_step = j.at("failed_step").get<int>();
    if (j.contains("failure_reason")) t.failure_reason = trace_string(j, "failure_reason");
    const nlohmann::json& flipped = trace_field(j, "flipped");
    if (!flipped.is_boolean()) {
        throw Error(ErrorCode::SchemaMismatch, "flipped must be a boolean");
    }
    t.flipped = flipped.get<bool>();
    if (j.contains("steps_to_flip")) t.steps_to_flip = j.at("steps_to_flip").get<int>();
    t.strategy = strategy_from_name(trace_string(j, "strategy"));
    const nlohmann::json& seed = trace_field(j, "seed");
    if (!seed.is_number()) {
        throw Error(ErrorCode::SchemaMismatch, "trace seed must be a number");
    }
    t.seed = seed.get<std::uint64_t>();
    return t;
}

std::string trace_to_json_line(const RunTrace& trace) { return trace.to_json().dump(); }

void write_traces(std::ostream& out, const std::vector<RunTrace>& traces) {
    for (const RunTrace& t : traces) out << trace_to_json_line(t) << "\n";
}

std::vector<RunTrace> read_traces(std::istream& in) {
    std::vector<RunTrace> traces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::SchemaMismatch,
                        "trace line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            traces.push_back(RunTrace::from_json(j));
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaMismatch,
                        "trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return traces;
}

RunTrace run_counterfactual(const Taxonomy& taxonomy, const CostPolicy& policy,
                            const ConceptAnnotation& source,
                            const std::vector<ConceptAnnotation>& candidates,
                            const ImportanceTable* importance, const ServiceContracts& contracts,
                            const ImagePayload& source_image, const RunConfig& config) {
    config.validate();
    if (!contracts.classifier || !contracts.grounder || !contracts.inpainter) {
        throw Error(ErrorCode::ConfigError,
                    "classifier, grounder, and inpainter clients are all required");
    }
    if (config.strategy == OrderingStrategy::Local && !contracts.selector) {
        throw Error(ErrorCode::ConfigError, "the local strategy requires a selector client");
    }
    if (config.strategy != OrderingStrategy::Local && importance == nullptr) {
        throw Error(ErrorCode::ConfigError,
                    strategy_name(config.strategy) + " ordering requires an importance table");
    }
    if (candidates.empty()) {
        throw Error(ErrorCode::EmptyCandidates, "no target-class candidates supplied");
    }
    for (const ConceptAnnotation& c : candidates) {
        if (c.label != candidates.front().label) {
            throw Error(ErrorCode::ConfigError, "candidates must all carry the target label");
        }
    }

    RunTrace trace;
    trace.source = source;
    trace.target_label = candidates.front().label;
    trace.strategy = config.strategy;
    trace.seed = config.seed;

    auto [target, plan] = closest_target(taxonomy, policy, source, candidates);
    trace.target_image = target.image_id;
    trace.edit_plan = plan;

    std::vector<std::string> labels = {source.label, trace.target_label};
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

    // Step 0: the backends must agree the source belongs to its own class.
    try {
        trace.source_check = classify_consistent(*contracts.classifier, source_image, labels,
                                                 config.consistency_runs);
    } catch (const Error& e) {
        trace.status = RunStatus::Failed;
        trace.failed_step = 0;
        trace.failure_reason = e.what();
        return trace;
    }
    if (trace.source_check.verdict != source.label) {
        trace.status = RunStatus::SourceMisclassified;
        return trace;
    }

    std::size_t cap = plan.edits.size();
    if (config.max_steps > 0) cap = std::min(cap, static_cast<std::size_t>(config.max_steps));

    std::vector<Edit> queue;
    if (config.strategy == OrderingStrategy::Global) {
        queue = table_ranked_edits(taxonomy, policy, *importance);
    } else if (config.strategy == OrderingStrategy::LocalGlobal) {
        queue = order_local_global(plan, *importance);
    }
    std::vector<Edit> remaining = plan.edits;  // Local's shrinking pool
    std::size_t cursor = 0;

    ConceptAnnotation scene = source;  // symbolic working view, updated in lockstep
    ImagePayload current = source_image;
    SelectorClient* selector = contracts.selector.get();

    int step_index = 0;
    while (static_cast<std::size_t>(step_index) < cap) {
        ++step_index;
        try {
            Edit edit;
            std::string context_hint;
            bool choice_fallback = false;

            if (config.strategy == OrderingStrategy::Local) {
                if (remaining.empty()) break;
                SelectorChoice choice;
                bool chosen = false;
                for (int attempt = 0; attempt < config.selector_retries && !chosen; ++attempt) {
                    try {
                        choice = next_edit_local(*contracts.selector, payload_ref(current),
                                                 scene_objects(scene), remaining);
                        chosen = true;
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::UnparsableResponse &&
                            e.code() != ErrorCode::UnknownEdit) {
                            throw;
                        }
                    }
                }
                if (!chosen) {
                    choice.edit = *std::min_element(remaining.begin(), remaining.end(),
                                                    edit_identity_less);
                    choice.context_hint.clear();
                    choice_fallback = true;
                }
                edit = choice.edit;
                context_hint = choice.context_hint;
                auto used = std::find_if(remaining.begin(), remaining.end(), [&](const Edit& e) {
                    return edit_identity_equal(e, edit);
                });
                remaining.erase(used);
            } else if (config.strategy == OrderingStrategy::LocalGlobal) {
                if (cursor >= queue.size()) break;
                edit = queue[cursor++];
            } else {
                // Global: skip ranked edits the current scene cannot absorb
                // without spending steps on them.
                while (cursor < queue.size() && !edit_applies(scene, queue[cursor])) ++cursor;
                if (cursor >= queue.size()) break;
                edit = queue[cursor++];
            }

            EditContext ctx;
            if (!context_hint.empty() && edit.kind == EditKind::Insert) {
                ctx.query = context_hint;
                ctx.prompt = inpaint_prompt_insert(edit.target, context_hint);
                ctx.negative_prompt = default_negative_prompt();
            } else if (!context_hint.empty() && edit.kind == EditKind::Delete) {
                ctx.query = edit.source;
                ctx.prompt = inpaint_prompt_delete(context_hint);
                ctx.negative_prompt = default_negative_prompt();
            } else {
                ctx = resolve_edit_context(selector, current, edit);
            }

            GroundRequest ground = config.ground_template;
            ground.image = current;
            ground.query = ctx.query;
            GroundResponse grounded = contracts.grounder->ground(ground);

            InpaintRequest inpaint = config.inpaint_template;
            inpaint.image = current;
            inpaint.mask = grounded.mask;
            inpaint.prompt = ctx.prompt;
            if (inpaint.negative_prompt.empty()) inpaint.negative_prompt = ctx.negative_prompt;
            inpaint.seed = seed_at(config.seed, static_cast<std::uint64_t>(step_index));
            current = contracts.inpainter->inpaint(inpaint).image;

            scene = apply_edits(scene, {edit});

            Consensus consensus =
                classify_consistent(*contracts.classifier, current, labels,
                                    config.consistency_runs);

            StepRecord record;
            record.index = step_index;
            record.edit = edit;
            record.image_ref = payload_ref(current);
            record.verdict = consensus.verdict;
            record.votes = consensus.votes;
            record.ambiguity = consensus.ambiguity;
            record.selector_fallback = choice_fallback || ctx.selector_fallback;
            trace.steps.push_back(std::move(record));

            if (consensus.verdict == trace.target_label) {
                trace.flipped = true;
                trace.steps_to_flip = step_index;
                break;
            }
        } catch (const Error& e) {
            trace.status = RunStatus::Failed;
            trace.failed_step = step_index;
            trace.failure_reason = e.what();
            return trace;
        }
    }
    return trace;
}

} // namespace cce
