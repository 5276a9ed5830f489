#include "cce/backends.hpp"

#include <algorithm>
#include <sstream>

#include "cce/errors.hpp"
#include "cce/util.hpp"

namespace cce {

namespace {

std::string image_ref_from_hash(std::uint64_t h) {
    return "mockimg/" + to_hex(h);
}

std::string canonical_scene_string(const ConceptAnnotation& a) {
    std::ostringstream out;
    out << a.image_id << "\n" << a.label;
    for (const std::string& c : a.sorted_concepts()) out << "\n" << c;
    return out.str();
}

} // namespace

std::string SceneRegistry::ref_for(const ConceptAnnotation& a) {
    return image_ref_from_hash(fnv1a64(canonical_scene_string(a)));
}

std::string SceneRegistry::put(const ConceptAnnotation& a) {
    std::string ref = ref_for(a);
    put_as(ref, a);
    return ref;
}

void SceneRegistry::put_as(const std::string& ref, const ConceptAnnotation& a) {
    std::lock_guard<std::mutex> lock(mutex_);
    scenes_[ref] = a;
}

ConceptAnnotation SceneRegistry::get(const std::string& ref) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = scenes_.find(ref);
    if (it == scenes_.end()) {
        throw Error(ErrorCode::UnknownImage, "image reference '" + ref + "' is not registered");
    }
    return it->second;
}

bool SceneRegistry::has(const std::string& ref) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return scenes_.count(ref) > 0;
}

bool PresenceRule::matches(const ConceptAnnotation& a) const {
    auto present = [&a](const std::string& c) {
        return std::find(a.concepts.begin(), a.concepts.end(), c) != a.concepts.end();
    };
    for (const std::string& c : all_of) {
        if (!present(c)) return false;
    }
    for (const std::string& c : none_of) {
        if (present(c)) return false;
    }
    return true;
}

MockClassifier::MockClassifier(std::shared_ptr<SceneRegistry> registry,
                               std::vector<PresenceRule> rules, double noise, std::uint64_t seed)
    : registry_(std::move(registry)), rules_(std::move(rules)), noise_(noise), seed_(seed) {}

ClassifyResponse MockClassifier::classify(const ClassifyRequest& request) {
    ConceptAnnotation scene = registry_->get(request.image.data);
    const PresenceRule* fired = nullptr;
    for (const PresenceRule& rule : rules_) {
        if (rule.matches(scene)) {
            fired = &rule;
            break;
        }
    }
    if (fired == nullptr) {
        throw Error(ErrorCode::ConfigError,
                    "classification rules do not cover scene '" + scene.image_id +
                        "'; the last rule should be an unconditional default");
    }
    std::string label = fired->label;
    std::uint64_t call = calls_.fetch_add(1);
    if (noise_ > 0.0) {
        std::uint64_t draw_seed = seed_at(seed_, call);
        if (unit_double(draw_seed) < noise_) {
            std::uint64_t pick_state = draw_seed + 1;
            std::uint64_t idx = splitmix64(pick_state) % request.labels.size();
            label = request.labels[static_cast<std::size_t>(idx)];
        }
    }
    ClassifyResponse response;
    response.label = label;
    return response;
}

MockEditor::MockEditor(std::shared_ptr<SceneRegistry> registry, double failure_rate,
                       std::uint64_t seed)
    : registry_(std::move(registry)), failure_rate_(failure_rate), seed_(seed) {}

GroundResponse MockEditor::ground(const GroundRequest& request) {
    // Validates the reference; the mask token carries the query forward.
    registry_->get(request.image.data);
    std::uint64_t h = fnv1a64(request.image.data + "|" + request.query);
    GroundResponse response;
    Box box;
    box.x = static_cast<double>(h % 512);
    box.y = static_cast<double>((h >> 16) % 512);
    box.w = static_cast<double>(64 + (h >> 32) % 128);
    box.h = static_cast<double>(64 + (h >> 40) % 128);
    response.boxes.push_back(box);
    response.mask = "mask/" + request.query + "/" + to_hex(h).substr(0, 8);
    return response;
}

InpaintResponse MockEditor::inpaint(const InpaintRequest& request) {
    ConceptAnnotation scene = registry_->get(request.image.data);

    // Mask token: mask/<grounded query>/<hash prefix>.
    std::string query;
    {
        std::string_view m = request.mask;
        if (m.rfind("mask/", 0) != 0) {
            throw Error(ErrorCode::SchemaMismatch, "mask token must start with mask/");
        }
        m.remove_prefix(5);
        auto slash = m.rfind('/');
        if (slash == std::string_view::npos || slash == 0) {
            throw Error(ErrorCode::SchemaMismatch, "mask token must name its grounded query");
        }
        query = std::string(m.substr(0, slash));
    }

    // The prompt shape identifies the edit: insertion anchors an object in
    // front of the grounded one, deletion paints the revealed backdrop over
    // the grounded object, substitution paints a replacement object over it.
    EditDescriptor edit;
    const std::string& prompt = request.prompt;
    auto anchored = prompt.find(" in front of the ");
    if (prompt.rfind("a ", 0) == 0 && anchored != std::string::npos) {
        edit = {EditKind::Insert, "", prompt.substr(2, anchored - 2)};
    } else if (prompt.rfind("the ", 0) == 0) {
        edit = {EditKind::Delete, query, ""};
    } else if (prompt.rfind("a ", 0) == 0) {
        edit = {EditKind::Substitute, query, prompt.substr(2)};
    } else {
        throw Error(ErrorCode::SchemaMismatch,
                    "inpainting prompt does not match any edit template: '" + prompt + "'");
    }

    std::uint64_t call = calls_.fetch_add(1);
    bool failed = failure_rate_ > 0.0 && unit_double(seed_at(seed_, call)) < failure_rate_;

    ConceptAnnotation next = scene;
    if (!failed) {
        auto erase_one = [&next](const std::string& c) {
            auto it = std::find(next.concepts.begin(), next.concepts.end(), c);
            if (it == next.concepts.end()) {
                throw Error(ErrorCode::MissingSource,
                            "edit names concept '" + c + "' absent from the scene");
            }
            next.concepts.erase(it);
        };
        switch (edit.kind) {
            case EditKind::Insert:
                next.concepts.push_back(edit.target);
                break;
            case EditKind::Delete:
                erase_one(edit.source);
                break;
            case EditKind::Substitute:
                erase_one(edit.source);
                next.concepts.push_back(edit.target);
                break;
        }
        std::sort(next.concepts.begin(), next.concepts.end());
    }

    std::ostringstream key;
    key << request.image.data << "|" << edit_to_string(edit) << "|" << request.seed << "|"
        << (failed ? "fail" : "ok");
    std::string new_ref = image_ref_from_hash(fnv1a64(key.str()));
    registry_->put_as(new_ref, next);

    InpaintResponse response;
    response.image = ImagePayload::ref(new_ref);
    return response;
}

std::shared_ptr<ScriptedSelector> ScriptedSelector::scripted(std::vector<std::string> responses) {
    auto s = std::shared_ptr<ScriptedSelector>(new ScriptedSelector(Mode::Scripted));
    s->script_.assign(responses.begin(), responses.end());
    return s;
}

std::shared_ptr<ScriptedSelector> ScriptedSelector::heuristic() {
    return std::shared_ptr<ScriptedSelector>(new ScriptedSelector(Mode::Heuristic));
}

std::shared_ptr<ScriptedSelector> ScriptedSelector::adversarial() {
    return std::shared_ptr<ScriptedSelector>(new ScriptedSelector(Mode::Adversarial));
}

namespace {

// Pulls the final "<label>: [a, b, c]" list out of the step prompt; the
// template's worked example appears earlier, so take the last occurrence.
std::vector<std::string> prompt_list(const std::string& prompt, const std::string& label) {
    std::string needle = label + ": [";
    auto pos = prompt.rfind(needle);
    if (pos == std::string::npos) return {};
    auto start = pos + needle.size();
    auto end = prompt.find(']', start);
    if (end == std::string::npos) return {};
    std::vector<std::string> out;
    std::istringstream items{prompt.substr(start, end - start)};
    std::string item;
    while (std::getline(items, item, ',')) {
        std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::string triple(const std::string& action, const std::string& a, const std::string& b) {
    return "[\"" + action + "\", \"" + a + "\", \"" + b + "\"]";
}

} // namespace

SelectResponse ScriptedSelector::select(const SelectRequest& request) {
    if (mode_ == Mode::Scripted) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (script_.empty()) {
            throw Error(ErrorCode::SelectorUnavailable, "scripted selector has no responses left");
        }
        SelectResponse response{script_.front()};
        script_.pop_front();
        return response;
    }

    std::vector<std::string> add_list = prompt_list(request.prompt, "Add list");
    std::vector<std::string> remove_list = prompt_list(request.prompt, "Remove list");
    std::vector<std::string> objects = prompt_list(request.prompt, "Object list");
    std::string anchor = objects.empty() ? "background" : objects.front();

    if (mode_ == Mode::Heuristic) {
        if (!remove_list.empty() && !add_list.empty()) {
            return SelectResponse{triple("replace", remove_list.front(), add_list.front())};
        }
        if (!remove_list.empty()) {
            return SelectResponse{triple("remove", remove_list.front(), "background")};
        }
        if (!add_list.empty()) {
            return SelectResponse{triple("add", add_list.front(), anchor)};
        }
        return SelectResponse{"no edit applies"};
    }

    // Adversarial: reversed kind preference, lexicographically last options.
    if (!add_list.empty()) {
        return SelectResponse{triple("add", add_list.back(), anchor)};
    }
    if (!remove_list.empty()) {
        return SelectResponse{triple("remove", remove_list.back(), "background")};
    }
    return SelectResponse{"no edit applies"};
}

BackendBundle make_mock_backends(const MockScenario& scenario,
                                 const std::vector<ConceptAnnotation>& corpus,
                                 std::uint64_t run_seed) {
    auto registry = std::make_shared<SceneRegistry>();
    for (const ConceptAnnotation& a : corpus) registry->put(a);

    BackendBundle bundle;
    auto editor =
        std::make_shared<MockEditor>(registry, scenario.editor_failure_rate, seed_at(run_seed, 1));
    bundle.contracts.classifier = std::make_shared<MockClassifier>(
        registry, scenario.rules, scenario.classifier_noise, seed_at(run_seed, 2));
    bundle.contracts.grounder = editor;
    bundle.contracts.inpainter = editor;
    if (scenario.selector_mode == "scripted") {
        bundle.contracts.selector = ScriptedSelector::scripted(scenario.selector_script);
    } else if (scenario.selector_mode == "heuristic") {
        bundle.contracts.selector = ScriptedSelector::heuristic();
    } else if (scenario.selector_mode == "adversarial") {
        bundle.contracts.selector = ScriptedSelector::adversarial();
    } else {
        throw Error(ErrorCode::ConfigError,
                    "selector_mode must be heuristic, adversarial, or scripted; got '" +
                        scenario.selector_mode + "'");
    }
    bundle.source_payload = [registry](const ConceptAnnotation& a) {
        return ImagePayload::ref(registry->put(a));
    };
    return bundle;
}

} // namespace cce
