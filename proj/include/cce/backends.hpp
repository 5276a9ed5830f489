#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "cce/annotation.hpp"
#include "cce/clients.hpp"
#include "cce/edit.hpp"

namespace cce {

// Symbolic image store shared by the mock services: every image reference
// maps to the concept annotation the "image" depicts. Content-addressed so
// identical scenes get identical references.
class SceneRegistry {
public:
    static std::string ref_for(const ConceptAnnotation& a);

    std::string put(const ConceptAnnotation& a);              // returns ref_for(a)
    void put_as(const std::string& ref, const ConceptAnnotation& a);
    ConceptAnnotation get(const std::string& ref) const;      // throws UnknownImage
    bool has(const std::string& ref) const;

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, ConceptAnnotation> scenes_;
};

// First-match classification rule: fires when every concept in all_of is
// present and none in none_of is. A rule with empty conditions always fires,
// so the last rule acts as the default.
struct PresenceRule {
    std::vector<std::string> all_of;
    std::vector<std::string> none_of;
    std::string label;

    bool matches(const ConceptAnnotation& a) const;
};

// Rule-driven stand-in for a real classifier. With noise > 0, each call may
// independently replace the rule label with a uniformly random one from the
// request's label set, reproducibly from the seed and a call counter.
class MockClassifier : public ClassifierClient {
public:
    MockClassifier(std::shared_ptr<SceneRegistry> registry, std::vector<PresenceRule> rules,
                   double noise, std::uint64_t seed);

    ClassifyResponse classify(const ClassifyRequest& request) override;

private:
    std::shared_ptr<SceneRegistry> registry_;
    std::vector<PresenceRule> rules_;
    double noise_;
    std::uint64_t seed_;
    std::atomic<std::uint64_t> calls_{0};
};

// Grounder + inpainter over the symbolic registry. Grounding returns a mask
// token naming the query; inpainting reads the mask token and the prompt to
// reconstruct the intended edit and mutates the annotation accordingly. With
// failure_rate > 0 an edit may silently leave the scene unchanged, emulating
// a visually failed generation.
class MockEditor : public GrounderClient, public InpainterClient {
public:
    MockEditor(std::shared_ptr<SceneRegistry> registry, double failure_rate, std::uint64_t seed);

    GroundResponse ground(const GroundRequest& request) override;
    InpaintResponse inpaint(const InpaintRequest& request) override;

private:
    std::shared_ptr<SceneRegistry> registry_;
    double failure_rate_;
    std::uint64_t seed_;
    std::atomic<std::uint64_t> calls_{0};
};

// Edit selector stand-in. Scripted mode replays canned responses and then
// reports the service unavailable. Heuristic mode prefers replace over
// remove over add, pairing the heads of the prompt's lists. Adversarial mode
// prefers the reverse and picks list tails, for worst-case ordering tests.
class ScriptedSelector : public SelectorClient {
public:
    enum class Mode { Scripted, Heuristic, Adversarial };

    static std::shared_ptr<ScriptedSelector> scripted(std::vector<std::string> responses);
    static std::shared_ptr<ScriptedSelector> heuristic();
    static std::shared_ptr<ScriptedSelector> adversarial();

    SelectResponse select(const SelectRequest& request) override;

private:
    explicit ScriptedSelector(Mode mode) : mode_(mode) {}

    Mode mode_;
    std::mutex mutex_;
    std::deque<std::string> script_;
};

// Everything a pipeline run needs from a backend: the four service clients
// plus the rule for turning a source annotation into its wire image payload.
struct BackendBundle {
    ServiceContracts contracts;
    std::function<ImagePayload(const ConceptAnnotation&)> source_payload;
};

// Mock-mode description, loadable from configuration.
struct MockScenario {
    std::vector<PresenceRule> rules;
    double classifier_noise = 0.0;
    double editor_failure_rate = 0.0;
    std::string selector_mode = "heuristic";  // heuristic | adversarial | scripted
    std::vector<std::string> selector_script;
};

// Builds fresh mock services seeded for one run, with every corpus
// annotation pre-registered as a source image.
BackendBundle make_mock_backends(const MockScenario& scenario,
                                 const std::vector<ConceptAnnotation>& corpus,
                                 std::uint64_t run_seed);

} // namespace cce
