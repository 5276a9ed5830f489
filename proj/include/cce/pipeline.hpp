#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cce/annotation.hpp"
#include "cce/clients.hpp"
#include "cce/editplan.hpp"
#include "cce/ordering.hpp"
#include "cce/taxonomy.hpp"

namespace cce {

// How a run sequences the edits of its plan. Local delegates each choice to
// the selector service; Global walks the class-level importance ranking,
// skipping edits that do not apply to the current scene; LocalGlobal keeps
// the image's own plan but permutes it by the importance ranking.
enum class OrderingStrategy { Local, Global, LocalGlobal };

std::string strategy_name(OrderingStrategy s);
OrderingStrategy strategy_from_name(const std::string& name);

struct RunConfig {
    OrderingStrategy strategy = OrderingStrategy::LocalGlobal;
    int consistency_runs = 7;  // odd and >= 1
    int max_steps = 0;         // 0 means "one step per plan edit"
    int selector_retries = 3;  // edit-choice attempts before the deterministic fallback
    std::uint64_t seed = 0;
    GroundRequest ground_template;    // image and query are filled per step
    InpaintRequest inpaint_template;  // image, mask, prompt, and seed are filled per step

    void validate() const;  // throws ConfigError
};

// Outcome of one self-consistent classification: the majority verdict over
// an odd number of votes, the raw votes, and the fraction of recognized
// votes agreeing with the majority (in (1/2, 1] by construction).
struct Consensus {
    std::string verdict;
    std::vector<std::string> votes;
    double ambiguity = 0.0;
};

Consensus classify_consistent(ClassifierClient& classifier, const ImagePayload& image,
                              const std::vector<std::string>& labels, int runs);

// Grounding query plus inpainting prompts for one edit. Inserts ground the
// anchor object the new object will appear in front of; deletes ground the
// object being removed and paint its backdrop over it; substitutes ground
// the outgoing object and need no selector round-trip.
struct EditContext {
    std::string query;
    std::string prompt;
    std::string negative_prompt;
    bool selector_fallback = false;  // anchor/backdrop question failed; used "background"
};

// The selector may be null (strategies that never chose an edit with it);
// a null, unreachable, or unintelligible selector degrades to the neutral
// "background" anchor/backdrop rather than failing the run.
EditContext resolve_edit_context(SelectorClient* selector, const ImagePayload& image,
                                 const Edit& edit);

struct StepRecord {
    int index = 0;  // 1-based
    Edit edit;
    std::string image_ref;
    std::string verdict;
    std::vector<std::string> votes;
    double ambiguity = 0.0;
    bool selector_fallback = false;
};

enum class RunStatus { Completed, SourceMisclassified, Failed };

std::string run_status_name(RunStatus s);
RunStatus run_status_from_name(const std::string& name);

struct RunTrace {
    int trace_version = 1;
    ConceptAnnotation source;
    std::string target_label;
    std::string target_image;
    EditSet edit_plan;
    Consensus source_check;
    std::vector<StepRecord> steps;
    RunStatus status = RunStatus::Completed;
    std::optional<int> failed_step;  // 0 = the source check itself failed
    std::string failure_reason;
    bool flipped = false;
    std::optional<int> steps_to_flip;
    OrderingStrategy strategy = OrderingStrategy::LocalGlobal;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static RunTrace from_json(const nlohmann::json& j);  // throws SchemaMismatch
};

std::string trace_to_json_line(const RunTrace& trace);
void write_traces(std::ostream& out, const std::vector<RunTrace>& traces);
std::vector<RunTrace> read_traces(std::istream& in);  // one JSON record per line

// Runs the full loop for one source image: verify the source label, plan the
// cheapest edit set against the candidates, then edit-ground-inpaint-classify
// until the label flips or the step budget runs out. The importance table is
// required by the Global and LocalGlobal strategies and ignored by Local.
// Client failures during a step mark the trace Failed instead of throwing.
RunTrace run_counterfactual(const Taxonomy& taxonomy, const CostPolicy& policy,
                            const ConceptAnnotation& source,
                            const std::vector<ConceptAnnotation>& candidates,
                            const ImportanceTable* importance, const ServiceContracts& contracts,
                            const ImagePayload& source_image, const RunConfig& config);

} // namespace cce
