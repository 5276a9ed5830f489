#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cce/annotation.hpp"
#include "cce/clients.hpp"
#include "cce/edit.hpp"
#include "cce/editplan.hpp"
#include "cce/taxonomy.hpp"

namespace cce {

// Undirected concept pair; the empty string stands for the "no partner" slot
// used by pure insertions/deletions and is rendered as a null sign in
// reports. Lexicographic order with "" first keeps keys canonical.
using ConceptPair = std::pair<std::string, std::string>;

ConceptPair pair_key(const EditDescriptor& e);
std::string pair_component_display(const std::string& name);  // "" -> "∅"

struct ImportanceEntry {
    std::int64_t insert_count = 0;
    std::int64_t delete_count = 0;
    std::int64_t sub_forward = 0;   // lo -> hi substitutions
    std::int64_t sub_backward = 0;  // hi -> lo substitutions

    std::int64_t occurrences() const {
        return insert_count + delete_count + sub_forward + sub_backward;
    }
    // Signed mean of the +-1 contributions; lies in [-1, 1].
    double score() const;
    // Spread of those +-1 contributions around the mean: sqrt(1 - score^2).
    double score_stddev() const;
};

struct ImportanceTable {
    std::string class_from;
    std::string class_to;
    std::map<ConceptPair, ImportanceEntry> entries;

    const ImportanceEntry* find(const ConceptPair& key) const;
    void tally(const EditDescriptor& e);
    // Directed edit the entry endorses, by dominant sign; nullopt on score 0.
    static std::optional<EditDescriptor> endorsed_edit(const ConceptPair& key,
                                                       const ImportanceEntry& entry);
};

// Plans every source image against the target corpus, tallies the resulting
// edits by concept pair, and scores each pair's directional bias.
ImportanceTable compute_importance(const Taxonomy& t, const CostPolicy& policy,
                                   const std::vector<ConceptAnnotation>& corpus_from,
                                   const std::vector<ConceptAnnotation>& corpus_to);

// Tab-separated rendering: one row per pair, sorted by descending |score|
// then by pair, with counts, score, and contribution spread.
std::string importance_table_to_tsv(const ImportanceTable& table);

// Permutation of plan.edits: edits whose direction the table endorses come
// first (descending |score|), then pairs the table lacks or scores zero,
// then direction-contradicted edits (ascending |score|); all ties broken by
// the canonical edit order.
std::vector<Edit> order_global(const EditSet& plan, const ImportanceTable& table);
std::vector<Edit> order_local_global(const EditSet& plan, const ImportanceTable& table);

// One bracketed triple from a selector response, e.g. ["replace","couch","bed"].
struct SelectorTriple {
    std::string action;  // add | remove | replace
    std::string first;
    std::string second;
};

// Accepts the canonical bracketed forms; quoting is optional and whitespace
// is forgiven. Anything else is UnparsableResponse.
SelectorTriple parse_selector_triple(std::string_view response);

struct SelectorChoice {
    Edit edit;
    std::string context_hint;  // add: anchor object; remove: revealed backdrop
};

// Maps a parsed triple onto one of the remaining edits; UnknownEdit when the
// triple names an edit that is not actually remaining.
SelectorChoice match_selector_triple(const SelectorTriple& triple,
                                     const std::vector<Edit>& remaining);

// Asks the selector to choose the single next edit for the current image.
// Throws SelectorUnavailable / UnparsableResponse / UnknownEdit; the caller
// owns retries and the deterministic fallback.
SelectorChoice next_edit_local(SelectorClient& selector, const std::string& image_ref,
                               const std::vector<std::string>& scene_objects,
                               const std::vector<Edit>& remaining);

} // namespace cce
