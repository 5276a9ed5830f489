#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cce/annotation.hpp"
#include "cce/cost.hpp"
#include "cce/edit.hpp"
#include "cce/taxonomy.hpp"

namespace cce {

// A minimal set of edits turning one annotation's concept multiset into
// another's. Edits are listed in canonical (kind, source, target) order.
struct EditSet {
    std::vector<Edit> edits;
    Cost total_cost;
    std::string source_image;
    std::string target_image;
};

nlohmann::json edit_to_json(const Edit& e);
Edit edit_from_json(const nlohmann::json& j);

nlohmann::json edit_set_to_json_value(const EditSet& s);
EditSet edit_set_from_json_value(const nlohmann::json& j);
std::string edit_set_to_json(const EditSet& s, int indent = -1);
EditSet edit_set_from_json(std::string_view text);

// Globally minimal edit set via minimum-cost matching between the two
// concept multisets, with one deletion dummy per source instance and one
// insertion dummy per target instance. Shared concepts pair at zero cost and
// produce no edit. Among equal-cost optima, returns the assignment minimizing
// the summed canonical rank of its edits, which keeps results deterministic.
EditSet min_edit_set(const Taxonomy& t, const CostPolicy& policy,
                     const ConceptAnnotation& src, const ConceptAnnotation& tgt);

// Exhaustive oracle for min_edit_set: enumerates every partial injective
// pairing plus residual deletes/inserts. Only for tiny instances.
EditSet brute_force_edit_set(const Taxonomy& t, const CostPolicy& policy,
                             const ConceptAnnotation& src, const ConceptAnnotation& tgt);

// Candidate with the cheapest edit set from src; ties broken by fewer edits,
// then lexicographically smaller image_id.
std::pair<ConceptAnnotation, EditSet> closest_target(const Taxonomy& t, const CostPolicy& policy,
                                                     const ConceptAnnotation& src,
                                                     const std::vector<ConceptAnnotation>& candidates);

// Applies edits sequentially to the concept multiset; every Delete/Substitute
// source must be present when its turn comes. Resulting concepts are sorted.
ConceptAnnotation apply_edits(const ConceptAnnotation& src, const std::vector<Edit>& edits);

} // namespace cce
