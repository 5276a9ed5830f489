#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cce/taxonomy.hpp"

namespace cce {

// An image's semantic record: its class label and the multiset of concepts
// visible in it. Concepts are normalized tokens and may repeat.
struct ConceptAnnotation {
    std::string image_id;
    std::string label;
    std::vector<std::string> concepts;

    std::vector<std::string> sorted_concepts() const;
};

bool same_concept_multiset(const ConceptAnnotation& a, const ConceptAnnotation& b);

// One JSON object per line: {"image_id": ..., "label": ..., "concepts": [...]}.
ConceptAnnotation parse_annotation(std::string_view json_text);
std::string annotation_to_json_line(const ConceptAnnotation& a);

// Parses a whole corpus document. Rejects empty corpora.
std::vector<ConceptAnnotation> parse_corpus(std::string_view document);

// Fails fast if any annotation mentions a concept the taxonomy lacks.
void validate_corpus(const Taxonomy& t, const std::vector<ConceptAnnotation>& corpus);

} // namespace cce
