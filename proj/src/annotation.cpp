#include "cce/annotation.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

#include "cce/errors.hpp"
#include "cce/util.hpp"

namespace cce {

std::vector<std::string> ConceptAnnotation::sorted_concepts() const {
    std::vector<std::string> out = concepts;
    std::sort(out.begin(), out.end());
    return out;
}

bool same_concept_multiset(const ConceptAnnotation& a, const ConceptAnnotation& b) {
    return a.sorted_concepts() == b.sorted_concepts();
}

ConceptAnnotation parse_annotation(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("bad annotation record: ") + e.what());
    }
    if (!j.is_object() || !j.contains("image_id") || !j.contains("label") || !j.contains("concepts")) {
        throw Error(ErrorCode::ParseError,
                    "annotation record needs image_id, label, and concepts fields");
    }
    if (!j["image_id"].is_string() || !j["label"].is_string() || !j["concepts"].is_array()) {
        throw Error(ErrorCode::ParseError, "annotation record has wrongly typed fields");
    }
    ConceptAnnotation a;
    a.image_id = j["image_id"].get<std::string>();
    a.label = normalize_token(j["label"].get<std::string>());
    if (a.image_id.empty()) {
        throw Error(ErrorCode::ParseError, "annotation record has empty image_id");
    }
    for (const auto& c : j["concepts"]) {
        if (!c.is_string()) {
            throw Error(ErrorCode::ParseError, "annotation concepts must be strings");
        }
        std::string name = normalize_token(c.get<std::string>());
        if (name.empty()) {
            throw Error(ErrorCode::ParseError, "annotation record has empty concept name");
        }
        a.concepts.push_back(std::move(name));
    }
    return a;
}

std::string annotation_to_json_line(const ConceptAnnotation& a) {
    nlohmann::json j;
    j["image_id"] = a.image_id;
    j["label"] = a.label;
    j["concepts"] = a.concepts;
    return j.dump();
}

std::vector<ConceptAnnotation> parse_corpus(std::string_view document) {
    std::vector<ConceptAnnotation> out;
    std::istringstream lines{std::string(document)};
    std::string raw;
    int line_no = 0;
    while (std::getline(lines, raw)) {
        ++line_no;
        std::string t = trim(raw);
        if (t.empty() || t[0] == '#') continue;
        try {
            out.push_back(parse_annotation(t));
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError,
                        "corpus line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (out.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "corpus document contains no records");
    }
    return out;
}

void validate_corpus(const Taxonomy& t, const std::vector<ConceptAnnotation>& corpus) {
    for (const ConceptAnnotation& a : corpus) {
        for (const std::string& c : a.concepts) {
            if (!t.contains(c)) {
                throw Error(ErrorCode::UnknownConcept,
                            "image '" + a.image_id + "' mentions concept '" + c +
                                "' missing from the taxonomy");
            }
        }
    }
}

} // namespace cce
