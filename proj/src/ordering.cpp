#include "cce/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "cce/errors.hpp"
#include "cce/prompts.hpp"
#include "cce/util.hpp"

namespace cce {

ConceptPair pair_key(const EditDescriptor& e) {
    switch (e.kind) {
        case EditKind::Insert: return {"", e.target};
        case EditKind::Delete: return {"", e.source};
        case EditKind::Substitute: {
            auto [lo, hi] = std::minmax(e.source, e.target);
            return {lo, hi};
        }
    }
    return {"", ""};
}

std::string pair_component_display(const std::string& name) {
    return name.empty() ? "∅" : name;
}

double ImportanceEntry::score() const {
    std::int64_t occ = occurrences();
    if (occ == 0) return 0.0;
    return static_cast<double>(insert_count - delete_count + sub_forward - sub_backward) /
           static_cast<double>(occ);
}

double ImportanceEntry::score_stddev() const {
    double s = score();
    double var = 1.0 - s * s;
    return std::sqrt(var < 0.0 ? 0.0 : var);
}

const ImportanceEntry* ImportanceTable::find(const ConceptPair& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
}

void ImportanceTable::tally(const EditDescriptor& e) {
    ImportanceEntry& entry = entries[pair_key(e)];
    switch (e.kind) {
        case EditKind::Insert:
            ++entry.insert_count;
            break;
        case EditKind::Delete:
            ++entry.delete_count;
            break;
        case EditKind::Substitute:
            if (e.source < e.target) {
                ++entry.sub_forward;
            } else {
                ++entry.sub_backward;
            }
            break;
    }
}

std::optional<EditDescriptor> ImportanceTable::endorsed_edit(const ConceptPair& key,
                                                             const ImportanceEntry& entry) {
    double s = entry.score();
    if (s == 0.0) return std::nullopt;
    if (key.first.empty()) {
        if (s > 0.0) return EditDescriptor{EditKind::Insert, "", key.second};
        return EditDescriptor{EditKind::Delete, key.second, ""};
    }
    if (s > 0.0) return EditDescriptor{EditKind::Substitute, key.first, key.second};
    return EditDescriptor{EditKind::Substitute, key.second, key.first};
}

ImportanceTable compute_importance(const Taxonomy& t, const CostPolicy& policy,
                                   const std::vector<ConceptAnnotation>& corpus_from,
                                   const std::vector<ConceptAnnotation>& corpus_to) {
    if (corpus_from.empty() || corpus_to.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "importance needs records on both sides of the class pair");
    }
    ImportanceTable table;
    table.class_from = corpus_from.front().label;
    table.class_to = corpus_to.front().label;
    for (const ConceptAnnotation& src : corpus_from) {
        auto [target, plan] = closest_target(t, policy, src, corpus_to);
        (void)target;
        for (const Edit& e : plan.edits) table.tally(e.descriptor());
    }
    return table;
}

std::string importance_table_to_tsv(const ImportanceTable& table) {
    struct Row {
        ConceptPair key;
        const ImportanceEntry* entry;
    };
    std::vector<Row> rows;
    for (const auto& [key, entry] : table.entries) rows.push_back({key, &entry});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        double ma = std::fabs(a.entry->score());
        double mb = std::fabs(b.entry->score());
        if (ma != mb) return ma > mb;
        return a.key < b.key;
    });

    std::ostringstream out;
    out << "# importance: " << table.class_from << " -> " << table.class_to << "\n";
    out << "pair_a\tpair_b\tinsert\tdelete\tsub_forward\tsub_backward\toccurrences\tscore\tstddev\n";
    char buf[64];
    for (const Row& r : rows) {
        out << pair_component_display(r.key.first) << "\t" << pair_component_display(r.key.second)
            << "\t" << r.entry->insert_count << "\t" << r.entry->delete_count << "\t"
            << r.entry->sub_forward << "\t" << r.entry->sub_backward << "\t"
            << r.entry->occurrences();
        std::snprintf(buf, sizeof(buf), "%.6f", r.entry->score());
        out << "\t" << buf;
        std::snprintf(buf, sizeof(buf), "%.6f", r.entry->score_stddev());
        out << "\t" << buf << "\n";
    }
    return out.str();
}

namespace {

// 0: table endorses the edit's direction; 1: no signal; 2: table contradicts.
int direction_bucket(const Edit& e, const ImportanceTable& table, double& magnitude) {
    magnitude = 0.0;
    const ImportanceEntry* entry = table.find(pair_key(e.descriptor()));
    if (entry == nullptr) return 1;
    double s = entry->score();
    if (s == 0.0) return 1;
    bool agrees = false;
    switch (e.kind) {
        case EditKind::Insert:
            agrees = s > 0.0;
            break;
        case EditKind::Delete:
            agrees = s < 0.0;
            break;
        case EditKind::Substitute:
            agrees = e.source < e.target ? s > 0.0 : s < 0.0;
            break;
    }
    magnitude = std::fabs(s);
    return agrees ? 0 : 2;
}

std::vector<Edit> order_by_table(const EditSet& plan, const ImportanceTable& table) {
    std::vector<Edit> out = plan.edits;
    std::stable_sort(out.begin(), out.end(), [&table](const Edit& a, const Edit& b) {
        double mag_a = 0.0, mag_b = 0.0;
        int bucket_a = direction_bucket(a, table, mag_a);
        int bucket_b = direction_bucket(b, table, mag_b);
        if (bucket_a != bucket_b) return bucket_a < bucket_b;
        // Endorsed: strong signal first. Contradicted: weak signal first.
        if (bucket_a == 0 && mag_a != mag_b) return mag_a > mag_b;
        if (bucket_a == 2 && mag_a != mag_b) return mag_a < mag_b;
        return a.descriptor() < b.descriptor();
    });
    return out;
}

} // namespace

std::vector<Edit> order_global(const EditSet& plan, const ImportanceTable& table) {
    return order_by_table(plan, table);
}

std::vector<Edit> order_local_global(const EditSet& plan, const ImportanceTable& table) {
    return order_by_table(plan, table);
}

namespace {

std::string strip_quotes(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        s = s.substr(1, s.size() - 2);
    }
    return trim(s);
}

} // namespace

SelectorTriple parse_selector_triple(std::string_view response) {
    std::string s = trim(response);
    // Tolerate an echoed "Step:" cue and a trailing period.
    std::string lowered = to_lower(s);
    if (lowered.rfind("step:", 0) == 0) s = trim(s.substr(5));
    while (!s.empty() && s.back() == '.') s = trim(s.substr(0, s.size() - 1));

    if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
        throw Error(ErrorCode::UnparsableResponse,
                    "selector response is not a bracketed triple: '" + std::string(response) + "'");
    }
    std::string inner = s.substr(1, s.size() - 2);

    // Split on top-level commas; quoted elements may contain commas.
    std::vector<std::string> elements;
    std::string current;
    char quote = '\0';
    for (char c : inner) {
        if (quote != '\0') {
            current.push_back(c);
            if (c == quote) quote = '\0';
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
            current.push_back(c);
            continue;
        }
        if (c == ',') {
            elements.push_back(current);
            current.clear();
            continue;
        }
        current.push_back(c);
    }
    elements.push_back(current);
    if (quote != '\0') {
        throw Error(ErrorCode::UnparsableResponse, "selector response has an unterminated quote");
    }
    if (elements.size() != 3) {
        throw Error(ErrorCode::UnparsableResponse,
                    "selector response must contain exactly three elements");
    }

    SelectorTriple triple;
    triple.action = to_lower(strip_quotes(elements[0]));
    triple.first = to_lower(strip_quotes(elements[1]));
    triple.second = to_lower(strip_quotes(elements[2]));
    if (triple.action.empty() || triple.first.empty() || triple.second.empty()) {
        throw Error(ErrorCode::UnparsableResponse, "selector response has empty elements");
    }
    if (triple.action != "add" && triple.action != "remove" && triple.action != "replace") {
        throw Error(ErrorCode::UnparsableResponse,
                    "selector action must be add, remove, or replace; got '" + triple.action + "'");
    }
    return triple;
}

SelectorChoice match_selector_triple(const SelectorTriple& triple,
                                     const std::vector<Edit>& remaining) {
    for (const Edit& e : remaining) {
        if (triple.action == "add" && e.kind == EditKind::Insert && e.target == triple.first) {
            return {e, triple.second};
        }
        if (triple.action == "remove" && e.kind == EditKind::Delete && e.source == triple.first) {
            return {e, triple.second};
        }
        if (triple.action == "replace" && e.kind == EditKind::Substitute &&
            e.source == triple.first && e.target == triple.second) {
            return {e, ""};
        }
    }
    throw Error(ErrorCode::UnknownEdit,
                "selector chose [" + triple.action + ", " + triple.first + ", " + triple.second +
                    "] which is not among the remaining edits");
}

SelectorChoice next_edit_local(SelectorClient& selector, const std::string& image_ref,
                               const std::vector<std::string>& scene_objects,
                               const std::vector<Edit>& remaining) {
    if (remaining.empty()) {
        throw Error(ErrorCode::EmptyInput, "no edits remain to choose from");
    }
    std::set<std::string> add_set, remove_set;
    for (const Edit& e : remaining) {
        switch (e.kind) {
            case EditKind::Insert:
                add_set.insert(e.target);
                break;
            case EditKind::Delete:
                remove_set.insert(e.source);
                break;
            case EditKind::Substitute:
                add_set.insert(e.target);
                remove_set.insert(e.source);
                break;
        }
    }
    SelectRequest request;
    request.image = ImagePayload::ref(image_ref);
    request.prompt = selector_step_prompt(
        scene_objects, std::vector<std::string>(add_set.begin(), add_set.end()),
        std::vector<std::string>(remove_set.begin(), remove_set.end()));
    SelectResponse response = selector.select(request);
    SelectorTriple triple = parse_selector_triple(response.text);
    return match_selector_triple(triple, remaining);
}

} // namespace cce
