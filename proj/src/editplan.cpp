#include "cce/editplan.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "json.hpp"

#include "cce/assignment.hpp"
#include "cce/errors.hpp"
#include "cce/util.hpp"

namespace cce {

namespace {

void require_known(const Taxonomy& t, const ConceptAnnotation& a) {
    for (const std::string& c : a.concepts) {
        if (!t.contains(c)) {
            throw Error(ErrorCode::UnknownConcept,
                        "image '" + a.image_id + "' mentions concept '" + c +
                            "' missing from the taxonomy");
        }
    }
}

Cost edit_cost(const Taxonomy& t, const CostPolicy& policy, const EditDescriptor& e) {
    if (policy.is_nonactionable(e)) return policy.infinite;
    switch (e.kind) {
        case EditKind::Insert: return t.insertion_cost(e.target);
        case EditKind::Delete: return t.deletion_cost(e.source);
        case EditKind::Substitute: return t.concept_distance(e.source, e.target);
    }
    return Cost::infinite();
}

void sort_edits(std::vector<Edit>& edits) {
    std::sort(edits.begin(), edits.end(), edit_identity_less);
}

} // namespace

nlohmann::json edit_to_json(const Edit& e) {
    nlohmann::json j;
    j["kind"] = edit_kind_name(e.kind);
    if (e.kind != EditKind::Insert) j["source"] = e.source;
    if (e.kind != EditKind::Delete) j["target"] = e.target;
    j["cost"] = e.cost.value();
    return j;
}

Edit edit_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.contains("cost")) {
        throw Error(ErrorCode::ParseError, "edit record needs kind and cost");
    }
    std::string kind = j["kind"].get<std::string>();
    Edit e;
    if (kind == "insert") {
        e.kind = EditKind::Insert;
    } else if (kind == "delete") {
        e.kind = EditKind::Delete;
    } else if (kind == "substitute") {
        e.kind = EditKind::Substitute;
    } else {
        throw Error(ErrorCode::ParseError, "unknown edit kind '" + kind + "'");
    }
    if (j.contains("source")) e.source = j["source"].get<std::string>();
    if (j.contains("target")) e.target = j["target"].get<std::string>();
    if (e.kind != EditKind::Insert && e.source.empty()) {
        throw Error(ErrorCode::ParseError, "edit of kind " + kind + " needs a source");
    }
    if (e.kind != EditKind::Delete && e.target.empty()) {
        throw Error(ErrorCode::ParseError, "edit of kind " + kind + " needs a target");
    }
    e.cost = Cost(j["cost"].get<double>());
    return e;
}

nlohmann::json edit_set_to_json_value(const EditSet& s) {
    nlohmann::json j;
    j["edits"] = nlohmann::json::array();
    for (const Edit& e : s.edits) j["edits"].push_back(edit_to_json(e));
    j["total_cost"] = s.total_cost.value();
    j["source_image"] = s.source_image;
    j["target_image"] = s.target_image;
    return j;
}

std::string edit_set_to_json(const EditSet& s, int indent) {
    return edit_set_to_json_value(s).dump(indent);
}

EditSet edit_set_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("bad edit set document: ") + e.what());
    }
    return edit_set_from_json_value(j);
}

EditSet edit_set_from_json_value(const nlohmann::json& j) {
    EditSet s;
    if (!j.is_object() || !j.contains("edits") || !j.contains("total_cost")) {
        throw Error(ErrorCode::ParseError, "edit set document needs edits and total_cost");
    }
    for (const auto& je : j["edits"]) s.edits.push_back(edit_from_json(je));
    s.total_cost = Cost(j["total_cost"].get<double>());
    if (j.contains("source_image")) s.source_image = j["source_image"].get<std::string>();
    if (j.contains("target_image")) s.target_image = j["target_image"].get<std::string>();
    return s;
}

EditSet min_edit_set(const Taxonomy& t, const CostPolicy& policy,
                     const ConceptAnnotation& src, const ConceptAnnotation& tgt) {
    require_known(t, src);
    require_known(t, tgt);

    const int m = static_cast<int>(src.concepts.size());
    const int n = static_cast<int>(tgt.concepts.size());
    const int size = m + n;

    EditSet out;
    out.source_image = src.image_id;
    out.target_image = tgt.image_id;
    out.total_cost = Cost(0.0);
    if (size == 0) return out;

    // Rows: m source instances then n insertion dummies (one per target
    // instance). Columns: n target instances then m deletion dummies (one per
    // source instance). Each real cell carries the edit it stands for.
    struct CellEdit {
        bool real = false;  // false: dummy-dummy or identity pairing (no edit)
        EditDescriptor edit;
    };
    std::vector<std::vector<Cost>> cell_cost(
        static_cast<std::size_t>(size), std::vector<Cost>(static_cast<std::size_t>(size), Cost(0.0)));
    std::vector<std::vector<CellEdit>> cell_edit(
        static_cast<std::size_t>(size), std::vector<CellEdit>(static_cast<std::size_t>(size)));

    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            Cost c(0.0);
            CellEdit ce;
            if (i < m && j < n) {
                const std::string& a = src.concepts[static_cast<std::size_t>(i)];
                const std::string& b = tgt.concepts[static_cast<std::size_t>(j)];
                if (a == b) {
                    c = Cost(0.0);  // identity pairing, not an edit
                } else {
                    ce.real = true;
                    ce.edit = {EditKind::Substitute, a, b};
                    c = edit_cost(t, policy, ce.edit);
                }
            } else if (i < m) {
                // Source instance vs deletion dummies: only its own dummy.
                if (j - n == i) {
                    ce.real = true;
                    ce.edit = {EditKind::Delete, src.concepts[static_cast<std::size_t>(i)], ""};
                    c = edit_cost(t, policy, ce.edit);
                } else {
                    c = Cost::infinite();
                }
            } else if (j < n) {
                // Insertion dummy vs target instances: only its own target.
                if (i - m == j) {
                    ce.real = true;
                    ce.edit = {EditKind::Insert, "", tgt.concepts[static_cast<std::size_t>(j)]};
                    c = edit_cost(t, policy, ce.edit);
                } else {
                    c = Cost::infinite();
                }
            } else {
                c = Cost(0.0);  // dummy-to-dummy
            }
            cell_cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c;
            cell_edit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::move(ce);
        }
    }

    // Canonical rank of every distinct candidate edit; the solver's secondary
    // objective minimizes the summed rank, fixing one optimum deterministically.
    std::set<EditDescriptor> candidates;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
            if (cell_edit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].real)
                candidates.insert(cell_edit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].edit);
    std::map<EditDescriptor, std::int64_t> rank;
    std::int64_t next_rank = 1;
    for (const EditDescriptor& e : candidates) rank[e] = next_rank++;

    // Forbidden cells get a surrogate weight exceeding any achievable total,
    // plus a flag so choosing one is detected as infeasibility.
    double finite_sum = 0.0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
            if (!cell_cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].is_infinite())
                finite_sum += cell_cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].value();
    const double surrogate = finite_sum + 1.0;

    std::vector<std::vector<SolverWeight>> weights(
        static_cast<std::size_t>(size), std::vector<SolverWeight>(static_cast<std::size_t>(size)));
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            const Cost& c = cell_cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const CellEdit& ce = cell_edit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            SolverWeight w;
            w.primary = c.is_infinite() ? surrogate : c.value();
            w.tiebreak = ce.real && !c.is_infinite() ? rank[ce.edit] : 0;
            weights[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = w;
        }
    }

    AssignmentResult solved = solve_assignment(weights);

    std::vector<double> parts;
    for (int i = 0; i < size; ++i) {
        int j = solved.col_of_row[static_cast<std::size_t>(i)];
        const Cost& c = cell_cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const CellEdit& ce = cell_edit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (c.is_infinite()) {
            throw Error(ErrorCode::Infeasible,
                        "no edit set exists: every complete assignment uses a forbidden pairing");
        }
        if (ce.real) {
            out.edits.push_back({ce.edit.kind, ce.edit.source, ce.edit.target, c});
            parts.push_back(c.value());
        }
    }
    sort_edits(out.edits);
    out.total_cost = Cost(pairwise_sum(parts));
    return out;
}

EditSet brute_force_edit_set(const Taxonomy& t, const CostPolicy& policy,
                             const ConceptAnnotation& src, const ConceptAnnotation& tgt) {
    if (src.concepts.size() > 6 || tgt.concepts.size() > 6) {
        throw Error(ErrorCode::TooLarge, "brute-force oracle is limited to 6 concepts per side");
    }
    require_known(t, src);
    require_known(t, tgt);

    const int m = static_cast<int>(src.concepts.size());
    const int n = static_cast<int>(tgt.concepts.size());

    EditSet best;
    best.total_cost = Cost::infinite();
    bool found = false;

    std::vector<int> match(static_cast<std::size_t>(m), -1);  // src index -> tgt index or -1
    std::vector<char> used(static_cast<std::size_t>(n), 0);

    auto evaluate = [&]() {
        std::vector<Edit> edits;
        Cost total(0.0);
        for (int i = 0; i < m; ++i) {
            const std::string& a = src.concepts[static_cast<std::size_t>(i)];
            int j = match[static_cast<std::size_t>(i)];
            if (j == -1) {
                EditDescriptor d{EditKind::Delete, a, ""};
                Cost c = edit_cost(t, policy, d);
                total += c;
                edits.push_back({d.kind, d.source, d.target, c});
            } else {
                const std::string& b = tgt.concepts[static_cast<std::size_t>(j)];
                if (a == b) continue;
                EditDescriptor d{EditKind::Substitute, a, b};
                Cost c = edit_cost(t, policy, d);
                total += c;
                edits.push_back({d.kind, d.source, d.target, c});
            }
        }
        for (int j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            EditDescriptor d{EditKind::Insert, "", tgt.concepts[static_cast<std::size_t>(j)]};
            Cost c = edit_cost(t, policy, d);
            total += c;
            edits.push_back({d.kind, d.source, d.target, c});
        }
        if (total.is_infinite()) return;
        sort_edits(edits);
        bool better = !found || total < best.total_cost;
        if (!better && total == best.total_cost) {
            // Deterministic: prefer fewer edits, then lexicographic edit list.
            if (edits.size() != best.edits.size()) {
                better = edits.size() < best.edits.size();
            } else {
                for (std::size_t k = 0; k < edits.size(); ++k) {
                    auto da = edits[k].descriptor();
                    auto db = best.edits[k].descriptor();
                    if (da != db) {
                        better = da < db;
                        break;
                    }
                }
            }
        }
        if (better) {
            best.edits = std::move(edits);
            best.total_cost = total;
            found = true;
        }
    };

    std::function<void(int)> recurse = [&](int i) {
        if (i == m) {
            evaluate();
            return;
        }
        match[static_cast<std::size_t>(i)] = -1;  // delete this source instance
        recurse(i + 1);
        for (int j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            used[static_cast<std::size_t>(j)] = 1;
            match[static_cast<std::size_t>(i)] = j;
            recurse(i + 1);
            used[static_cast<std::size_t>(j)] = 0;
            match[static_cast<std::size_t>(i)] = -1;
        }
    };
    recurse(0);

    if (!found) {
        throw Error(ErrorCode::Infeasible,
                    "no edit set exists: every complete assignment uses a forbidden pairing");
    }
    best.source_image = src.image_id;
    best.target_image = tgt.image_id;
    return best;
}

std::pair<ConceptAnnotation, EditSet> closest_target(const Taxonomy& t, const CostPolicy& policy,
                                                     const ConceptAnnotation& src,
                                                     const std::vector<ConceptAnnotation>& candidates) {
    if (candidates.empty()) {
        throw Error(ErrorCode::EmptyCandidates, "closest-target search needs at least one candidate");
    }
    const ConceptAnnotation* best_ann = nullptr;
    EditSet best_set;
    for (const ConceptAnnotation& cand : candidates) {
        EditSet s = min_edit_set(t, policy, src, cand);
        bool better = best_ann == nullptr;
        if (!better) {
            if (s.total_cost < best_set.total_cost) {
                better = true;
            } else if (s.total_cost == best_set.total_cost) {
                if (s.edits.size() != best_set.edits.size()) {
                    better = s.edits.size() < best_set.edits.size();
                } else {
                    better = cand.image_id < best_ann->image_id;
                }
            }
        }
        if (better) {
            best_ann = &cand;
            best_set = std::move(s);
        }
    }
    return {*best_ann, best_set};
}

ConceptAnnotation apply_edits(const ConceptAnnotation& src, const std::vector<Edit>& edits) {
    std::multiset<std::string> running(src.concepts.begin(), src.concepts.end());
    auto erase_one = [&running](const std::string& c, const Edit& e) {
        auto it = running.find(c);
        if (it == running.end()) {
            throw Error(ErrorCode::MissingSource,
                        edit_to_string(e) + " names a concept absent from the working multiset");
        }
        running.erase(it);
    };
    for (const Edit& e : edits) {
        switch (e.kind) {
            case EditKind::Insert:
                running.insert(e.target);
                break;
            case EditKind::Delete:
                erase_one(e.source, e);
                break;
            case EditKind::Substitute:
                erase_one(e.source, e);
                running.insert(e.target);
                break;
        }
    }
    ConceptAnnotation out;
    out.image_id = src.image_id;
    out.label = src.label;
    out.concepts.assign(running.begin(), running.end());
    return out;
}

} // namespace cce
