#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "cce/errors.hpp"
#include "cce/ordering.hpp"
#include "cce/prompts.hpp"

using namespace cce;

namespace {

const char* kSceneGraph =
    "scene car 3\n"
    "scene tree 3\n"
    "scene house 3\n"
    "car taxi 1\n"
    "tree house 2\n";

ConceptAnnotation ann(std::string id, std::string label, std::vector<std::string> concepts) {
    ConceptAnnotation a;
    a.image_id = std::move(id);
    a.label = std::move(label);
    a.concepts = std::move(concepts);
    return a;
}

Edit mk(EditKind kind, std::string source, std::string target, double cost = 1.0) {
    return Edit{kind, std::move(source), std::move(target), Cost(cost)};
}

std::vector<ConceptAnnotation> hand_corpus_from() {
    return {ann("s1", "l", {"car", "tree"}), ann("s2", "l", {"car"}),
            ann("s3", "l", {"car", "house", "tree"})};
}

std::vector<ConceptAnnotation> hand_corpus_to() {
    return {ann("m1", "m", {"tree"}), ann("m2", "m", {"taxi"}),
            ann("m3", "m", {"taxi", "house", "house"})};
}

struct FakeSelector : SelectorClient {
    std::string canned;
    SelectRequest last_request;
    SelectResponse select(const SelectRequest& request) override {
        last_request = request;
        return SelectResponse{canned};
    }
};

} // namespace

TEST_CASE("hand-counted corpus produces the expected importance table") {
    Taxonomy t = Taxonomy::load(kSceneGraph);
    ImportanceTable table = compute_importance(t, {}, hand_corpus_from(), hand_corpus_to());

    REQUIRE(table.entries.size() == 3);
    const ImportanceEntry* car = table.find({"", "car"});
    REQUIRE(car != nullptr);
    CHECK(car->delete_count == 1);
    CHECK(car->insert_count == 0);
    CHECK(car->occurrences() == 1);
    CHECK(car->score() == -1.0);

    const ImportanceEntry* car_taxi = table.find({"car", "taxi"});
    REQUIRE(car_taxi != nullptr);
    CHECK(car_taxi->sub_forward == 2);
    CHECK(car_taxi->sub_backward == 0);
    CHECK(car_taxi->occurrences() == 2);
    CHECK(car_taxi->score() == 1.0);

    const ImportanceEntry* house_tree = table.find({"house", "tree"});
    REQUIRE(house_tree != nullptr);
    CHECK(house_tree->sub_backward == 1);
    CHECK(house_tree->occurrences() == 1);
    CHECK(house_tree->score() == -1.0);

    CHECK(table.class_from == "l");
    CHECK(table.class_to == "m");
}

TEST_CASE("importance is insensitive to corpus ordering") {
    Taxonomy t = Taxonomy::load(kSceneGraph);
    ImportanceTable base = compute_importance(t, {}, hand_corpus_from(), hand_corpus_to());

    auto from = hand_corpus_from();
    auto to = hand_corpus_to();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(from.begin(), from.end(), rng);
        std::shuffle(to.begin(), to.end(), rng);
        ImportanceTable shuffled = compute_importance(t, {}, from, to);
        CHECK(importance_table_to_tsv(shuffled) == importance_table_to_tsv(base));
    }
}

TEST_CASE("single insert scores plus one") {
    Taxonomy t = Taxonomy::load("scene curtain\n");
    ImportanceTable table =
        compute_importance(t, {}, {ann("a", "l", {})}, {ann("b", "m", {"curtain"})});
    const ImportanceEntry* e = table.find({"", "curtain"});
    REQUIRE(e != nullptr);
    CHECK(e->insert_count == 1);
    CHECK(e->score() == 1.0);
    CHECK(e->score_stddev() == 0.0);
}

TEST_CASE("balanced forward and backward substitutions score zero") {
    ImportanceTable table;
    table.entries[{"bed", "couch"}] = ImportanceEntry{0, 0, 2, 2};
    CHECK(table.entries[{"bed", "couch"}].score() == 0.0);
    CHECK(ImportanceTable::endorsed_edit({"bed", "couch"}, table.entries[{"bed", "couch"}]) ==
          std::nullopt);
}

TEST_CASE("scores stay within unit range and empty corpora are rejected") {
    Taxonomy t = Taxonomy::load(kSceneGraph);
    ImportanceTable table = compute_importance(t, {}, hand_corpus_from(), hand_corpus_to());
    for (const auto& [key, entry] : table.entries) {
        CHECK(entry.occurrences() >= 1);
        CHECK(std::fabs(entry.score()) <= 1.0);
    }
    CHECK_THROWS_AS(compute_importance(t, {}, {}, hand_corpus_to()), Error);
    CHECK_THROWS_AS(compute_importance(t, {}, hand_corpus_from(), {}), Error);
}

TEST_CASE("endorsed edits follow the dominant sign") {
    ImportanceEntry mostly_deleted{1, 9, 0, 0};
    auto del = ImportanceTable::endorsed_edit({"", "billboard"}, mostly_deleted);
    REQUIRE(del.has_value());
    CHECK(del->kind == EditKind::Delete);
    CHECK(del->source == "billboard");

    ImportanceEntry mostly_inserted{9, 1, 0, 0};
    auto ins = ImportanceTable::endorsed_edit({"", "billboard"}, mostly_inserted);
    REQUIRE(ins.has_value());
    CHECK(ins->kind == EditKind::Insert);
    CHECK(ins->target == "billboard");

    ImportanceEntry backwardish{0, 0, 3, 7};
    auto sub = ImportanceTable::endorsed_edit({"bed", "couch"}, backwardish);
    REQUIRE(sub.has_value());
    CHECK(sub->kind == EditKind::Substitute);
    CHECK(sub->source == "couch");
    CHECK(sub->target == "bed");
}

TEST_CASE("global ordering ranks endorsed strong signals first, absent pairs, then contradictions") {
    ImportanceTable table;
    table.entries[{"", "billboard"}] = ImportanceEntry{1, 9, 0, 0};  // score -0.8
    table.entries[{"bed", "couch"}] = ImportanceEntry{0, 0, 3, 7};   // score -0.4

    EditSet plan;
    plan.edits = {mk(EditKind::Insert, "", "lamp"),           // absent from table
                  mk(EditKind::Insert, "", "billboard"),      // contradicts -0.8
                  mk(EditKind::Delete, "billboard", ""),      // endorsed, |s|=0.8
                  mk(EditKind::Substitute, "couch", "bed")};  // endorsed, |s|=0.4

    std::vector<Edit> ordered = order_global(plan, table);
    REQUIRE(ordered.size() == 4);
    CHECK(ordered[0].kind == EditKind::Delete);
    CHECK(ordered[0].source == "billboard");
    CHECK(ordered[1].kind == EditKind::Substitute);
    CHECK(ordered[2].target == "lamp");
    CHECK(ordered[3].target == "billboard");

    // Identical rule for the image-scoped variant.
    std::vector<Edit> lg = order_local_global(plan, table);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        CHECK(edit_identity_equal(lg[i], ordered[i]));
    }
}

TEST_CASE("ordering is a permutation and falls back to canonical order without signals") {
    ImportanceTable empty;
    EditSet plan;
    plan.edits = {mk(EditKind::Substitute, "tree", "house"), mk(EditKind::Delete, "car", ""),
                  mk(EditKind::Insert, "", "taxi")};
    std::vector<Edit> ordered = order_global(plan, empty);
    REQUIRE(ordered.size() == plan.edits.size());
    CHECK(ordered[0].kind == EditKind::Insert);
    CHECK(ordered[1].kind == EditKind::Delete);
    CHECK(ordered[2].kind == EditKind::Substitute);

    std::multiset<std::string> before, after;
    for (const Edit& e : plan.edits) before.insert(edit_to_string(e));
    for (const Edit& e : ordered) after.insert(edit_to_string(e));
    CHECK(before == after);
}

TEST_CASE("ranking is invariant to a common positive scaling of all tallies") {
    ImportanceTable table;
    table.entries[{"", "billboard"}] = ImportanceEntry{1, 9, 0, 0};
    table.entries[{"bed", "couch"}] = ImportanceEntry{0, 0, 3, 7};
    table.entries[{"", "lamp"}] = ImportanceEntry{5, 1, 0, 0};

    ImportanceTable scaled;
    for (const auto& [key, e] : table.entries) {
        scaled.entries[key] =
            ImportanceEntry{e.insert_count * 4, e.delete_count * 4, e.sub_forward * 4,
                            e.sub_backward * 4};
    }

    EditSet plan;
    plan.edits = {mk(EditKind::Delete, "billboard", ""), mk(EditKind::Insert, "", "lamp"),
                  mk(EditKind::Substitute, "couch", "bed"), mk(EditKind::Insert, "", "curtain")};
    std::vector<Edit> a = order_global(plan, table);
    std::vector<Edit> b = order_global(plan, scaled);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(edit_identity_equal(a[i], b[i]));
}

TEST_CASE("importance table renders as sorted tab-separated rows") {
    Taxonomy t = Taxonomy::load(kSceneGraph);
    ImportanceTable table = compute_importance(t, {}, hand_corpus_from(), hand_corpus_to());
    std::string tsv = importance_table_to_tsv(table);
    CHECK(tsv.find("# importance: l -> m") != std::string::npos);
    CHECK(tsv.find("pair_a\tpair_b\tinsert\tdelete") != std::string::npos);
    CHECK(tsv.find("∅\tcar\t0\t1\t0\t0\t1\t-1.000000") != std::string::npos);
    CHECK(tsv.find("car\ttaxi\t0\t0\t2\t0\t2\t1.000000") != std::string::npos);
    CHECK(tsv.find("house\ttree\t0\t0\t0\t1\t1\t-1.000000") != std::string::npos);
}

TEST_CASE("selector triples parse in canonical and tolerant forms") {
    SelectorTriple a = parse_selector_triple(R"(["add", "curtain", "window"])");
    CHECK(a.action == "add");
    CHECK(a.first == "curtain");
    CHECK(a.second == "window");

    SelectorTriple r = parse_selector_triple(R"(["remove", "painting", "wall"])");
    CHECK(r.action == "remove");
    CHECK(r.first == "painting");

    SelectorTriple s = parse_selector_triple(R"(["replace", "couch", "bed"])");
    CHECK(s.action == "replace");
    CHECK(s.first == "couch");
    CHECK(s.second == "bed");

    // Echoed cue, trailing period, single quotes, bare tokens.
    SelectorTriple t1 = parse_selector_triple("Step: ['add', 'curtain', 'window'].");
    CHECK(t1.first == "curtain");
    SelectorTriple t2 = parse_selector_triple("[add, curtain, window]");
    CHECK(t2.second == "window");
    SelectorTriple t3 = parse_selector_triple(R"(["remove", "painting", "the wall, behind"])");
    CHECK(t3.second == "the wall, behind");
}

TEST_CASE("malformed selector responses are rejected") {
    const char* malformed[] = {
        "not a list",
        "[]",
        "[add]",
        "[add, curtain]",
        "[add, curtain, window, extra]",
        "(add, curtain, window)",
        "[, curtain, window]",
        "[add, , window]",
        "[modify, curtain, window]",
        "[\"add\", \"curtain\"",
    };
    for (const char* text : malformed) {
        try {
            parse_selector_triple(text);
            FAIL_CHECK("accepted malformed response: " << text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnparsableResponse);
        }
    }
}

TEST_CASE("triples resolve against remaining edits or raise UnknownEdit") {
    std::vector<Edit> remaining = {mk(EditKind::Insert, "", "curtain"),
                                   mk(EditKind::Delete, "painting", ""),
                                   mk(EditKind::Substitute, "couch", "bed")};

    SelectorChoice add = match_selector_triple({"add", "curtain", "window"}, remaining);
    CHECK(add.edit.kind == EditKind::Insert);
    CHECK(add.edit.target == "curtain");
    CHECK(add.context_hint == "window");

    SelectorChoice rep = match_selector_triple({"replace", "couch", "bed"}, remaining);
    CHECK(rep.edit.kind == EditKind::Substitute);

    try {
        match_selector_triple({"remove", "couch", "floor"}, remaining);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownEdit);
    }
}

TEST_CASE("next_edit_local builds the step prompt and returns a remaining edit") {
    FakeSelector selector;
    selector.canned = R"(["replace", "couch", "bed"])";
    std::vector<Edit> remaining = {mk(EditKind::Substitute, "couch", "bed"),
                                   mk(EditKind::Delete, "lamp", "")};
    SelectorChoice choice =
        next_edit_local(selector, "img-1", {"couch", "lamp", "window"}, remaining);
    CHECK(choice.edit.kind == EditKind::Substitute);
    CHECK(choice.edit.source == "couch");

    CHECK(selector.last_request.image.mode == "ref");
    CHECK(selector.last_request.image.data == "img-1");
    CHECK(selector.last_request.prompt.find("only a single edit") != std::string::npos);
    CHECK(selector.last_request.prompt.find("Object list: [couch, lamp, window]") != std::string::npos);
    CHECK(selector.last_request.prompt.find("Add list: [bed]") != std::string::npos);
    CHECK(selector.last_request.prompt.find("Remove list: [couch, lamp]") != std::string::npos);

    selector.canned = "[remove, lamp, background]";
    SelectorChoice removed = next_edit_local(selector, "img-1", {"couch", "lamp"}, remaining);
    CHECK(removed.edit.kind == EditKind::Delete);
    CHECK(removed.context_hint == "background");

    CHECK_THROWS_AS(next_edit_local(selector, "img-1", {}, {}), Error);
}
