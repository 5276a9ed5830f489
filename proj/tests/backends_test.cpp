#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>

#include "httplib.h"

#include "cce/backends.hpp"
#include "cce/editplan.hpp"
#include "cce/errors.hpp"
#include "cce/prompts.hpp"
#include "cce/remote.hpp"
#include "cce/util.hpp"

using namespace cce;

namespace {

ConceptAnnotation ann(std::string id, std::string label, std::vector<std::string> concepts) {
    ConceptAnnotation a;
    a.image_id = std::move(id);
    a.label = std::move(label);
    a.concepts = std::move(concepts);
    return a;
}

std::vector<PresenceRule> car_rules() {
    return {{{"car"}, {}, "stop"}, {{}, {}, "move"}};
}

ClassifyRequest classify_request(const std::string& ref) {
    ClassifyRequest r;
    r.image = ImagePayload::ref(ref);
    r.labels = {"move", "stop"};
    return r;
}

} // namespace

TEST_CASE("presence rules fire in order with a default fallback") {
    auto registry = std::make_shared<SceneRegistry>();
    std::string with_car = registry->put(ann("a", "l", {"car", "pole"}));
    std::string without = registry->put(ann("b", "l", {"pole"}));

    MockClassifier clf(registry, car_rules(), 0.0, 1);
    CHECK(clf.classify(classify_request(with_car)).label == "stop");
    CHECK(clf.classify(classify_request(without)).label == "move");

    MockClassifier no_default(registry, {{{"car"}, {}, "stop"}}, 0.0, 1);
    CHECK_THROWS_AS(no_default.classify(classify_request(without)), Error);

    CHECK_THROWS_AS(clf.classify(classify_request("mockimg/unregistered")), Error);
}

TEST_CASE("noisy classification replays identically under the same seed") {
    auto registry = std::make_shared<SceneRegistry>();
    std::string ref = registry->put(ann("a", "l", {"pole"}));

    auto sequence = [&](std::uint64_t seed) {
        MockClassifier clf(registry, car_rules(), 1.0, seed);
        std::vector<std::string> out;
        for (int i = 0; i < 20; ++i) out.push_back(clf.classify(classify_request(ref)).label);
        return out;
    };
    auto first = sequence(99);
    CHECK(first == sequence(99));
    CHECK(first != sequence(100));
    // With full noise both labels should eventually appear.
    CHECK(std::count(first.begin(), first.end(), "stop") > 0);
    CHECK(std::count(first.begin(), first.end(), "move") > 0);
}

TEST_CASE("mock editor reconstructs and applies all three edit kinds") {
    auto registry = std::make_shared<SceneRegistry>();
    ConceptAnnotation scene = ann("img", "l", {"couch", "lamp"});
    std::string ref = registry->put(scene);
    MockEditor editor(registry, 0.0, 7);

    auto run_edit = [&](const std::string& current, const std::string& query,
                        const std::string& prompt) {
        GroundRequest g;
        g.image = ImagePayload::ref(current);
        g.query = query;
        GroundResponse gr = editor.ground(g);
        CHECK(gr.mask.find("mask/" + query + "/") == 0);
        REQUIRE(gr.boxes.size() == 1);

        InpaintRequest ir;
        ir.image = ImagePayload::ref(current);
        ir.mask = gr.mask;
        ir.prompt = prompt;
        ir.negative_prompt = default_negative_prompt();
        ir.seed = 5;
        return editor.inpaint(ir).image.data;
    };

    // Substitute couch -> bed: ground the couch, paint a bed.
    std::string after_sub = run_edit(ref, "couch", inpaint_prompt_substitute("bed"));
    CHECK(registry->get(after_sub).sorted_concepts() == std::vector<std::string>{"bed", "lamp"});

    // Delete lamp: ground the lamp, paint the revealed wall.
    std::string after_del = run_edit(after_sub, "lamp", inpaint_prompt_delete("wall"));
    CHECK(registry->get(after_del).sorted_concepts() == std::vector<std::string>{"bed"});

    // Insert pillow in front of the bed: ground the anchor.
    std::string after_ins = run_edit(after_del, "bed", inpaint_prompt_insert("pillow", "bed"));
    CHECK(registry->get(after_ins).sorted_concepts() == std::vector<std::string>{"bed", "pillow"});

    // Trajectory equals the symbolic oracle.
    ConceptAnnotation oracle = apply_edits(
        scene, {Edit{EditKind::Substitute, "couch", "bed", Cost(1)},
                Edit{EditKind::Delete, "lamp", "", Cost(1)},
                Edit{EditKind::Insert, "", "pillow", Cost(1)}});
    CHECK(registry->get(after_ins).sorted_concepts() == oracle.sorted_concepts());
}

TEST_CASE("image references are stable for identical inputs and seed") {
    auto editor_run = [](std::uint64_t inpaint_seed) {
        auto registry = std::make_shared<SceneRegistry>();
        std::string ref = registry->put(ann("img", "l", {"couch"}));
        MockEditor editor(registry, 0.0, 42);
        GroundRequest g;
        g.image = ImagePayload::ref(ref);
        g.query = "couch";
        GroundResponse gr = editor.ground(g);
        InpaintRequest ir;
        ir.image = ImagePayload::ref(ref);
        ir.mask = gr.mask;
        ir.prompt = inpaint_prompt_substitute("bed");
        ir.seed = inpaint_seed;
        return editor.inpaint(ir).image.data;
    };
    CHECK(editor_run(5) == editor_run(5));
    CHECK(editor_run(5) != editor_run(6));
}

TEST_CASE("full failure rate leaves the scene unchanged under a fresh reference") {
    auto registry = std::make_shared<SceneRegistry>();
    std::string ref = registry->put(ann("img", "l", {"couch"}));
    MockEditor editor(registry, 1.0, 42);

    GroundRequest g;
    g.image = ImagePayload::ref(ref);
    g.query = "couch";
    InpaintRequest ir;
    ir.image = ImagePayload::ref(ref);
    ir.mask = editor.ground(g).mask;
    ir.prompt = inpaint_prompt_substitute("bed");
    ir.seed = 5;
    std::string out = editor.inpaint(ir).image.data;
    CHECK(out != ref);
    CHECK(registry->get(out).sorted_concepts() == std::vector<std::string>{"couch"});
}

TEST_CASE("malformed masks and prompts are rejected before any edit") {
    auto registry = std::make_shared<SceneRegistry>();
    std::string ref = registry->put(ann("img", "l", {"couch"}));
    MockEditor editor(registry, 0.0, 42);

    InpaintRequest ir;
    ir.image = ImagePayload::ref(ref);
    ir.mask = "not-a-mask";
    ir.prompt = "a bed";
    CHECK_THROWS_AS(editor.inpaint(ir), Error);

    ir.mask = "mask/couch/deadbeef";
    ir.prompt = "paint something nice";
    try {
        editor.inpaint(ir);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SchemaMismatch);
    }
}

TEST_CASE("scripted selector replays responses then reports unavailability") {
    auto selector = ScriptedSelector::scripted({"first", "second"});
    SelectRequest request;
    request.image = ImagePayload::ref("x");
    request.prompt = "p";
    CHECK(selector->select(request).text == "first");
    CHECK(selector->select(request).text == "second");
    try {
        selector->select(request);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SelectorUnavailable);
    }
}

TEST_CASE("heuristic selector prefers replace, then remove, then add") {
    auto selector = ScriptedSelector::heuristic();
    SelectRequest request;
    request.image = ImagePayload::ref("x");

    request.prompt = selector_step_prompt({"couch", "lamp"}, {"bed"}, {"couch", "lamp"});
    CHECK(selector->select(request).text == "[\"replace\", \"couch\", \"bed\"]");

    request.prompt = selector_step_prompt({"couch", "lamp"}, {}, {"couch", "lamp"});
    CHECK(selector->select(request).text == "[\"remove\", \"couch\", \"background\"]");

    request.prompt = selector_step_prompt({"couch"}, {"bed"}, {});
    CHECK(selector->select(request).text == "[\"add\", \"bed\", \"couch\"]");
}

TEST_CASE("adversarial selector prefers add and picks list tails") {
    auto selector = ScriptedSelector::adversarial();
    SelectRequest request;
    request.image = ImagePayload::ref("x");

    request.prompt = selector_step_prompt({"couch"}, {"bed", "curtain"}, {"couch", "lamp"});
    CHECK(selector->select(request).text == "[\"add\", \"curtain\", \"couch\"]");

    request.prompt = selector_step_prompt({"couch"}, {}, {"billboard", "lamp"});
    CHECK(selector->select(request).text == "[\"remove\", \"lamp\", \"background\"]");
}

TEST_CASE("mock backend bundle wires a full scenario") {
    MockScenario scenario;
    scenario.rules = car_rules();
    std::vector<ConceptAnnotation> corpus = {ann("a", "stop", {"car"}), ann("b", "move", {"pole"})};
    BackendBundle bundle = make_mock_backends(scenario, corpus, 11);

    ImagePayload payload = bundle.source_payload(corpus[0]);
    CHECK(payload.mode == "ref");
    ClassifyRequest r;
    r.image = payload;
    r.labels = {"move", "stop"};
    CHECK(bundle.contracts.classifier->classify(r).label == "stop");

    MockScenario bad = scenario;
    bad.selector_mode = "psychic";
    CHECK_THROWS_AS(make_mock_backends(bad, corpus, 11), Error);
}

TEST_CASE("wire documents round-trip through JSON") {
    ClassifyRequest cq;
    cq.image = {"base64", "aGVsbG8="};
    cq.labels = {"move", "stop"};
    CHECK(ClassifyRequest::from_json(cq.to_json()) == cq);

    ClassifyResponse cr_label;
    cr_label.label = "stop";
    CHECK(ClassifyResponse::from_json(cr_label.to_json()) == cr_label);
    ClassifyResponse cr_scores;
    cr_scores.has_scores = true;
    cr_scores.scores = {{"move", 0.25}, {"stop", 0.75}};
    CHECK(ClassifyResponse::from_json(cr_scores.to_json()) == cr_scores);

    GroundRequest gq;
    gq.image = ImagePayload::ref("mockimg/abc");
    gq.query = "couch";
    CHECK(GroundRequest::from_json(gq.to_json()) == gq);

    GroundResponse gr;
    gr.boxes = {{1.0, 2.0, 3.0, 4.0}};
    gr.mask = "mask/couch/deadbeef";
    CHECK(GroundResponse::from_json(gr.to_json()) == gr);

    InpaintRequest iq;
    iq.image = ImagePayload::ref("mockimg/abc");
    iq.mask = "mask/couch/deadbeef";
    iq.prompt = "a bed";
    iq.negative_prompt = "blurry";
    iq.seed = 1234567890123456789ULL;
    CHECK(InpaintRequest::from_json(iq.to_json()) == iq);

    InpaintResponse ir;
    ir.image = ImagePayload::ref("mockimg/def");
    CHECK(InpaintResponse::from_json(ir.to_json()) == ir);

    SelectRequest sq;
    sq.image = ImagePayload::ref("mockimg/abc");
    sq.prompt = "choose";
    CHECK(SelectRequest::from_json(sq.to_json()) == sq);

    SelectResponse sr;
    sr.text = "[\"add\", \"curtain\", \"window\"]";
    CHECK(SelectResponse::from_json(sr.to_json()) == sr);
}

TEST_CASE("wire schema violations fail before any network call") {
    CHECK_THROWS_AS(ImagePayload::from_json({{"mode", "carrier-pigeon"}, {"data", "x"}}), Error);
    CHECK_THROWS_AS(ClassifyRequest::from_json({{"image", ImagePayload::ref("r").to_json()},
                                                {"labels", nlohmann::json::array()}}),
                    Error);
    nlohmann::json both = {{"label", "a"}, {"scores", {{"a", 1.0}}}};
    CHECK_THROWS_AS(ClassifyResponse::from_json(both), Error);

    GroundRequest gq;
    gq.image = ImagePayload::ref("r");
    gq.query = "couch";
    nlohmann::json bad_conf = gq.to_json();
    bad_conf["confidence_threshold"] = 1.5;
    CHECK_THROWS_AS(GroundRequest::from_json(bad_conf), Error);

    InpaintRequest iq;
    iq.image = ImagePayload::ref("r");
    iq.mask = "m";
    iq.prompt = "a bed";
    nlohmann::json bad_steps = iq.to_json();
    bad_steps["steps"] = 0;
    CHECK_THROWS_AS(InpaintRequest::from_json(bad_steps), Error);
}

TEST_CASE("remote clients talk to a loopback server with auth and retries") {
    httplib::Server server;
    std::atomic<int> classify_hits{0};
    std::string seen_auth;

    server.Post("/classify", [&](const httplib::Request& req, httplib::Response& res) {
        int hit = ++classify_hits;
        if (hit <= 2) {  // transient failures to exercise the retry loop
            res.status = 503;
            return;
        }
        seen_auth = req.get_header_value("Authorization");
        ClassifyRequest parsed = ClassifyRequest::from_json(nlohmann::json::parse(req.body));
        ClassifyResponse out;
        out.label = parsed.labels.front();
        res.set_content(out.to_json().dump(), "application/json");
    });
    server.Post("/select", [&](const httplib::Request& req, httplib::Response& res) {
        (void)req;
        SelectResponse out;
        out.text = "[\"remove\", \"couch\", \"floor\"]";
        res.set_content(out.to_json().dump(), "application/json");
    });

    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("CCE_TEST_TOKEN", "sesame", 1);
    RemoteEndpoint endpoint;
    endpoint.base_url = "http://127.0.0.1:" + std::to_string(port);
    endpoint.token_env = "CCE_TEST_TOKEN";
    endpoint.backoff_ms = 10;

    auto classifier = make_remote_classifier(endpoint);
    ClassifyRequest request;
    request.image = ImagePayload::ref("mockimg/x");
    request.labels = {"move", "stop"};
    ClassifyResponse response = classifier->classify(request);
    CHECK(response.label == "move");
    CHECK(classify_hits.load() == 3);
    CHECK(seen_auth == "Bearer sesame");

    auto selector = make_remote_selector(endpoint);
    SelectRequest sreq;
    sreq.image = ImagePayload::ref("mockimg/x");
    sreq.prompt = "pick";
    CHECK(selector->select(sreq).text == "[\"remove\", \"couch\", \"floor\"]");

    // Unreachable endpoint surfaces as service unavailability after retries.
    RemoteEndpoint dead;
    dead.base_url = "http://127.0.0.1:1";
    dead.attempts = 2;
    dead.backoff_ms = 1;
    auto dead_client = make_remote_classifier(dead);
    try {
        dead_client->classify(request);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ClassifierUnavailable);
    }

    server.stop();
    server_thread.join();
}
