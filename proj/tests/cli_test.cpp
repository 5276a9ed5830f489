#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cce/commands.hpp"
#include "cce/config.hpp"
#include "cce/errors.hpp"
#include "cce/metrics.hpp"
#include "testutil.hpp"

using namespace cce;
using testutil::ScratchDir;
using nlohmann::json;

namespace {

template <typename F>
std::optional<ErrorCode> thrown_code(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    } catch (...) {
        return std::nullopt;
    }
    return std::nullopt;
}

// A ready-to-run mock working set: car keeps the classifier saying "stop",
// removing it flips the verdict to "move".
ProjectConfig carstop_config(const ScratchDir& dir) {
    testutil::write_file(dir.path / "taxonomy.txt", "root car\nroot tree\n");
    testutil::write_file(
        dir.path / "corpus.jsonl",
        R"({"image_id": "s1", "label": "stop", "concepts": ["car", "tree"]})" "\n"
        R"({"image_id": "s2", "label": "stop", "concepts": ["car"]})" "\n"
        R"({"image_id": "t1", "label": "move", "concepts": ["tree"]})" "\n"
        R"({"image_id": "t2", "label": "move", "concepts": []})" "\n");
    ProjectConfig config;
    config.taxonomy_path = (dir.path / "taxonomy.txt").string();
    config.corpus_path = (dir.path / "corpus.jsonl").string();
    config.class_from = "stop";
    config.class_to = "move";
    config.output_dir = (dir.path / "out").string();
    config.seed = 11;
    config.mock.rules = {{{"car"}, {}, "stop"}, {{}, {}, "move"}};
    return config;
}

// Ten sources with hand-computed flip steps plus one empty target image.
// Deleting "car" flips the verdict; the plan deletes concepts in canonical
// order (a1 < a2 < car), so the flip step equals the concept count for
// car-bearing images while car-less sources bounce off the source check.
ProjectConfig mixed_config(const ScratchDir& dir) {
    testutil::write_file(dir.path / "taxonomy.txt", "root a1\nroot a2\nroot car\n");
    std::ostringstream corpus;
    auto line = [&](const std::string& id, const std::string& label, const std::string& concepts) {
        corpus << R"({"image_id": ")" << id << R"(", "label": ")" << label
               << R"(", "concepts": [)" << concepts << "]}\n";
    };
    line("s0", "stop", R"("car")");
    line("s1", "stop", R"("a1", "car")");
    line("s2", "stop", R"("a1", "a2", "car")");
    line("s3", "stop", R"("car")");
    line("s4", "stop", R"("a2", "car")");
    line("s5", "stop", R"("a1", "a2", "car")");
    line("s6", "stop", R"("car")");
    line("s7", "stop", R"("a1", "car")");
    line("s8", "stop", R"("a1")");
    line("s9", "stop", R"("a2")");
    line("t0", "move", "");
    testutil::write_file(dir.path / "corpus.jsonl", corpus.str());
    ProjectConfig config;
    config.taxonomy_path = (dir.path / "taxonomy.txt").string();
    config.corpus_path = (dir.path / "corpus.jsonl").string();
    config.class_from = "stop";
    config.class_to = "move";
    config.output_dir = (dir.path / "out").string();
    config.seed = 23;
    config.mock.rules = {{{"car"}, {}, "stop"}, {{}, {}, "move"}};
    return config;
}

std::string summary_without_timestamp(const std::string& text) {
    json j = json::parse(text);
    REQUIRE(j.contains("generated_at"));
    REQUIRE(j.at("generated_at").is_string());
    j.erase("generated_at");
    return j.dump(2);
}

} // namespace

TEST_CASE("carstop run flips every image in one step") {
    ScratchDir dir("cli_carstop");
    ProjectConfig config = carstop_config(dir);

    std::ostringstream out;
    RunArtifacts artifacts;
    int exit_code = cmd_run(config, out, &artifacts);
    CHECK(exit_code == 0);

    REQUIRE(artifacts.traces.size() == 2);
    for (const RunTrace& trace : artifacts.traces) {
        CHECK(trace.status == RunStatus::Completed);
        CHECK(trace.flipped);
        CHECK(trace.steps_to_flip == 1);
    }

    json summary = json::parse(artifacts.summary_json);
    CHECK(summary.at("success_rate").get<double>() == doctest::Approx(1.0));
    CHECK(summary.at("avg_edits_flipped").get<double>() == doctest::Approx(1.0));
    CHECK(summary.at("stability").get<double>() == doctest::Approx(1.0));
    CHECK(summary.at("counts").at("flipped").get<int>() == 2);

    // The files on disk hold exactly what the artifacts carry.
    CHECK(testutil::read_file(dir.path / "out" / "reports" / "summary.json") ==
          artifacts.summary_json);
    CHECK(testutil::read_file(dir.path / "out" / "reports" / "report.txt") ==
          artifacts.report_text);
    std::string trace_bytes = testutil::read_file(dir.path / "out" / "traces" / "traces.jsonl");
    CHECK(trace_bytes.find("\"image_id\":\"s1\"") != std::string::npos);
    CHECK(artifacts.report_text.find("1.0000") != std::string::npos);
    CHECK(out.str().find("success rate 1.0000") != std::string::npos);
}

TEST_CASE("unsatisfiable classifier rule exhausts every plan") {
    ScratchDir dir("cli_unsat");
    ProjectConfig config = carstop_config(dir);
    config.mock.rules = {{{}, {}, "stop"}};  // nothing ever flips the label

    std::ostringstream out;
    RunArtifacts artifacts;
    int exit_code = cmd_run(config, out, &artifacts);
    CHECK(exit_code == 0);  // exhaustion is an outcome, not a failure

    REQUIRE(artifacts.traces.size() == 2);
    for (const RunTrace& trace : artifacts.traces) {
        CHECK(trace.status == RunStatus::Completed);
        CHECK_FALSE(trace.flipped);
        CHECK(trace.steps.size() == trace.edit_plan.edits.size());
    }
    json summary = json::parse(artifacts.summary_json);
    CHECK(summary.at("success_rate").get<double>() == doctest::Approx(0.0));
    CHECK(summary.at("counts").at("flipped").get<int>() == 0);
}

TEST_CASE("mixed corpus aggregates match the hand oracle") {
    ScratchDir dir("cli_mixed");
    ProjectConfig config = mixed_config(dir);

    std::ostringstream out;
    RunArtifacts artifacts;
    int exit_code = cmd_run(config, out, &artifacts);
    CHECK(exit_code == 0);

    REQUIRE(artifacts.traces.size() == 10);
    const std::vector<std::optional<int>> expected_flip = {1, 2, 3, 1, 2, 3, 1, 2,
                                                           std::nullopt, std::nullopt};
    for (std::size_t i = 0; i < expected_flip.size(); ++i) {
        CAPTURE(i);
        const RunTrace& trace = artifacts.traces[i];
        if (expected_flip[i]) {
            CHECK(trace.status == RunStatus::Completed);
            CHECK(trace.steps_to_flip == expected_flip[i]);
        } else {
            CHECK(trace.status == RunStatus::SourceMisclassified);
            CHECK(trace.steps.empty());
        }
    }

    json summary = json::parse(artifacts.summary_json);
    CHECK(summary.at("counts").at("total").get<int>() == 10);
    CHECK(summary.at("counts").at("evaluated").get<int>() == 8);
    CHECK(summary.at("counts").at("source_misclassified").get<int>() == 2);
    CHECK(summary.at("counts").at("flipped").get<int>() == 8);
    CHECK(summary.at("success_rate").get<double>() == doctest::Approx(1.0));
    // (1+2+3)*2 + 1 + 2 flips over 8 evaluated images.
    CHECK(summary.at("avg_edits_flipped").get<double>() == doctest::Approx(15.0 / 8.0));
    CHECK(summary.at("avg_edits_all").get<double>() == doctest::Approx(15.0 / 8.0));
    CHECK(summary.at("stability").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("worker count never changes the outputs") {
    ScratchDir dir("cli_jobs");
    ProjectConfig serial = mixed_config(dir);
    serial.output_dir = (dir.path / "out1").string();
    serial.jobs = 1;
    ProjectConfig parallel = serial;
    parallel.output_dir = (dir.path / "out4").string();
    parallel.jobs = 4;

    std::ostringstream quiet;
    CHECK(cmd_run(serial, quiet) == 0);
    CHECK(cmd_run(parallel, quiet) == 0);

    std::string traces1 = testutil::read_file(dir.path / "out1" / "traces" / "traces.jsonl");
    std::string traces4 = testutil::read_file(dir.path / "out4" / "traces" / "traces.jsonl");
    CHECK(traces1 == traces4);
    CHECK_FALSE(traces1.empty());

    std::string summary1 =
        testutil::read_file(dir.path / "out1" / "reports" / "summary.json");
    std::string summary4 =
        testutil::read_file(dir.path / "out4" / "reports" / "summary.json");
    CHECK(summary_without_timestamp(summary1) == summary_without_timestamp(summary4));

    // Same config, fresh invocation: byte-identical traces again.
    ProjectConfig again = serial;
    again.output_dir = (dir.path / "out1b").string();
    CHECK(cmd_run(again, quiet) == 0);
    CHECK(testutil::read_file(dir.path / "out1b" / "traces" / "traces.jsonl") == traces1);
}

TEST_CASE("explain prints the plan and writes the machine-readable copy") {
    ScratchDir dir("cli_explain");
    testutil::write_file(dir.path / "taxonomy.txt", "root chair\nchair couch 2\n");
    testutil::write_file(
        dir.path / "corpus.jsonl",
        R"({"image_id": "src", "label": "stop", "concepts": ["chair"]})" "\n"
        R"({"image_id": "tgt", "label": "move", "concepts": ["couch"]})" "\n");
    ProjectConfig config;
    config.taxonomy_path = (dir.path / "taxonomy.txt").string();
    config.corpus_path = (dir.path / "corpus.jsonl").string();
    config.class_from = "stop";
    config.class_to = "move";
    config.output_dir = (dir.path / "out").string();

    std::ostringstream out;
    CHECK(cmd_explain(config, "src", out) == 0);
    std::string text = out.str();
    CHECK(text.find("closest target: tgt") != std::string::npos);
    CHECK(text.find("substitute(chair->couch)") != std::string::npos);
    CHECK(text.find("(cost 2)") != std::string::npos);
    CHECK(text.find("total cost: 2") != std::string::npos);

    EditSet stored =
        edit_set_from_json(testutil::read_file(dir.path / "out" / "plans" / "src.json"));
    REQUIRE(stored.edits.size() == 1);
    CHECK(stored.edits[0].descriptor() ==
          EditDescriptor{EditKind::Substitute, "chair", "couch"});
    CHECK(stored.total_cost.value() == doctest::Approx(2.0));

    SUBCASE("identical annotations give an empty plan at cost zero") {
        testutil::write_file(
            dir.path / "corpus.jsonl",
            R"({"image_id": "src", "label": "stop", "concepts": ["chair"]})" "\n"
            R"({"image_id": "twin", "label": "move", "concepts": ["chair"]})" "\n");
        std::ostringstream empty_out;
        CHECK(cmd_explain(config, "src", empty_out) == 0);
        CHECK(empty_out.str().find("edit plan: empty") != std::string::npos);
        CHECK(empty_out.str().find("total cost: 0") != std::string::npos);
    }

    SUBCASE("unknown and wrongly labeled images are rejected") {
        std::ostringstream sink;
        CHECK(thrown_code([&] { cmd_explain(config, "ghost", sink); }) ==
              ErrorCode::UnknownImage);
        CHECK(thrown_code([&] { cmd_explain(config, "tgt", sink); }) == ErrorCode::WrongClass);
    }
}

TEST_CASE("importance command prints the prominent pairs and writes the table") {
    ScratchDir dir("cli_importance");
    testutil::write_file(dir.path / "taxonomy.txt", "root car\nroot tree\n");
    testutil::write_file(
        dir.path / "corpus.jsonl",
        R"({"image_id": "s1", "label": "stop", "concepts": ["car", "tree"]})" "\n"
        R"({"image_id": "s2", "label": "stop", "concepts": ["car", "tree"]})" "\n"
        R"({"image_id": "s3", "label": "stop", "concepts": ["car", "tree"]})" "\n"
        R"({"image_id": "t1", "label": "move", "concepts": ["tree"]})" "\n");
    ProjectConfig config;
    config.taxonomy_path = (dir.path / "taxonomy.txt").string();
    config.corpus_path = (dir.path / "corpus.jsonl").string();
    config.class_from = "stop";
    config.class_to = "move";
    config.output_dir = (dir.path / "out").string();

    std::ostringstream out;
    CHECK(cmd_importance(config, 5, out) == 0);
    std::string text = out.str();
    CHECK(text.find("Importance and standard deviation of the most prominent") !=
          std::string::npos);
    CHECK(text.find("1. {∅, car}  score -1.000 +/- 0.000  (occurrences 3)") !=
          std::string::npos);
    CHECK(text.find("pairs with |score| > 0: 1 of 1") != std::string::npos);

    std::string tsv = testutil::read_file(dir.path / "out" / "importance" / "table.tsv");
    CHECK(tsv.find("# importance: stop -> move") != std::string::npos);
    CHECK(tsv.find("∅\tcar\t0\t3\t0\t0\t3\t-1.000000\t0.000000") != std::string::npos);

    SUBCASE("identical annotations across classes leave the table empty") {
        testutil::write_file(
            dir.path / "corpus.jsonl",
            R"({"image_id": "s1", "label": "stop", "concepts": ["tree"]})" "\n"
            R"({"image_id": "t1", "label": "move", "concepts": ["tree"]})" "\n");
        std::ostringstream empty_out;
        CHECK(cmd_importance(config, 5, empty_out) == 0);
        CHECK(empty_out.str().find("no edits between the classes") != std::string::npos);
        CHECK(empty_out.str().find("pairs with |score| > 0: 0 of 0") != std::string::npos);
    }

    SUBCASE("a class with no images is EmptyCorpus") {
        config.class_from = "parked";
        std::ostringstream sink;
        CHECK(thrown_code([&] { cmd_importance(config, 5, sink); }) == ErrorCode::EmptyCorpus);
    }
}

TEST_CASE("metrics command reports trace aggregates and distribution metrics") {
    ScratchDir dir("cli_metrics");
    ProjectConfig config = carstop_config(dir);
    std::ostringstream quiet;
    RunArtifacts artifacts;
    REQUIRE(cmd_run(config, quiet, &artifacts) == 0);
    std::string traces_path = (dir.path / "out" / "traces" / "traces.jsonl").string();

    EmbeddingSet set;
    set.dim = 3;
    set.vectors = {{0.1, 0.2, 0.3}, {0.5, 0.4, 0.3}, {0.9, 0.8, 0.7}};
    set.source_tag = "clip-real";
    {
        std::ofstream real_out(dir.path / "real.emb");
        write_embeddings(real_out, set);
        set.source_tag = "clip-generated";
        std::ofstream generated_out(dir.path / "generated.emb");
        write_embeddings(generated_out, set);
    }

    MetricsArgs args;
    args.traces_path = traces_path;
    args.real_embeddings_path = (dir.path / "real.emb").string();
    args.generated_embeddings_path = (dir.path / "generated.emb").string();

    std::ostringstream out;
    CHECK(cmd_metrics(args, out) == 0);
    std::string text = out.str();
    CHECK(text.find("clip-generated") != std::string::npos);  // tag from the generated set
    CHECK(text.find("local_global") != std::string::npos);
    CHECK(text.find("0.000") != std::string::npos);  // fid and cmmd on identical sets
    CHECK(text.find("1.000") != std::string::npos);  // s3 on identical sets

    SUBCASE("explicit tag wins over the file tag") {
        args.tag = "override";
        std::ostringstream tagged;
        CHECK(cmd_metrics(args, tagged) == 0);
        CHECK(tagged.str().find("override") != std::string::npos);
        CHECK(tagged.str().find("clip-generated") == std::string::npos);
    }

    SUBCASE("traces alone still produce a report row") {
        MetricsArgs bare;
        bare.traces_path = traces_path;
        std::ostringstream bare_out;
        CHECK(cmd_metrics(bare, bare_out) == 0);
        CHECK(bare_out.str().find("-") != std::string::npos);
        CHECK(bare_out.str().find("1.0000") != std::string::npos);
    }

    SUBCASE("one-sided embedding arguments are rejected") {
        args.generated_embeddings_path.clear();
        std::ostringstream sink;
        CHECK(thrown_code([&] { cmd_metrics(args, sink); }) == ErrorCode::ConfigError);
    }

    SUBCASE("an empty trace file is EmptyInput") {
        testutil::write_file(dir.path / "empty.jsonl", "");
        MetricsArgs empty;
        empty.traces_path = (dir.path / "empty.jsonl").string();
        std::ostringstream sink;
        CHECK(thrown_code([&] { cmd_metrics(empty, sink); }) == ErrorCode::EmptyInput);
    }

    SUBCASE("a malformed trace line is SchemaMismatch") {
        testutil::write_file(dir.path / "junk.jsonl", "{\"not\": \"a trace\"}\n");
        MetricsArgs junk;
        junk.traces_path = (dir.path / "junk.jsonl").string();
        std::ostringstream sink;
        CHECK(thrown_code([&] { cmd_metrics(junk, sink); }) == ErrorCode::SchemaMismatch);
    }
}

TEST_CASE("config files parse strictly and flags take precedence") {
    ScratchDir dir("cli_config");
    testutil::write_file(dir.path / "config.json", R"({
        "taxonomy_path": "tax.txt",
        "corpus_path": "corpus.jsonl",
        "class_pair": {"from": "stop", "to": "move"},
        "strategy": "global",
        "backend": {"mode": "mock", "mock": {"rules": [{"label": "move"}]}},
        "consistency_runs": 5,
        "seed": 41,
        "output_dir": "results"
    })");
    ProjectConfig config = load_config((dir.path / "config.json").string());
    CHECK(config.taxonomy_path == "tax.txt");
    CHECK(config.class_from == "stop");
    CHECK(config.class_to == "move");
    CHECK(config.strategy == "global");
    CHECK(config.consistency_runs == 5);
    CHECK(config.seed == 41);
    CHECK(config.output_dir == "results");
    CHECK(config.backend == BackendMode::Mock);
    REQUIRE(config.mock.rules.size() == 1);
    CHECK(config.mock.rules[0].label == "move");

    ConfigOverrides overrides;
    overrides.seed = 9;
    overrides.strategy = "local";
    overrides.jobs = 4;
    apply_overrides(config, overrides);
    CHECK(config.seed == 9);
    CHECK(config.strategy == "local");
    CHECK(config.jobs == 4);
    CHECK(config.consistency_runs == 5);  // untouched fields keep file values

    SUBCASE("unknown keys are rejected") {
        testutil::write_file(dir.path / "typo.json", R"({"taxonomy_pth": "x"})");
        CHECK(thrown_code([&] { load_config((dir.path / "typo.json").string()); }) ==
              ErrorCode::ConfigError);
    }

    SUBCASE("malformed JSON is rejected") {
        testutil::write_file(dir.path / "broken.json", "{not json");
        CHECK(thrown_code([&] { load_config((dir.path / "broken.json").string()); }) ==
              ErrorCode::ConfigError);
    }

    SUBCASE("validation rejects bad field values") {
        ProjectConfig bad = config;
        bad.strategy = "psychic";
        CHECK(thrown_code([&] { bad.validate(); }) == ErrorCode::ConfigError);
        bad = config;
        bad.consistency_runs = 4;
        CHECK(thrown_code([&] { bad.validate(); }) == ErrorCode::ConfigError);
        bad = config;
        bad.class_to = bad.class_from;
        CHECK(thrown_code([&] { bad.validate(); }) == ErrorCode::ConfigError);
        bad = config;
        bad.jobs = 0;
        CHECK(thrown_code([&] { bad.validate(); }) == ErrorCode::ConfigError);
    }

    SUBCASE("run validation inspects the backend") {
        ProjectConfig bad = config;
        bad.mock.rules.clear();
        CHECK(thrown_code([&] { bad.validate_for_run(); }) == ErrorCode::ConfigError);
        bad = config;
        bad.mock.rules = {{{"car"}, {}, "stop"}};  // conditional last rule
        CHECK(thrown_code([&] { bad.validate_for_run(); }) == ErrorCode::ConfigError);
        bad = config;
        bad.mock.selector_mode = "scripted";  // no script lines
        CHECK(thrown_code([&] { bad.validate_for_run(); }) == ErrorCode::ConfigError);
        bad = config;
        bad.backend = BackendMode::Remote;  // no endpoints configured
        CHECK(thrown_code([&] { bad.validate_for_run(); }) == ErrorCode::ConfigError);
    }

    SUBCASE("remote local strategy needs a selector endpoint") {
        ProjectConfig remote = config;
        remote.backend = BackendMode::Remote;
        remote.remote.classifier.base_url = "http://127.0.0.1:1";
        remote.remote.grounder.base_url = "http://127.0.0.1:1";
        remote.remote.inpainter.base_url = "http://127.0.0.1:1";
        remote.strategy = "global";
        CHECK_NOTHROW(remote.validate_for_run());
        remote.strategy = "local";
        CHECK(thrown_code([&] { remote.validate_for_run(); }) == ErrorCode::ConfigError);
    }
}

TEST_CASE("validate command lints the working set") {
    ScratchDir dir("cli_validate");
    ProjectConfig config = carstop_config(dir);

    std::ostringstream out;
    CHECK(cmd_validate(config, out) == 0);
    CHECK(out.str().find("validation passed") != std::string::npos);
    CHECK(out.str().find("backend 'mock' ready for runs") != std::string::npos);

    SUBCASE("unknown corpus concepts are reported") {
        testutil::write_file(
            dir.path / "corpus.jsonl",
            R"({"image_id": "s1", "label": "stop", "concepts": ["spaceship"]})" "\n");
        std::ostringstream bad;
        CHECK(cmd_validate(config, bad) == 2);
        CHECK(bad.str().find("error: corpus:") != std::string::npos);
        CHECK(bad.str().find("validation failed") != std::string::npos);
    }

    SUBCASE("missing class images are reported") {
        testutil::write_file(
            dir.path / "corpus.jsonl",
            R"({"image_id": "s1", "label": "stop", "concepts": ["car"]})" "\n");
        std::ostringstream bad;
        CHECK(cmd_validate(config, bad) == 2);
        CHECK(bad.str().find("class 'move' has no images") != std::string::npos);
    }

    SUBCASE("structural config problems are reported") {
        config.strategy = "psychic";
        std::ostringstream bad;
        CHECK(cmd_validate(config, bad) == 2);
        CHECK(bad.str().find("error:") != std::string::npos);
    }
}

TEST_CASE("a failing selector marks its run failed and the batch partial") {
    ScratchDir dir("cli_failrun");
    ProjectConfig config = carstop_config(dir);
    config.strategy = "local";
    config.mock.selector_mode = "scripted";
    config.mock.selector_script = {"???", "???"};  // unparsable, then exhausted

    std::ostringstream out;
    RunArtifacts artifacts;
    int exit_code = cmd_run(config, out, &artifacts);
    CHECK(exit_code == 1);

    REQUIRE(artifacts.traces.size() == 2);
    std::size_t failed = 0;
    for (const RunTrace& trace : artifacts.traces) {
        if (trace.status == RunStatus::Failed) {
            ++failed;
            CHECK(trace.failed_step == 1);
            CHECK(trace.failure_reason.find("SelectorUnavailable") != std::string::npos);
        }
    }
    CHECK(failed >= 1);
    CHECK(out.str().find("runs failed") != std::string::npos);

    // The summary and traces are still written for the surviving data.
    json summary = json::parse(artifacts.summary_json);
    CHECK(summary.at("counts").at("failed").get<int>() >= 1);
    CHECK(testutil::read_file(dir.path / "out" / "reports" / "summary.json") ==
          artifacts.summary_json);
}
