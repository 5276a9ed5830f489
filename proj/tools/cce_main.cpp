#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cce/commands.hpp"
#include "cce/config.hpp"
#include "cce/errors.hpp"

namespace {

// Options shared by every config-driven subcommand; flag values override the
// config file, which overrides built-in defaults.
struct ConfigArgs {
    CLI::App* sub = nullptr;
    std::string config_path;
    std::string taxonomy;
    std::string corpus;
    std::string class_from;
    std::string class_to;
    std::string strategy;
    std::string output_dir;
    int runs = 0;
    int max_steps = 0;
    int jobs = 0;
    std::uint64_t seed = 0;

    void attach(CLI::App* s) {
        sub = s;
        s->add_option("--config", config_path, "JSON config file")->required();
        s->add_option("--taxonomy", taxonomy, "taxonomy edge-list path (overrides the config)");
        s->add_option("--corpus", corpus, "corpus JSONL path (overrides the config)");
        s->add_option("--from", class_from, "source class label (overrides the config)");
        s->add_option("--to", class_to, "counterfactual class label (overrides the config)");
        s->add_option("--strategy", strategy, "edit ordering: local, global, or local_global");
        s->add_option("--out", output_dir, "output directory (overrides the config)");
        s->add_option("--runs", runs, "self-consistency classification runs (odd)");
        s->add_option("--max-steps", max_steps, "step budget per image; 0 = plan length");
        s->add_option("--jobs", jobs, "parallel pipeline runs");
        s->add_option("--seed", seed, "root random seed");
    }

    cce::ProjectConfig resolve() const {
        cce::ProjectConfig config = cce::load_config(config_path);
        cce::ConfigOverrides overrides;
        if (sub->count("--taxonomy") > 0) overrides.taxonomy_path = taxonomy;
        if (sub->count("--corpus") > 0) overrides.corpus_path = corpus;
        if (sub->count("--from") > 0) overrides.class_from = class_from;
        if (sub->count("--to") > 0) overrides.class_to = class_to;
        if (sub->count("--strategy") > 0) overrides.strategy = strategy;
        if (sub->count("--out") > 0) overrides.output_dir = output_dir;
        if (sub->count("--runs") > 0) overrides.consistency_runs = runs;
        if (sub->count("--max-steps") > 0) overrides.max_steps = max_steps;
        if (sub->count("--jobs") > 0) overrides.jobs = jobs;
        if (sub->count("--seed") > 0) overrides.seed = seed;
        cce::apply_overrides(config, overrides);
        return config;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual explanations for concept-annotated images: plan the minimal "
                 "semantic edits toward a target class, apply them step by step, and report "
                 "when the classifier changes its mind."};
    app.require_subcommand(1);

    CLI::App* explain =
        app.add_subcommand("explain", "Print the minimal edit plan for one image");
    ConfigArgs explain_args;
    explain_args.attach(explain);
    std::string image_id;
    explain->add_option("image_id", image_id, "image to explain")->required();

    CLI::App* run =
        app.add_subcommand("run", "Run the edit loop for every source-class image");
    ConfigArgs run_args;
    run_args.attach(run);

    CLI::App* importance =
        app.add_subcommand("importance", "Rank concept pairs by directional edit bias");
    ConfigArgs importance_args;
    importance_args.attach(importance);
    int top_k = 10;
    importance->add_option("--top", top_k, "rows to print")->check(CLI::PositiveNumber);

    CLI::App* metrics = app.add_subcommand("metrics", "Aggregate a trace file into a report");
    cce::MetricsArgs metrics_args;
    metrics->add_option("--traces", metrics_args.traces_path, "trace JSONL file")->required();
    metrics->add_option("--real", metrics_args.real_embeddings_path,
                        "embeddings of the source images");
    metrics->add_option("--generated", metrics_args.generated_embeddings_path,
                        "embeddings of the edited images");
    metrics->add_option("--tag", metrics_args.tag, "report row label");

    CLI::App* validate =
        app.add_subcommand("validate", "Lint the config, taxonomy, corpus, and backend");
    ConfigArgs validate_args;
    validate_args.attach(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(explain)) {
            return cce::cmd_explain(explain_args.resolve(), image_id, std::cout);
        }
        if (app.got_subcommand(run)) {
            return cce::cmd_run(run_args.resolve(), std::cout);
        }
        if (app.got_subcommand(importance)) {
            return cce::cmd_importance(importance_args.resolve(), top_k, std::cout);
        }
        if (app.got_subcommand(metrics)) {
            return cce::cmd_metrics(metrics_args, std::cout);
        }
        if (app.got_subcommand(validate)) {
            return cce::cmd_validate(validate_args.resolve(), std::cout);
        }
    } catch (const cce::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
