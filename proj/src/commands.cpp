#include "cce/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "cce/annotation.hpp"
#include "cce/editplan.hpp"
#include "cce/errors.hpp"
#include "cce/metrics.hpp"
#include "cce/ordering.hpp"
#include "cce/taxonomy.hpp"
#include "cce/util.hpp"

namespace cce {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError,
                    std::string("cannot read ") + what + " file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
        throw Error(ErrorCode::IoError,
                    "cannot create directory '" + path.parent_path().string() + "'");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

struct Inputs {
    Taxonomy taxonomy;
    std::vector<ConceptAnnotation> corpus;
};

Inputs load_inputs(const ProjectConfig& config) {
    Inputs in{Taxonomy::load(read_text_file(config.taxonomy_path, "taxonomy")), {}};
    in.corpus = parse_corpus(read_text_file(config.corpus_path, "corpus"));
    validate_corpus(in.taxonomy, in.corpus);
    return in;
}

// Source images keep their position in the corpus file so each one's run
// seed does not depend on which other images share its label.
struct ClassSplit {
    std::vector<std::size_t> source_indices;
    std::vector<ConceptAnnotation> sources;
    std::vector<ConceptAnnotation> candidates;
};

ClassSplit split_classes(const std::vector<ConceptAnnotation>& corpus,
                         const ProjectConfig& config) {
    ClassSplit split;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].label == config.class_from) {
            split.source_indices.push_back(i);
            split.sources.push_back(corpus[i]);
        } else if (corpus[i].label == config.class_to) {
            split.candidates.push_back(corpus[i]);
        }
    }
    return split;
}

std::string join_concepts(const std::vector<std::string>& concepts) {
    if (concepts.empty()) return "(none)";
    std::string out;
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        if (i > 0) out += ", ";
        out += concepts[i];
    }
    return out;
}

// Costs are taxonomy path lengths, so integral values are the common case;
// print those without a decimal tail.
std::string format_cost(double value) {
    if (std::isfinite(value) && value == std::floor(value) && std::fabs(value) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
        return buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

std::string format_fraction(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

std::string utc_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buf;
}

std::string pair_display(const ConceptPair& key) {
    return "{" + pair_component_display(key.first) + ", " + pair_component_display(key.second) +
           "}";
}

} // namespace

int cmd_explain(const ProjectConfig& config, const std::string& image_id, std::ostream& out) {
    config.validate();
    Inputs in = load_inputs(config);

    const ConceptAnnotation* source = nullptr;
    for (const ConceptAnnotation& a : in.corpus) {
        if (a.image_id == image_id) {
            source = &a;
            break;
        }
    }
    if (source == nullptr) {
        throw Error(ErrorCode::UnknownImage, "image '" + image_id + "' is not in the corpus");
    }
    if (source->label != config.class_from) {
        throw Error(ErrorCode::WrongClass, "image '" + image_id + "' is labeled '" +
                                               source->label + "', expected '" +
                                               config.class_from + "'");
    }

    ClassSplit split = split_classes(in.corpus, config);
    CostPolicy policy;
    auto [target, plan] = closest_target(in.taxonomy, policy, *source, split.candidates);

    out << "source: " << source->image_id << " (label " << source->label << ")\n";
    out << "  concepts: " << join_concepts(source->sorted_concepts()) << "\n";
    out << "closest target: " << target.image_id << " (label " << target.label << ")\n";
    out << "  concepts: " << join_concepts(target.sorted_concepts()) << "\n";
    if (plan.edits.empty()) {
        out << "edit plan: empty (the annotations already match)\n";
    } else {
        out << "edit plan:\n";
        for (std::size_t i = 0; i < plan.edits.size(); ++i) {
            out << "  " << (i + 1) << ". " << edit_to_string(plan.edits[i]) << "  (cost "
                << format_cost(plan.edits[i].cost.value()) << ")\n";
        }
    }
    out << "total cost: " << format_cost(plan.total_cost.value()) << "\n";

    fs::path plan_path = fs::path(config.output_dir) / "plans" / (image_id + ".json");
    write_text_file(plan_path, edit_set_to_json(plan, 2) + "\n");
    out << "plan written to " << plan_path.string() << "\n";
    return 0;
}

int cmd_run(const ProjectConfig& config, std::ostream& out, RunArtifacts* artifacts) {
    config.validate_for_run();
    Inputs in = load_inputs(config);
    ClassSplit split = split_classes(in.corpus, config);
    if (split.sources.empty()) {
        throw Error(ErrorCode::EmptyCorpus,
                    "no images labeled '" + config.class_from + "' in the corpus");
    }
    if (split.candidates.empty()) {
        throw Error(ErrorCode::EmptyCandidates,
                    "no images labeled '" + config.class_to + "' in the corpus");
    }

    CostPolicy policy;
    ImportanceTable table = compute_importance(in.taxonomy, policy, split.sources,
                                               split.candidates);

    RunConfig base;
    base.strategy = strategy_from_name(config.strategy);
    base.consistency_runs = config.consistency_runs;
    base.max_steps = config.max_steps;
    base.validate();

    std::optional<BackendBundle> remote_bundle;
    if (config.backend == BackendMode::Remote) {
        remote_bundle = make_remote_backends(config.remote);
        if (config.remote.selector.base_url.empty()) remote_bundle->contracts.selector.reset();
    }

    const std::size_t count = split.sources.size();
    std::vector<RunTrace> traces(count);
    std::vector<std::string> run_errors(count);
    std::atomic<std::size_t> cursor{0};

    auto worker = [&]() {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= count) return;
            try {
                std::uint64_t run_seed = seed_at(config.seed, split.source_indices[i]);
                RunConfig run_config = base;
                run_config.seed = run_seed;
                BackendBundle bundle = config.backend == BackendMode::Mock
                                           ? make_mock_backends(config.mock, in.corpus, run_seed)
                                           : *remote_bundle;
                traces[i] = run_counterfactual(in.taxonomy, policy, split.sources[i],
                                               split.candidates, &table, bundle.contracts,
                                               bundle.source_payload(split.sources[i]),
                                               run_config);
            } catch (const std::exception& e) {
                run_errors[i] = e.what();
            }
        }
    };

    std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), count);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    std::vector<RunTrace> written;
    written.reserve(count);
    std::size_t errored = 0;
    std::size_t failed_traces = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (!run_errors[i].empty()) {
            ++errored;
            out << "run " << split.sources[i].image_id << " error: " << run_errors[i] << "\n";
            continue;
        }
        if (traces[i].status == RunStatus::Failed) ++failed_traces;
        written.push_back(traces[i]);
    }

    std::ostringstream trace_buffer;
    write_traces(trace_buffer, written);

    std::optional<TraceStats> stats;
    if (!written.empty()) {
        try {
            stats = aggregate_traces(written);
        } catch (const Error&) {
            // every trace was source-misclassified; summary keeps counts only
        }
    }

    std::string report_text;
    if (stats) {
        ReportRow row;
        row.classifier_tag = backend_mode_name(config.backend);
        row.strategy = config.strategy;
        row.success_rate = stats->success_rate;
        row.avg_edits = stats->avg_edits_flipped;
        row.stability = stats->stability;
        report_text = render_report({row});
    } else {
        report_text = "no evaluable traces\n";
    }

    json summary;
    summary["generated_at"] = utc_timestamp();
    summary["strategy"] = config.strategy;
    summary["seed"] = config.seed;
    summary["class_pair"] = {{"from", config.class_from}, {"to", config.class_to}};
    summary["backend"] = backend_mode_name(config.backend);
    summary["images"] = count;
    summary["traces_written"] = written.size();
    summary["run_errors"] = errored;
    if (stats) {
        summary["counts"] = {{"total", stats->total},
                             {"evaluated", stats->evaluated},
                             {"source_misclassified", stats->source_misclassified},
                             {"failed", stats->failed},
                             {"flipped", stats->flipped}};
        summary["success_rate"] = stats->success_rate;
        summary["avg_edits_flipped"] = stats->avg_edits_flipped;
        summary["avg_edits_all"] = stats->avg_edits_all;
        summary["stability"] = stats->stability;
    }
    std::string summary_json = summary.dump(2) + "\n";

    fs::path outdir(config.output_dir);
    write_text_file(outdir / "traces" / "traces.jsonl", trace_buffer.str());
    write_text_file(outdir / "reports" / "summary.json", summary_json);
    write_text_file(outdir / "reports" / "report.txt", report_text);

    out << "ran " << count << " image" << (count == 1 ? "" : "s") << " (strategy "
        << config.strategy << ", seed " << config.seed << ")\n";
    if (stats) {
        out << "flipped " << stats->flipped << "/" << stats->evaluated << " evaluated (success rate "
            << format_fraction(stats->success_rate, 4) << ")\n";
        if (stats->source_misclassified > 0) {
            out << "source misclassified (excluded): " << stats->source_misclassified << "\n";
        }
        out << report_text;
    } else {
        out << report_text;
    }
    if (errored > 0 || failed_traces > 0) {
        out << (errored + failed_traces) << " of " << count << " runs failed\n";
    }
    out << "traces: " << (outdir / "traces" / "traces.jsonl").string() << "\n";
    out << "summary: " << (outdir / "reports" / "summary.json").string() << "\n";

    if (artifacts != nullptr) {
        artifacts->traces = std::move(written);
        artifacts->summary_json = std::move(summary_json);
        artifacts->report_text = std::move(report_text);
    }
    return errored > 0 || failed_traces > 0 ? 1 : 0;
}

int cmd_importance(const ProjectConfig& config, int top_k, std::ostream& out) {
    config.validate();
    if (top_k < 1) throw Error(ErrorCode::ConfigError, "top_k must be at least 1");
    Inputs in = load_inputs(config);
    ClassSplit split = split_classes(in.corpus, config);
    if (split.sources.empty()) {
        throw Error(ErrorCode::EmptyCorpus,
                    "no images labeled '" + config.class_from + "' in the corpus");
    }
    if (split.candidates.empty()) {
        throw Error(ErrorCode::EmptyCorpus,
                    "no images labeled '" + config.class_to + "' in the corpus");
    }

    CostPolicy policy;
    ImportanceTable table = compute_importance(in.taxonomy, policy, split.sources,
                                               split.candidates);

    fs::path table_path = fs::path(config.output_dir) / "importance" / "table.tsv";
    write_text_file(table_path, importance_table_to_tsv(table));

    out << "Importance and standard deviation of the most prominent concept pairs ("
        << config.class_from << " -> " << config.class_to << ")\n";
    if (table.entries.empty()) {
        out << "  (no edits between the classes; the table is empty)\n";
    }

    struct Row {
        ConceptPair key;
        const ImportanceEntry* entry;
    };
    std::vector<Row> rows;
    rows.reserve(table.entries.size());
    for (const auto& [key, entry] : table.entries) rows.push_back({key, &entry});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        double ma = std::fabs(a.entry->score());
        double mb = std::fabs(b.entry->score());
        if (ma != mb) return ma > mb;
        return a.key < b.key;
    });

    std::size_t shown = std::min<std::size_t>(static_cast<std::size_t>(top_k), rows.size());
    std::size_t nonzero = 0;
    for (const Row& row : rows) {
        if (row.entry->score() != 0.0) ++nonzero;
    }
    for (std::size_t i = 0; i < shown; ++i) {
        const Row& row = rows[i];
        out << "  " << (i + 1) << ". " << pair_display(row.key) << "  score "
            << format_fraction(row.entry->score(), 3) << " +/- "
            << format_fraction(row.entry->score_stddev(), 3) << "  (occurrences "
            << row.entry->occurrences() << ")\n";
    }
    out << "pairs with |score| > 0: " << nonzero << " of " << rows.size() << "\n";
    out << "table written to " << table_path.string() << "\n";
    return 0;
}

int cmd_metrics(const MetricsArgs& args, std::ostream& out) {
    if (args.traces_path.empty()) {
        throw Error(ErrorCode::ConfigError, "a traces file is required");
    }
    bool has_real = !args.real_embeddings_path.empty();
    bool has_generated = !args.generated_embeddings_path.empty();
    if (has_real != has_generated) {
        throw Error(ErrorCode::ConfigError,
                    "embedding files come as a pair: real and generated");
    }

    std::ifstream trace_in(args.traces_path, std::ios::binary);
    if (!trace_in) {
        throw Error(ErrorCode::IoError, "cannot read traces file '" + args.traces_path + "'");
    }
    std::vector<RunTrace> traces = read_traces(trace_in);
    if (traces.empty()) {
        throw Error(ErrorCode::EmptyInput,
                    "trace file '" + args.traces_path + "' holds no traces");
    }

    std::optional<double> fid;
    std::optional<double> cmmd;
    std::optional<double> s3;
    std::string tag = args.tag;
    if (has_real) {
        std::ifstream real_in(args.real_embeddings_path, std::ios::binary);
        if (!real_in) {
            throw Error(ErrorCode::IoError,
                        "cannot read embeddings file '" + args.real_embeddings_path + "'");
        }
        EmbeddingSet real = read_embeddings(real_in);
        std::ifstream generated_in(args.generated_embeddings_path, std::ios::binary);
        if (!generated_in) {
            throw Error(ErrorCode::IoError,
                        "cannot read embeddings file '" + args.generated_embeddings_path + "'");
        }
        EmbeddingSet generated = read_embeddings(generated_in);
        fid = frechet_distance(real, generated);
        cmmd = rbf_mmd(real, generated).value;
        if (real.vectors.size() == generated.vectors.size()) {
            s3 = mean_cosine(real, generated);
        } else {
            out << "note: similarity skipped; the embedding sets differ in count ("
                << real.vectors.size() << " vs " << generated.vectors.size() << ")\n";
        }
        if (tag.empty()) tag = generated.source_tag;
    }
    if (tag.empty()) tag = "traces";

    std::map<std::string, std::vector<RunTrace>> by_strategy;
    for (RunTrace& t : traces) by_strategy[strategy_name(t.strategy)].push_back(std::move(t));

    std::vector<ReportRow> rows;
    for (const auto& [name, group] : by_strategy) {
        TraceStats stats;
        try {
            stats = aggregate_traces(group);
        } catch (const Error& e) {
            out << "note: strategy " << name << " skipped: " << e.what() << "\n";
            continue;
        }
        ReportRow row;
        row.classifier_tag = tag;
        row.strategy = name;
        row.fid = fid;
        row.cmmd = cmmd;
        row.s3 = s3;
        row.success_rate = stats.success_rate;
        row.avg_edits = stats.avg_edits_flipped;
        row.stability = stats.stability;
        rows.push_back(row);
    }
    if (rows.empty()) {
        throw Error(ErrorCode::EmptyInput, "no evaluable traces in '" + args.traces_path + "'");
    }
    out << render_report(rows);
    return 0;
}

int cmd_validate(const ProjectConfig& config, std::ostream& out) {
    int problems = 0;
    auto pass = [&](const std::string& line) { out << "ok: " << line << "\n"; };
    auto flunk = [&](const std::string& line) {
        out << "error: " << line << "\n";
        ++problems;
    };

    bool fields_ok = true;
    try {
        config.validate();
        pass("config fields");
    } catch (const Error& e) {
        flunk(e.what());
        fields_ok = false;
    }

    std::optional<Taxonomy> taxonomy;
    if (config.taxonomy_path.empty()) {
        flunk("taxonomy not checked: taxonomy_path is missing");
    } else {
        try {
            taxonomy = Taxonomy::load(read_text_file(config.taxonomy_path, "taxonomy"));
            std::ostringstream line;
            line << "taxonomy: " << taxonomy->node_count() << " concepts, root '"
                 << taxonomy->root() << "'";
            pass(line.str());
        } catch (const Error& e) {
            flunk(std::string("taxonomy: ") + e.what());
        }
    }

    if (config.corpus_path.empty()) {
        flunk("corpus not checked: corpus_path is missing");
    } else {
        try {
            std::vector<ConceptAnnotation> corpus =
                parse_corpus(read_text_file(config.corpus_path, "corpus"));
            std::ostringstream line;
            line << "corpus: " << corpus.size() << " annotations";
            pass(line.str());
            if (taxonomy) {
                try {
                    validate_corpus(*taxonomy, corpus);
                    pass("corpus concepts all in the taxonomy");
                } catch (const Error& e) {
                    flunk(std::string("corpus: ") + e.what());
                }
            }
            std::size_t from_count = 0;
            std::size_t to_count = 0;
            for (const ConceptAnnotation& a : corpus) {
                if (a.label == config.class_from) ++from_count;
                if (a.label == config.class_to) ++to_count;
            }
            if (!config.class_from.empty()) {
                if (from_count > 0) {
                    pass("class '" + config.class_from + "': " + std::to_string(from_count) +
                         " images");
                } else {
                    flunk("class '" + config.class_from + "' has no images");
                }
            }
            if (!config.class_to.empty()) {
                if (to_count > 0) {
                    pass("class '" + config.class_to + "': " + std::to_string(to_count) +
                         " images");
                } else {
                    flunk("class '" + config.class_to + "' has no images");
                }
            }
        } catch (const Error& e) {
            flunk(std::string("corpus: ") + e.what());
        }
    }

    if (fields_ok) {
        try {
            config.validate_for_run();
            pass("backend '" + backend_mode_name(config.backend) + "' ready for runs");
        } catch (const Error& e) {
            flunk(e.what());
        }
    }

    out << (problems == 0 ? "validation passed" : "validation failed") << "\n";
    return problems == 0 ? 0 : 2;
}

} // namespace cce
