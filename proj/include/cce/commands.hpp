#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cce/config.hpp"
#include "cce/pipeline.hpp"

namespace cce {

// In-process command implementations; the CLI binary is a thin wrapper so
// tests can drive every command directly. Return values are process exit
// codes: 0 success, 1 partial failures (some pipeline runs failed), 2 lint
// failures from the validate command. Precondition violations (bad config,
// unknown image, unreadable files, ...) throw Error; the entry point maps
// those to exit code 2.

// Prints the closest counterfactual target and the minimal edit plan for one
// image, and writes a machine-readable copy under <output_dir>/plans/.
int cmd_explain(const ProjectConfig& config, const std::string& image_id, std::ostream& out);

// Everything cmd_run produced, for callers that want the results without
// re-reading the files it wrote.
struct RunArtifacts {
    std::vector<RunTrace> traces;  // in corpus order, one per completed worker
    std::string summary_json;      // exact bytes of <output_dir>/reports/summary.json
    std::string report_text;       // exact bytes of <output_dir>/reports/report.txt
};

// Runs the full counterfactual loop for every image labeled with the source
// class, writes traces and a summary, and prints the aggregate report. The
// summary's generated_at field is the only timestamp in any output file.
int cmd_run(const ProjectConfig& config, std::ostream& out, RunArtifacts* artifacts = nullptr);

// Computes the corpus-level edit importance table, writes it as TSV under
// <output_dir>/importance/, and prints the strongest-scoring pairs.
int cmd_importance(const ProjectConfig& config, int top_k, std::ostream& out);

struct MetricsArgs {
    std::string traces_path;
    // Embedding files are optional but come as a pair: distribution metrics
    // compare the real set against the generated one.
    std::string real_embeddings_path;
    std::string generated_embeddings_path;
    std::string tag;  // report row label; defaults to the generated set's tag
};

// Aggregates a trace file (one report row per strategy found in it) and, when
// embedding files are supplied, adds the distribution and similarity metrics.
int cmd_metrics(const MetricsArgs& args, std::ostream& out);

// Lints the config, taxonomy, corpus, and backend wiring without writing
// anything; prints one line per check.
int cmd_validate(const ProjectConfig& config, std::ostream& out);

} // namespace cce
