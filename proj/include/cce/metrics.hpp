#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cce/pipeline.hpp"

namespace cce {

// Equal-dimension real feature vectors from some encoder; the metrics below
// are encoder-agnostic and consume these instead of images.
struct EmbeddingSet {
    std::size_t dim = 0;
    std::vector<std::vector<double>> vectors;
    std::string source_tag;

    void validate() const;  // non-empty, uniform dimension, finite entries
};

// File format: "dim <d> count <n> tag <label>" followed by one row of <d>
// decimal floats per vector.
EmbeddingSet read_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const EmbeddingSet& set);

// Fréchet distance between the Gaussian fits of the two sets, with the
// unbiased covariance estimator. The matrix square root comes from the
// eigendecomposition of the symmetrized covariance product; eigenvalues in
// [-tolerance, 0) (relative to the largest magnitude) are clamped to zero,
// anything more negative is DegenerateCovariance.
double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b,
                        double relative_tolerance = 1e-8);

struct MmdResult {
    double value = 0.0;      // unbiased squared-MMD estimate, clamped at zero
    double biased = 0.0;     // biased (V-statistic) estimate
    double bandwidth = 0.0;  // Gaussian kernel bandwidth actually used
    bool clamped = false;    // the unbiased estimate was negative before clamping
};

// Squared maximum mean discrepancy under a Gaussian kernel. bandwidth 0
// selects the median pairwise distance over the pooled sets.
MmdResult rbf_mmd(const EmbeddingSet& a, const EmbeddingSet& b, double bandwidth = 0.0);

// Mean cosine similarity over index-aligned vector pairs.
double mean_cosine(const EmbeddingSet& a, const EmbeddingSet& b);

// Majority-agreement fraction of one vote vector (1.0 = unanimous).
double majority_fraction(const std::vector<std::string>& votes);

// Aggregates over a batch of run traces. Sources the classifier rejected at
// step 0 are flagged and excluded from every denominator; failed runs count
// as non-flips.
struct TraceStats {
    std::size_t total = 0;
    std::size_t evaluated = 0;
    std::size_t source_misclassified = 0;
    std::size_t failed = 0;
    std::size_t flipped = 0;
    double success_rate = 0.0;
    double avg_edits_flipped = 0.0;  // headline: mean steps to flip, flipped runs only
    double avg_edits_all = 0.0;      // mean steps consumed across evaluated runs
    double stability = 0.0;          // mean majority fraction over all vote vectors
};

TraceStats aggregate_traces(const std::vector<RunTrace>& traces);

double success_rate(const std::vector<RunTrace>& traces);
double avg_edits(const std::vector<RunTrace>& traces);
double stability(const std::vector<std::vector<std::string>>& vote_sets);

// One line of the evaluation report; distribution metrics are absent when no
// embedding files were supplied.
struct ReportRow {
    std::string classifier_tag;
    std::string strategy;
    std::optional<double> fid;
    std::optional<double> cmmd;
    std::optional<double> s3;
    double success_rate = 0.0;
    double avg_edits = 0.0;
    double stability = 0.0;
};

std::string render_report(const std::vector<ReportRow>& rows);
nlohmann::json report_row_to_json(const ReportRow& row);

} // namespace cce
