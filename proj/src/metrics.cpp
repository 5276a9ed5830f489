#include "cce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "cce/errors.hpp"
#include "cce/util.hpp"

namespace cce {

namespace {

constexpr std::size_t kDimensionCap = 4096;

void check_comparable(const EmbeddingSet& a, const EmbeddingSet& b) {
    a.validate();
    b.validate();
    if (a.dim != b.dim) {
        throw Error(ErrorCode::LengthMismatch,
                    "embedding sets have dimensions " + std::to_string(a.dim) + " and " +
                        std::to_string(b.dim));
    }
}

void check_two_samples(const EmbeddingSet& s) {
    if (s.vectors.size() < 2) {
        throw Error(ErrorCode::EmptyInput,
                    "distribution metrics need at least 2 vectors per set; got " +
                        std::to_string(s.vectors.size()));
    }
}

Eigen::MatrixXd to_matrix(const EmbeddingSet& s) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(s.vectors.size()),
                      static_cast<Eigen::Index>(s.dim));
    for (std::size_t i = 0; i < s.vectors.size(); ++i) {
        for (std::size_t j = 0; j < s.dim; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.vectors[i][j];
        }
    }
    return m;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& rows) {
    Eigen::RowVectorXd mean = rows.colwise().mean();
    Eigen::MatrixXd centered = rows.rowwise() - mean;
    return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

// Symmetrizes, decomposes, and applies the documented clamping rule:
// eigenvalues within the relative tolerance below zero become zero, anything
// more negative means the inputs are too ill-conditioned to trust.
struct EigenParts {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
};

EigenParts clamped_eigs(const Eigen::MatrixXd& m, double relative_tolerance, const char* what) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::DegenerateCovariance,
                    std::string(what) + ": eigendecomposition did not converge");
    }
    Eigen::VectorXd values = solver.eigenvalues();
    double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    double floor = -relative_tolerance * scale;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) < 0.0) {
            if (values(i) < floor) {
                throw Error(ErrorCode::DegenerateCovariance,
                            std::string(what) + ": eigenvalue " + std::to_string(values(i)) +
                                " below the clamping tolerance");
            }
            values(i) = 0.0;
        }
    }
    return {solver.eigenvectors(), std::move(values)};
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double relative_tolerance, const char* what) {
    EigenParts parts = clamped_eigs(m, relative_tolerance, what);
    return parts.vectors * parts.values.cwiseSqrt().asDiagonal() * parts.vectors.transpose();
}

double squared_distance(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

std::string format_double(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

} // namespace

void EmbeddingSet::validate() const {
    if (vectors.empty()) {
        throw Error(ErrorCode::EmptyInput, "embedding set '" + source_tag + "' is empty");
    }
    if (dim == 0) {
        throw Error(ErrorCode::ParseError, "embedding set '" + source_tag + "' has dimension 0");
    }
    if (dim > kDimensionCap) {
        throw Error(ErrorCode::TooLarge, "embedding dimension " + std::to_string(dim) +
                                             " exceeds the cap of " +
                                             std::to_string(kDimensionCap));
    }
    for (const std::vector<double>& v : vectors) {
        if (v.size() != dim) {
            throw Error(ErrorCode::LengthMismatch,
                        "embedding set '" + source_tag + "' mixes vector dimensions");
        }
        for (double x : v) {
            if (!std::isfinite(x)) {
                throw Error(ErrorCode::ParseError,
                            "embedding set '" + source_tag + "' contains a non-finite entry");
            }
        }
    }
}

EmbeddingSet read_embeddings(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) {
        throw Error(ErrorCode::ParseError, "embedding file is empty");
    }
    std::istringstream hs(header);
    std::string kw_dim, kw_count, kw_tag;
    std::size_t dim = 0, count = 0;
    if (!(hs >> kw_dim >> dim >> kw_count >> count >> kw_tag) || kw_dim != "dim" ||
        kw_count != "count" || kw_tag != "tag") {
        throw Error(ErrorCode::ParseError,
                    "embedding header must read 'dim <d> count <n> tag <label>'");
    }
    EmbeddingSet set;
    set.dim = dim;
    std::getline(hs, set.source_tag);
    set.source_tag = trim(set.source_tag);

    std::string line;
    while (set.vectors.size() < count && std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::istringstream row(line);
        std::vector<double> v;
        double x = 0.0;
        while (row >> x) v.push_back(x);
        if (!row.eof()) {
            throw Error(ErrorCode::ParseError, "embedding row " +
                                                   std::to_string(set.vectors.size() + 1) +
                                                   " holds a non-numeric entry");
        }
        if (v.size() != dim) {
            throw Error(ErrorCode::ParseError,
                        "embedding row " + std::to_string(set.vectors.size() + 1) + " has " +
                            std::to_string(v.size()) + " entries, expected " +
                            std::to_string(dim));
        }
        set.vectors.push_back(std::move(v));
    }
    if (set.vectors.size() != count) {
        throw Error(ErrorCode::ParseError, "embedding file promises " + std::to_string(count) +
                                               " rows but holds " +
                                               std::to_string(set.vectors.size()));
    }
    set.validate();
    return set;
}

void write_embeddings(std::ostream& out, const EmbeddingSet& set) {
    set.validate();
    out << "dim " << set.dim << " count " << set.vectors.size() << " tag " << set.source_tag
        << "\n";
    char buf[64];
    for (const std::vector<double>& v : set.vectors) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
            out << (i == 0 ? "" : " ") << buf;
        }
        out << "\n";
    }
}

double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b, double relative_tolerance) {
    check_comparable(a, b);
    check_two_samples(a);
    check_two_samples(b);

    Eigen::MatrixXd ma = to_matrix(a);
    Eigen::MatrixXd mb = to_matrix(b);
    Eigen::RowVectorXd mean_a = ma.colwise().mean();
    Eigen::RowVectorXd mean_b = mb.colwise().mean();
    Eigen::MatrixXd cov_a = covariance(ma);
    Eigen::MatrixXd cov_b = covariance(mb);

    Eigen::MatrixXd sqrt_a = psd_sqrt(cov_a, relative_tolerance, "first covariance");
    Eigen::VectorXd cross =
        clamped_eigs(sqrt_a * cov_b * sqrt_a, relative_tolerance, "covariance product").values;

    double value = (mean_a - mean_b).squaredNorm() + cov_a.trace() + cov_b.trace() -
                   2.0 * cross.cwiseSqrt().sum();
    if (value < 0.0) {
        double scale = std::max({1.0, cov_a.trace(), cov_b.trace()});
        if (value < -relative_tolerance * scale) {
            throw Error(ErrorCode::DegenerateCovariance,
                        "distance " + std::to_string(value) + " fell below zero");
        }
        value = 0.0;
    }
    return value;
}

MmdResult rbf_mmd(const EmbeddingSet& a, const EmbeddingSet& b, double bandwidth) {
    check_comparable(a, b);
    check_two_samples(a);
    check_two_samples(b);
    if (bandwidth < 0.0) {
        throw Error(ErrorCode::ConfigError, "bandwidth must be positive (or 0 for the median rule)");
    }

    if (bandwidth == 0.0) {
        // Median pairwise distance over the pooled sets.
        std::vector<const std::vector<double>*> pooled;
        for (const auto& v : a.vectors) pooled.push_back(&v);
        for (const auto& v : b.vectors) pooled.push_back(&v);
        std::vector<double> distances;
        distances.reserve(pooled.size() * (pooled.size() - 1) / 2);
        for (std::size_t i = 0; i < pooled.size(); ++i) {
            for (std::size_t j = i + 1; j < pooled.size(); ++j) {
                distances.push_back(std::sqrt(squared_distance(*pooled[i], *pooled[j])));
            }
        }
        std::sort(distances.begin(), distances.end());
        std::size_t n = distances.size();
        bandwidth = n % 2 == 1 ? distances[n / 2]
                               : 0.5 * (distances[n / 2 - 1] + distances[n / 2]);
        if (bandwidth <= 0.0) {
            throw Error(ErrorCode::ZeroBandwidth,
                        "median pairwise distance is zero; pass an explicit bandwidth");
        }
    }

    const double denom = 2.0 * bandwidth * bandwidth;
    auto kernel = [denom](const std::vector<double>& x, const std::vector<double>& y) {
        return std::exp(-squared_distance(x, y) / denom);
    };

    const std::size_t m = a.vectors.size();
    const std::size_t n = b.vectors.size();
    std::vector<double> within_a_off;  // i != j terms
    std::vector<double> within_b_off;
    std::vector<double> cross_terms;
    within_a_off.reserve(m * (m - 1) / 2);
    within_b_off.reserve(n * (n - 1) / 2);
    cross_terms.reserve(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            within_a_off.push_back(kernel(a.vectors[i], a.vectors[j]));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            within_b_off.push_back(kernel(b.vectors[i], b.vectors[j]));
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cross_terms.push_back(kernel(a.vectors[i], b.vectors[j]));
        }
    }

    double sum_a_off = 2.0 * pairwise_sum(within_a_off);  // both (i,j) and (j,i)
    double sum_b_off = 2.0 * pairwise_sum(within_b_off);
    double sum_cross = pairwise_sum(cross_terms);
    double md = static_cast<double>(m);
    double nd = static_cast<double>(n);

    MmdResult result;
    result.bandwidth = bandwidth;
    // Diagonal kernel values are exactly 1.
    result.biased = (sum_a_off + md) / (md * md) + (sum_b_off + nd) / (nd * nd) -
                    2.0 * sum_cross / (md * nd);
    double unbiased = sum_a_off / (md * (md - 1.0)) + sum_b_off / (nd * (nd - 1.0)) -
                      2.0 * sum_cross / (md * nd);
    if (unbiased < 0.0) {
        result.clamped = true;
        unbiased = 0.0;
    }
    result.value = unbiased;
    return result;
}

double mean_cosine(const EmbeddingSet& a, const EmbeddingSet& b) {
    check_comparable(a, b);
    if (a.vectors.size() != b.vectors.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    "paired similarity needs equally sized sets; got " +
                        std::to_string(a.vectors.size()) + " and " +
                        std::to_string(b.vectors.size()));
    }
    std::vector<double> cosines;
    cosines.reserve(a.vectors.size());
    for (std::size_t i = 0; i < a.vectors.size(); ++i) {
        const std::vector<double>& x = a.vectors[i];
        const std::vector<double>& y = b.vectors[i];
        double dot = 0.0, nx = 0.0, ny = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            dot += x[j] * y[j];
            nx += x[j] * x[j];
            ny += y[j] * y[j];
        }
        if (nx == 0.0 || ny == 0.0) {
            throw Error(ErrorCode::ZeroVector,
                        "pair " + std::to_string(i) + " contains a zero vector");
        }
        cosines.push_back(dot / (std::sqrt(nx) * std::sqrt(ny)));
    }
    return pairwise_sum(cosines) / static_cast<double>(cosines.size());
}

double majority_fraction(const std::vector<std::string>& votes) {
    if (votes.empty()) {
        throw Error(ErrorCode::EmptyInput, "empty vote vector");
    }
    std::map<std::string, std::size_t> counts;
    for (const std::string& v : votes) ++counts[v];
    std::size_t best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    return static_cast<double>(best) / static_cast<double>(votes.size());
}

TraceStats aggregate_traces(const std::vector<RunTrace>& traces) {
    if (traces.empty()) {
        throw Error(ErrorCode::EmptyInput, "no traces to aggregate");
    }
    TraceStats stats;
    stats.total = traces.size();
    std::vector<double> fractions;
    double steps_flipped = 0.0;
    double steps_all = 0.0;
    for (const RunTrace& t : traces) {
        if (t.status == RunStatus::SourceMisclassified) {
            ++stats.source_misclassified;
            continue;
        }
        ++stats.evaluated;
        if (t.status == RunStatus::Failed) ++stats.failed;
        if (t.flipped) {
            ++stats.flipped;
            steps_flipped += static_cast<double>(t.steps_to_flip.value_or(
                static_cast<int>(t.steps.size())));
        }
        steps_all += static_cast<double>(t.steps.size());
        fractions.push_back(majority_fraction(t.source_check.votes));
        for (const StepRecord& s : t.steps) fractions.push_back(majority_fraction(s.votes));
    }
    if (stats.evaluated == 0) {
        throw Error(ErrorCode::EmptyInput,
                    "every trace was source-misclassified; nothing to evaluate");
    }
    stats.success_rate = static_cast<double>(stats.flipped) / static_cast<double>(stats.evaluated);
    stats.avg_edits_flipped =
        stats.flipped == 0 ? 0.0 : steps_flipped / static_cast<double>(stats.flipped);
    stats.avg_edits_all = steps_all / static_cast<double>(stats.evaluated);
    stats.stability =
        fractions.empty() ? 0.0
                          : pairwise_sum(fractions) / static_cast<double>(fractions.size());
    return stats;
}

double success_rate(const std::vector<RunTrace>& traces) {
    return aggregate_traces(traces).success_rate;
}

double avg_edits(const std::vector<RunTrace>& traces) {
    TraceStats stats = aggregate_traces(traces);
    if (stats.flipped == 0) {
        throw Error(ErrorCode::EmptyInput, "no flipped traces; average edit count is undefined");
    }
    return stats.avg_edits_flipped;
}

double stability(const std::vector<std::vector<std::string>>& vote_sets) {
    if (vote_sets.empty()) {
        throw Error(ErrorCode::EmptyInput, "no vote vectors");
    }
    std::vector<double> fractions;
    fractions.reserve(vote_sets.size());
    for (const auto& votes : vote_sets) fractions.push_back(majority_fraction(votes));
    return pairwise_sum(fractions) / static_cast<double>(fractions.size());
}

std::string render_report(const std::vector<ReportRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"classifier", "strategy", "FID", "CMMD", "S3", "SR", "avg|E|", "stability"});
    for (const ReportRow& r : rows) {
        auto opt = [](const std::optional<double>& v, int precision) {
            return v ? format_double(*v, precision) : std::string("-");
        };
        cells.push_back({r.classifier_tag, r.strategy, opt(r.fid, 3), opt(r.cmmd, 3),
                         opt(r.s3, 3), format_double(r.success_rate, 4),
                         format_double(r.avg_edits, 2), format_double(r.stability, 4)});
    }
    std::vector<std::size_t> widths(cells[0].size(), 0);
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    std::ostringstream out;
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << row[i];
            if (i + 1 < row.size()) {
                out << std::string(widths[i] - row[i].size() + 2, ' ');
            }
        }
        out << "\n";
    }
    return out.str();
}

nlohmann::json report_row_to_json(const ReportRow& row) {
    nlohmann::json j;
    j["classifier_tag"] = row.classifier_tag;
    j["strategy"] = row.strategy;
    if (row.fid) j["fid"] = *row.fid;
    if (row.cmmd) j["cmmd"] = *row.cmmd;
    if (row.s3) j["s3"] = *row.s3;
    j["success_rate"] = row.success_rate;
    j["avg_edits"] = row.avg_edits;
    j["stability"] = row.stability;
    return j;
}

} // namespace cce
