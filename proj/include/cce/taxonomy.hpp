#pragma once

#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cce/cost.hpp"
#include "cce/edit.hpp"

namespace cce {

// Edits declared impossible in the current setting. The planner assigns them
// the infinite sentinel so they can never enter a minimal edit set.
struct CostPolicy {
    std::set<EditDescriptor> nonactionable;
    Cost infinite = Cost::infinite();

    void forbid(EditKind kind, std::string source, std::string target) {
        nonactionable.insert({kind, std::move(source), std::move(target)});
    }
    bool is_nonactionable(const EditDescriptor& e) const {
        return nonactionable.count(e) > 0;
    }
};

// Rooted, connected, undirected weighted concept graph. Shortest-path length
// between two concepts is the substitution cost; path length to the root is
// the insertion/deletion cost. Immutable after load; queries are
// thread-safe (the per-source distance cache is guarded by a mutex).
class Taxonomy {
public:
    // Parses an edge-list document: one edge per line, `parent child [weight]`,
    // `#` starts a comment, blank lines ignored. The parent of the first
    // content line is the root node. Weights default to 1.
    static Taxonomy load(std::string_view edge_list_text);

    const std::string& root() const { return names_[static_cast<std::size_t>(root_)]; }
    std::size_t node_count() const { return names_.size(); }
    bool contains(std::string_view concept_name) const;
    std::vector<std::string> nodes() const { return names_; }

    Cost concept_distance(const std::string& a, const std::string& b) const;
    Cost insertion_cost(const std::string& c) const;
    Cost deletion_cost(const std::string& c) const;

private:
    struct DistanceCache {
        std::mutex mutex;
        std::vector<std::vector<double>> rows;
    };

    Taxonomy() = default;

    int index_of(const std::string& concept_name) const;  // throws UnknownConcept
    // Returns the full Dijkstra row from `src`, computing and caching it on
    // first use. The reference stays valid for the Taxonomy's lifetime.
    const std::vector<double>& row(int src) const;

    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<std::pair<int, double>>> adjacency_;
    int root_ = 0;
    mutable std::unique_ptr<DistanceCache> cache_;
};

} // namespace cce
