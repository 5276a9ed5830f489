#include "cce/taxonomy.hpp"

#include <charconv>
#include <queue>
#include <sstream>

#include "cce/errors.hpp"
#include "cce/util.hpp"

namespace cce {

namespace {

double parse_weight(const std::string& token, int line_no) {
    double w = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), w);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": bad edge weight '" + token + "'");
    }
    if (w < 0.0) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": negative edge weight");
    }
    return w;
}

} // namespace

Taxonomy Taxonomy::load(std::string_view edge_list_text) {
    Taxonomy t;
    auto intern = [&t](const std::string& name) -> int {
        auto it = t.index_.find(name);
        if (it != t.index_.end()) return it->second;
        int id = static_cast<int>(t.names_.size());
        t.names_.push_back(name);
        t.index_.emplace(name, id);
        t.adjacency_.emplace_back();
        return id;
    };

    std::set<std::pair<int, int>> seen_edges;
    std::istringstream lines{std::string(edge_list_text)};
    std::string raw;
    int line_no = 0;
    bool saw_edge = false;
    while (std::getline(lines, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::vector<std::string> tokens = split_ws(raw);
        if (tokens.empty()) continue;
        if (tokens.size() > 3) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": expected 'parent child [weight]'");
        }
        if (tokens.size() == 1) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": edge needs two endpoints");
        }
        std::string parent = normalize_token(tokens[0]);
        std::string child = normalize_token(tokens[1]);
        if (parent.empty() || child.empty()) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": empty concept name");
        }
        if (parent == child) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": self-loop on '" + parent + "'");
        }
        double weight = tokens.size() == 3 ? parse_weight(tokens[2], line_no) : 1.0;

        int p = intern(parent);
        int c = intern(child);
        if (!saw_edge) {
            t.root_ = p;
            saw_edge = true;
        }
        auto key = std::minmax(p, c);
        if (!seen_edges.insert({key.first, key.second}).second) {
            throw Error(ErrorCode::DuplicateConcept,
                        "line " + std::to_string(line_no) + ": duplicate edge " + parent + " -- " + child);
        }
        t.adjacency_[static_cast<std::size_t>(p)].push_back({c, weight});
        t.adjacency_[static_cast<std::size_t>(c)].push_back({p, weight});
    }
    if (!saw_edge) {
        throw Error(ErrorCode::ParseError, "taxonomy document contains no edges");
    }

    // Connectivity check: every node must reach the root.
    std::vector<char> reached(t.names_.size(), 0);
    std::queue<int> frontier;
    frontier.push(t.root_);
    reached[static_cast<std::size_t>(t.root_)] = 1;
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        for (auto [v, w] : t.adjacency_[static_cast<std::size_t>(u)]) {
            (void)w;
            if (!reached[static_cast<std::size_t>(v)]) {
                reached[static_cast<std::size_t>(v)] = 1;
                frontier.push(v);
            }
        }
    }
    for (std::size_t i = 0; i < reached.size(); ++i) {
        if (!reached[i]) {
            throw Error(ErrorCode::DisconnectedGraph,
                        "concept '" + t.names_[i] + "' is unreachable from root '" + t.root() + "'");
        }
    }

    t.cache_ = std::make_unique<DistanceCache>();
    t.cache_->rows.resize(t.names_.size());
    return t;
}

bool Taxonomy::contains(std::string_view concept_name) const {
    return index_.count(normalize_token(concept_name)) > 0;
}

int Taxonomy::index_of(const std::string& concept_name) const {
    auto it = index_.find(normalize_token(concept_name));
    if (it == index_.end()) {
        throw Error(ErrorCode::UnknownConcept, "concept '" + concept_name + "' not in taxonomy");
    }
    return it->second;
}

const std::vector<double>& Taxonomy::row(int src) const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    std::vector<double>& cached = cache_->rows[static_cast<std::size_t>(src)];
    if (!cached.empty()) return cached;

    constexpr double kUnset = -1.0;
    std::vector<double> dist(names_.size(), kUnset);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.push({0.0, src});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (dist[static_cast<std::size_t>(u)] != kUnset) continue;
        dist[static_cast<std::size_t>(u)] = d;
        for (auto [v, w] : adjacency_[static_cast<std::size_t>(u)]) {
            if (dist[static_cast<std::size_t>(v)] == kUnset) heap.push({d + w, v});
        }
    }
    cached = std::move(dist);
    return cached;
}

Cost Taxonomy::concept_distance(const std::string& a, const std::string& b) const {
    int ia = index_of(a);
    int ib = index_of(b);
    return Cost(row(ia)[static_cast<std::size_t>(ib)]);
}

Cost Taxonomy::insertion_cost(const std::string& c) const {
    return concept_distance(c, root());
}

Cost Taxonomy::deletion_cost(const std::string& c) const {
    return concept_distance(c, root());
}

} // namespace cce
