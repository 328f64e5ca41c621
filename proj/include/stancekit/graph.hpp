#pragma once

// Weighted directed endorsement graph (retweeter -> retweeted) with
// component and subgraph utilities. Node ids are kept sorted so every
// derived index is deterministic.

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "stancekit/common.hpp"
#include "stancekit/ingest.hpp"

namespace stancekit {

using NodeSet = std::set<std::string>;

class EndorsementGraph {
public:
    EndorsementGraph() = default;

    // edges: (source,target) -> weight, self-loops and sub-threshold
    // weights already removed by the builder.
    static EndorsementGraph from_edges(const std::map<std::pair<std::string, std::string>, std::int64_t>& edges,
                                       const std::set<std::string>& extra_nodes = {}) {
        EndorsementGraph g;
        std::set<std::string> nodes(extra_nodes);
        for (const auto& [e, w] : edges) {
            nodes.insert(e.first);
            nodes.insert(e.second);
        }
        g.ids_.assign(nodes.begin(), nodes.end());
        for (std::size_t i = 0; i < g.ids_.size(); ++i) g.index_[g.ids_[i]] = static_cast<int>(i);
        g.out_.resize(g.ids_.size());
        g.in_.resize(g.ids_.size());
        for (const auto& [e, w] : edges) {
            int s = g.index_.at(e.first), t = g.index_.at(e.second);
            g.out_[s].push_back({t, w});
            g.in_[t].push_back({s, w});
        }
        return g;
    }

    std::size_t node_count() const { return ids_.size(); }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& adj : out_) n += adj.size();
        return n;
    }

    const std::vector<std::string>& node_ids() const { return ids_; }

    bool has_node(const std::string& id) const { return index_.count(id) > 0; }

    int index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw std::out_of_range("unknown node: " + id);
        return it->second;
    }

    const std::string& id_of(int idx) const { return ids_.at(static_cast<std::size_t>(idx)); }

    const std::vector<std::pair<int, std::int64_t>>& out_edges(int idx) const {
        return out_.at(static_cast<std::size_t>(idx));
    }
    const std::vector<std::pair<int, std::int64_t>>& in_edges(int idx) const {
        return in_.at(static_cast<std::size_t>(idx));
    }

    // Symmetrized adjacency: weight(u,v) = w(u->v) + w(v->u); one entry
    // per neighbor, sorted by index.
    std::vector<std::vector<std::pair<int, double>>> symmetrized() const {
        std::vector<std::map<int, double>> acc(ids_.size());
        for (std::size_t u = 0; u < out_.size(); ++u) {
            for (const auto& [v, w] : out_[u]) {
                acc[u][v] += static_cast<double>(w);
                acc[static_cast<std::size_t>(v)][static_cast<int>(u)] += static_cast<double>(w);
            }
        }
        std::vector<std::vector<std::pair<int, double>>> adj(ids_.size());
        for (std::size_t u = 0; u < acc.size(); ++u) adj[u].assign(acc[u].begin(), acc[u].end());
        return adj;
    }

    void export_csv(std::ostream& out) const {
        out << "source,target,weight\n";
        for (std::size_t u = 0; u < out_.size(); ++u) {
            for (const auto& [v, w] : out_[u]) {
                out << csv_escape(ids_[u]) << ',' << csv_escape(ids_[static_cast<std::size_t>(v)])
                    << ',' << w << '\n';
            }
        }
    }

    static EndorsementGraph import_csv(std::istream& in) {
        std::map<std::pair<std::string, std::string>, std::int64_t> edges;
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto f = split_csv_line(line);
            if (first && f.size() >= 1 && f[0] == "source") {
                first = false;
                continue;
            }
            first = false;
            if (f.size() != 3) throw std::runtime_error("edge list: bad row: " + line);
            edges[{f[0], f[1]}] = std::stoll(f[2]);
        }
        return from_edges(edges);
    }

private:
    std::vector<std::string> ids_;  // sorted
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<std::pair<int, std::int64_t>>> out_;
    std::vector<std::vector<std::pair<int, std::int64_t>>> in_;
};

// Weight = number of times source retweeted target; both endpoints must
// be in the kept set; self-retweets dropped; weights below min_weight
// removed. Order of input posts does not affect the result.
inline EndorsementGraph build_endorsement_graph(const std::vector<Post>& posts,
                                                const std::set<std::string>& kept,
                                                std::int64_t min_weight = 2) {
    if (min_weight < 1) throw std::invalid_argument("min_weight must be >= 1");
    std::map<std::pair<std::string, std::string>, std::int64_t> counts;
    for (const Post& p : posts) {
        if (!p.is_retweet()) continue;
        const std::string& src = p.user_id;
        const std::string& dst = *p.retweeted_user_id;
        if (src == dst) continue;
        if (!kept.count(src) || !kept.count(dst)) continue;
        ++counts[{src, dst}];
    }
    std::map<std::pair<std::string, std::string>, std::int64_t> edges;
    for (const auto& [e, w] : counts) {
        if (w >= min_weight) edges[e] = w;
    }
    return EndorsementGraph::from_edges(edges);
}

// Largest weakly connected component; ties broken by smallest member id.
inline NodeSet giant_component(const EndorsementGraph& g) {
    const std::size_t n = g.node_count();
    if (n == 0) return {};
    std::vector<int> comp(n, -1);
    int ncomp = 0;
    std::vector<int> stack;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        stack.push_back(static_cast<int>(s));
        comp[s] = ncomp;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (const auto& [v, w] : g.out_edges(u)) {
                if (comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = ncomp;
                    stack.push_back(v);
                }
            }
            for (const auto& [v, w] : g.in_edges(u)) {
                if (comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = ncomp;
                    stack.push_back(v);
                }
            }
        }
        ++ncomp;
    }
    std::vector<std::size_t> size(static_cast<std::size_t>(ncomp), 0);
    for (std::size_t i = 0; i < n; ++i) ++size[static_cast<std::size_t>(comp[i])];
    // node ids are sorted, so the first node of a component is its
    // smallest member; scanning in id order settles size ties
    int best = -1;
    std::size_t best_size = 0;
    for (std::size_t i = 0; i < n; ++i) {
        int c = comp[i];
        if (size[static_cast<std::size_t>(c)] > best_size) {
            best_size = size[static_cast<std::size_t>(c)];
            best = c;
        }
    }
    NodeSet out;
    for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] == best) out.insert(g.id_of(static_cast<int>(i)));
    }
    return out;
}

// Keeps every edge whose source is in members (targets may lie outside)
// plus all endpoint nodes and isolated members.
inline EndorsementGraph out_edge_induced_subgraph(const EndorsementGraph& g, const NodeSet& members) {
    std::map<std::pair<std::string, std::string>, std::int64_t> edges;
    for (const std::string& id : members) {
        if (!g.has_node(id)) throw std::invalid_argument("member not in graph: " + id);
        int u = g.index_of(id);
        for (const auto& [v, w] : g.out_edges(u)) {
            edges[{id, g.id_of(v)}] = w;
        }
    }
    return EndorsementGraph::from_edges(edges, members);
}

// Subgraph on a node set: keeps edges with both endpoints inside.
inline EndorsementGraph induced_subgraph(const EndorsementGraph& g, const NodeSet& members) {
    std::map<std::pair<std::string, std::string>, std::int64_t> edges;
    for (const std::string& id : members) {
        if (!g.has_node(id)) throw std::invalid_argument("member not in graph: " + id);
        int u = g.index_of(id);
        for (const auto& [v, w] : g.out_edges(u)) {
            const std::string& tid = g.id_of(v);
            if (members.count(tid)) edges[{id, tid}] = w;
        }
    }
    return EndorsementGraph::from_edges(edges, members);
}

}  // namespace stancekit
