#pragma once

// Feature extraction: state-level network metrics (with out-edge induced
// variants), user-level network/content/behavior features, external table
// joins, standardization, and the missing-value policy.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stancekit/graph.hpp"
#include "stancekit/matrix.hpp"
#include "stancekit/text.hpp"

namespace stancekit {

// G = sum_i sum_j |x_i - x_j| / (2 n^2 mean); all-zero input -> 0.
inline double gini(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("gini of empty vector");
    const std::size_t n = values.size();
    double sum = 0;
    for (double v : values) {
        if (v < 0) throw std::invalid_argument("gini requires non-negative values");
        sum += v;
    }
    if (sum == 0) return 0.0;
    // sorted form of the pairwise-difference formula, O(n log n)
    std::vector<double> x(values);
    std::sort(x.begin(), x.end());
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) * x[i];
    }
    return acc / (static_cast<double>(n) * sum);
}

// Weighted PageRank with uniform teleport; dangling mass redistributed
// uniformly. Returns a distribution over the graph's nodes (sums to 1).
inline std::vector<double> pagerank(const EndorsementGraph& g, double damping = 0.85,
                                    double tol = 1e-10, int max_iter = 1000) {
    const int n = static_cast<int>(g.node_count());
    if (n == 0) return {};
    std::vector<double> out_weight(static_cast<std::size_t>(n), 0.0);
    for (int u = 0; u < n; ++u) {
        for (const auto& [v, w] : g.out_edges(u)) out_weight[static_cast<std::size_t>(u)] += static_cast<double>(w);
    }
    std::vector<double> pr(static_cast<std::size_t>(n), 1.0 / n), next(static_cast<std::size_t>(n));
    for (int iter = 0; iter < max_iter; ++iter) {
        double dangling = 0;
        for (int u = 0; u < n; ++u) {
            if (out_weight[static_cast<std::size_t>(u)] == 0) dangling += pr[static_cast<std::size_t>(u)];
        }
        const double base = (1.0 - damping) / n + damping * dangling / n;
        std::fill(next.begin(), next.end(), base);
        for (int u = 0; u < n; ++u) {
            if (out_weight[static_cast<std::size_t>(u)] == 0) continue;
            const double share = damping * pr[static_cast<std::size_t>(u)] / out_weight[static_cast<std::size_t>(u)];
            for (const auto& [v, w] : g.out_edges(u)) {
                next[static_cast<std::size_t>(v)] += share * static_cast<double>(w);
            }
        }
        double diff = 0;
        for (int u = 0; u < n; ++u) diff += std::abs(next[static_cast<std::size_t>(u)] - pr[static_cast<std::size_t>(u)]);
        pr.swap(next);
        if (diff < tol) break;
    }
    return pr;
}

// Local clustering coefficient per node on the symmetrized, unweighted
// graph; degree < 2 -> 0.
inline std::vector<double> local_clustering(const EndorsementGraph& g) {
    const int n = static_cast<int>(g.node_count());
    auto sym = g.symmetrized();
    std::vector<std::set<int>> nbr(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u) {
        for (const auto& [v, w] : sym[static_cast<std::size_t>(u)]) nbr[static_cast<std::size_t>(u)].insert(v);
    }
    std::vector<double> cc(static_cast<std::size_t>(n), 0.0);
    for (int u = 0; u < n; ++u) {
        const auto& nu = nbr[static_cast<std::size_t>(u)];
        const std::size_t k = nu.size();
        if (k < 2) continue;
        std::size_t links = 0;
        for (int a : nu) {
            for (int b : nbr[static_cast<std::size_t>(a)]) {
                if (b > a && nu.count(b)) ++links;
            }
        }
        cc[static_cast<std::size_t>(u)] = 2.0 * static_cast<double>(links) /
                                          (static_cast<double>(k) * static_cast<double>(k - 1));
    }
    return cc;
}

// Pearson correlation of endpoint total (in+out) degrees over the
// symmetrized edges; missing when < 2 edges or a constant side.
inline double degree_assortativity(const EndorsementGraph& g) {
    const int n = static_cast<int>(g.node_count());
    std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
    for (int u = 0; u < n; ++u) {
        deg[static_cast<std::size_t>(u)] += static_cast<double>(g.out_edges(u).size());
        deg[static_cast<std::size_t>(u)] += static_cast<double>(g.in_edges(u).size());
    }
    std::vector<double> xs, ys;
    auto sym = g.symmetrized();
    for (int u = 0; u < n; ++u) {
        for (const auto& [v, w] : sym[static_cast<std::size_t>(u)]) {
            // both orientations included, standard for undirected assortativity
            xs.push_back(deg[static_cast<std::size_t>(u)]);
            ys.push_back(deg[static_cast<std::size_t>(v)]);
        }
    }
    if (xs.size() < 2) return kMissing;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0 || syy == 0) return kMissing;
    return sxy / std::sqrt(sxx * syy);
}

struct GraphMetrics {
    double nodes = 0;
    double edges = 0;
    double clustering = kMissing;      // mean local clustering
    double density = kMissing;         // |E| / (|V| (|V|-1)), directed pairs
    double max_edge_weight = kMissing;
    double assortativity = kMissing;
    double gini_in_degree = kMissing;
};

inline GraphMetrics graph_metrics(const EndorsementGraph& g) {
    GraphMetrics m;
    const int n = static_cast<int>(g.node_count());
    m.nodes = n;
    m.edges = static_cast<double>(g.edge_count());
    if (n >= 1) {
        auto cc = local_clustering(g);
        double s = 0;
        for (double c : cc) s += c;
        m.clustering = s / n;
        std::vector<double> indeg(static_cast<std::size_t>(n));
        double maxw = 0;
        bool any_edge = false;
        for (int u = 0; u < n; ++u) {
            indeg[static_cast<std::size_t>(u)] = static_cast<double>(g.in_edges(u).size());
            for (const auto& [v, w] : g.out_edges(u)) {
                maxw = std::max(maxw, static_cast<double>(w));
                any_edge = true;
            }
        }
        m.gini_in_degree = gini(indeg);
        if (any_edge) m.max_edge_weight = maxw;
    }
    if (n >= 2) {
        m.density = m.edges / (static_cast<double>(n) * static_cast<double>(n - 1));
        m.assortativity = degree_assortativity(g);
    }
    return m;
}

// Per-state network feature rows (Table 1 network block): metrics on the
// in-state induced subgraph, on its out-edge induced variant, and on the
// per-side restrictions; plus the gun-rights node proportion and its
// deviation from the global share.
inline FeatureMatrix state_network_features(const EndorsementGraph& g,
                                            const std::map<std::string, std::string>& state_of,
                                            const SideLabels& sides) {
    std::map<std::string, NodeSet> by_state;
    std::size_t rights_global = 0, labeled_global = 0;
    for (const std::string& id : g.node_ids()) {
        auto it = state_of.find(id);
        if (it != state_of.end()) by_state[it->second].insert(id);
        auto sit = sides.label.find(id);
        if (sit != sides.label.end() && sit->second != Side::unknown) {
            ++labeled_global;
            if (sit->second == Side::rights) ++rights_global;
        }
    }
    const double global_rights_share =
        labeled_global == 0 ? 0.0 : static_cast<double>(rights_global) / static_cast<double>(labeled_global);

    std::vector<std::string> states;
    for (const auto& [st, nodes] : by_state) states.push_back(st);
    FeatureMatrix m(states);

    struct ColSet {
        std::vector<double> nodes, edges, clustering, density, maxw, assort, gini_in;
    };
    auto collect = [&](const std::function<GraphMetrics(const NodeSet&)>& f) {
        ColSet cs;
        for (const auto& st : states) {
            GraphMetrics gm = f(by_state.at(st));
            cs.nodes.push_back(gm.nodes);
            cs.edges.push_back(gm.edges);
            cs.clustering.push_back(gm.clustering);
            cs.density.push_back(gm.density);
            cs.maxw.push_back(gm.max_edge_weight);
            cs.assort.push_back(gm.assortativity);
            cs.gini_in.push_back(gm.gini_in_degree);
        }
        return cs;
    };
    auto add_set = [&](const std::string& prefix, const ColSet& cs, bool with_extras) {
        m.add_column(prefix + "nodes", "network", cs.nodes);
        m.add_column(prefix + "edges", "network", cs.edges);
        m.add_column(prefix + "clustering", "network", cs.clustering);
        m.add_column(prefix + "density", "network", cs.density);
        if (with_extras) {
            m.add_column(prefix + "max_edge_weight", "network", cs.maxw);
            m.add_column(prefix + "assortativity", "network", cs.assort);
            m.add_column(prefix + "gini_indegree", "network", cs.gini_in);
        }
    };

    auto side_subset = [&](const NodeSet& nodes, Side s) {
        NodeSet out;
        for (const auto& id : nodes) {
            auto it = sides.label.find(id);
            if (it != sides.label.end() && it->second == s) out.insert(id);
        }
        return out;
    };

    add_set("net_", collect([&](const NodeSet& ns) { return graph_metrics(induced_subgraph(g, ns)); }), true);
    add_set("net_eig_", collect([&](const NodeSet& ns) { return graph_metrics(out_edge_induced_subgraph(g, ns)); }),
            false);
    add_set("net_rights_",
            collect([&](const NodeSet& ns) { return graph_metrics(induced_subgraph(g, side_subset(ns, Side::rights))); }),
            true);
    add_set("net_control_",
            collect([&](const NodeSet& ns) { return graph_metrics(induced_subgraph(g, side_subset(ns, Side::control))); }),
            true);

    std::vector<double> rights_prop, prop_dev;
    for (const auto& st : states) {
        const NodeSet& ns = by_state.at(st);
        std::size_t rights = 0, labeled = 0;
        for (const auto& id : ns) {
            auto it = sides.label.find(id);
            if (it != sides.label.end() && it->second != Side::unknown) {
                ++labeled;
                if (it->second == Side::rights) ++rights;
            }
        }
        double share = labeled == 0 ? kMissing : static_cast<double>(rights) / static_cast<double>(labeled);
        rights_prop.push_back(share);
        prop_dev.push_back(is_missing(share) ? kMissing : std::abs(share - global_rights_share));
    }
    m.add_column("net_rights_proportion", "network", rights_prop);
    m.add_column("net_prop_deviation", "network", prop_dev);
    return m;
}

struct UserNetworkFeatures {
    double in_gcc = 0;
    double in_degree = 0;
    double out_degree = 0;
    double max_in_weight = 0;
    double max_out_weight = 0;
    double pagerank = kMissing;
    double clustering = kMissing;
    double avg_in_nbr_in_degree = kMissing;
    double avg_out_nbr_in_degree = kMissing;
};

// Precomputed whole-graph quantities shared across users.
struct GraphFeatureContext {
    const EndorsementGraph& g;
    NodeSet gcc;
    std::vector<double> pr;
    std::vector<double> cc;

    explicit GraphFeatureContext(const EndorsementGraph& graph)
        : g(graph), gcc(giant_component(graph)), pr(pagerank(graph)), cc(local_clustering(graph)) {}
};

inline UserNetworkFeatures user_network_features(const GraphFeatureContext& ctx, const std::string& user) {
    UserNetworkFeatures f;
    if (!ctx.g.has_node(user)) return f;  // outside the graph: zeros + missing
    const int u = ctx.g.index_of(user);
    f.in_gcc = ctx.gcc.count(user) ? 1.0 : 0.0;
    f.in_degree = static_cast<double>(ctx.g.in_edges(u).size());
    f.out_degree = static_cast<double>(ctx.g.out_edges(u).size());
    for (const auto& [v, w] : ctx.g.in_edges(u)) f.max_in_weight = std::max(f.max_in_weight, static_cast<double>(w));
    for (const auto& [v, w] : ctx.g.out_edges(u)) f.max_out_weight = std::max(f.max_out_weight, static_cast<double>(w));
    f.pagerank = ctx.pr[static_cast<std::size_t>(u)];
    f.clustering = ctx.cc[static_cast<std::size_t>(u)];
    auto nbr_avg = [&](const std::vector<std::pair<int, std::int64_t>>& edges) {
        if (edges.empty()) return kMissing;
        double s = 0;
        for (const auto& [v, w] : edges) s += static_cast<double>(ctx.g.in_edges(v).size());
        return s / static_cast<double>(edges.size());
    };
    f.avg_in_nbr_in_degree = nbr_avg(ctx.g.in_edges(u));
    f.avg_out_nbr_in_degree = nbr_avg(ctx.g.out_edges(u));
    return f;
}

struct ContentBehaviorInputs {
    const Lexicon* hate = nullptr;       // term-set lexicon
    const Lexicon* sentiment = nullptr;  // scored lexicon
    const CategoryDictionary* categories = nullptr;
    std::set<std::string> gun_keywords;  // tokens marking a post as gun-related
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;
    const std::set<std::string>* stopwords = nullptr;
};

// One user-level content + behavior row. Column order is fixed so that
// assembled matrices are byte-stable.
inline std::vector<std::pair<std::string, std::pair<std::string, double>>> user_content_behavior_features(
    const UserRecord& user, const std::vector<Post>& posts, const TokenDoc& doc,
    const ContentBehaviorInputs& in) {
    std::map<std::string, std::int64_t> rt_sources, hashtag_counts;
    std::int64_t rt_count = 0, hashtag_total = 0, gun_tweets = 0;
    static const std::set<std::string> kNoStopwords;
    const std::set<std::string>& stop = in.stopwords ? *in.stopwords : kNoStopwords;
    for (std::size_t idx : user.post_indices) {
        const Post& p = posts[idx];
        if (p.is_retweet()) {
            ++rt_count;
            ++rt_sources[*p.retweeted_user_id];
        }
        for (const auto& h : p.hashtags) {
            ++hashtag_counts[h];
            ++hashtag_total;
        }
        if (!in.gun_keywords.empty()) {
            for (const auto& tok : tokenize(p.text, stop)) {
                if (in.gun_keywords.count(tok)) {
                    ++gun_tweets;
                    break;
                }
            }
        }
    }
    const double window_days =
        std::max(1.0, static_cast<double>(in.window_end - in.window_start) / 86400.0);
    const double account_age_days =
        static_cast<double>(in.window_end - user.account_created) / 86400.0;

    std::vector<std::pair<std::string, std::pair<std::string, double>>> row;
    auto put = [&](const std::string& name, const std::string& tag, double v) {
        row.push_back({name, {tag, v}});
    };
    put("con_rt_count", "content", static_cast<double>(rt_count));
    put("con_rt_entropy", "content", shannon_entropy(rt_sources));
    put("con_hashtag_count", "content", static_cast<double>(hashtag_total));
    put("con_hashtag_entropy", "content", shannon_entropy(hashtag_counts));
    put("con_voca", "content", static_cast<double>(doc.tokens.size()));
    put("con_voca_entropy", "content", shannon_entropy(doc.tokens));
    put("con_hate_rate", "content", in.hate ? lexicon_rate(doc, *in.hate) : kMissing);
    if (in.sentiment) {
        auto s = sentiment_avg(doc, *in.sentiment);
        put("con_sentiment", "content", s ? *s : kMissing);
    } else {
        put("con_sentiment", "content", kMissing);
    }
    put("twt_userfollowerscount", "behavior", user.has_profile ? static_cast<double>(user.followers_count) : kMissing);
    put("twt_userfriendscount", "behavior", user.has_profile ? static_cast<double>(user.friends_count) : kMissing);
    put("twt_ffratio", "behavior",
        user.has_profile && user.friends_count > 0
            ? static_cast<double>(user.followers_count) / static_cast<double>(user.friends_count)
            : kMissing);
    put("twt_accage", "behavior", user.has_profile ? account_age_days : kMissing);
    put("twt_guntweetcnt", "behavior", static_cast<double>(gun_tweets));
    put("twt_guntweetrate", "behavior", static_cast<double>(gun_tweets) / window_days);
    put("twt_alltweetrate", "behavior", static_cast<double>(user.tweet_count) / window_days);
    put("twt_engtweetcnt", "behavior", static_cast<double>(user.english_tweet_count));
    if (in.categories) {
        for (const auto& [cat, rate] : category_rates(doc, *in.categories)) {
            put("liwc_" + cat, "liwc", rate);
        }
    }
    return row;
}

// Appends the table's columns; unmatched keys leave missing cells.
// Existing cells are never changed.
inline FeatureMatrix join_external(const FeatureMatrix& m, const ExternalTable& t,
                                   const std::function<std::string(const std::string&)>& key_map,
                                   const std::string& tag) {
    FeatureMatrix out = m;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        std::vector<double> vals;
        vals.reserve(m.n_rows());
        for (const auto& row_key : m.row_keys()) {
            auto it = t.rows.find(key_map(row_key));
            vals.push_back(it == t.rows.end() ? kMissing : it->second[c]);
        }
        out.add_column(t.columns[c], tag, std::move(vals));
    }
    return out;
}

inline double sample_skewness(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0, m3 = 0;
    for (double x : xs) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 == 0) return 0;
    return m3 / std::pow(m2, 1.5);
}

// Per column: log(1 + x - min(x)) when sample skewness magnitude exceeds
// 2, then z-score. Missing cells pass through; constant columns become
// all zeros and are reported in `warnings`.
inline FeatureMatrix standardize_and_transform(const FeatureMatrix& m,
                                               std::vector<std::string>* warnings = nullptr) {
    FeatureMatrix out(m.row_keys());
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        std::vector<double> col = m.column(c);
        std::vector<double> present;
        for (double v : col) {
            if (!is_missing(v)) present.push_back(v);
        }
        if (present.empty()) {
            out.add_column(m.column_names()[c], m.provenance(c), col);
            continue;
        }
        if (std::abs(sample_skewness(present)) > 2.0) {
            double mn = *std::min_element(present.begin(), present.end());
            for (double& v : col) {
                if (!is_missing(v)) v = std::log1p(v - mn);
            }
            present.clear();
            for (double v : col) {
                if (!is_missing(v)) present.push_back(v);
            }
        }
        double mean = 0;
        for (double v : present) mean += v;
        mean /= static_cast<double>(present.size());
        double var = 0;
        for (double v : present) var += (v - mean) * (v - mean);
        var = present.size() > 1 ? var / static_cast<double>(present.size() - 1) : 0.0;
        if (var == 0) {
            for (double& v : col) {
                if (!is_missing(v)) v = 0.0;
            }
            if (warnings) warnings->push_back("constant column zeroed: " + m.column_names()[c]);
        } else {
            double sd = std::sqrt(var);
            for (double& v : col) {
                if (!is_missing(v)) v = (v - mean) / sd;
            }
        }
        out.add_column(m.column_names()[c], m.provenance(c), std::move(col));
    }
    return out;
}

// Drop columns with missing fraction > col_threshold, then drop rows
// containing any missing value.
inline FeatureMatrix missing_policy(const FeatureMatrix& m, double col_threshold = 0.5,
                                    std::vector<std::string>* dropped_columns = nullptr) {
    std::vector<std::string> keep_cols;
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        std::size_t missing = 0;
        for (std::size_t r = 0; r < m.n_rows(); ++r) {
            if (is_missing(m.cell(r, c))) ++missing;
        }
        double frac = m.n_rows() == 0 ? 0.0 : static_cast<double>(missing) / static_cast<double>(m.n_rows());
        if (frac > col_threshold) {
            if (dropped_columns) dropped_columns->push_back(m.column_names()[c]);
        } else {
            keep_cols.push_back(m.column_names()[c]);
        }
    }
    FeatureMatrix cols = m.select_columns(keep_cols);
    std::vector<std::size_t> keep_rows;
    for (std::size_t r = 0; r < cols.n_rows(); ++r) {
        bool complete = true;
        for (std::size_t c = 0; c < cols.n_cols(); ++c) {
            if (is_missing(cols.cell(r, c))) {
                complete = false;
                break;
            }
        }
        if (complete) keep_rows.push_back(r);
    }
    return cols.select_rows(keep_rows);
}

}  // namespace stancekit
