#pragma once

// Balanced two-way multilevel partitioning of the endorsement graph:
// heavy-edge matching coarsening, seeded region-growing bisection,
// Fiduccia-Mattheyses boundary refinement, ensemble polarity scoring,
// Newman modularity, Louvain comparison, and anchor-based side labels.
//
// Directed weights are symmetrized (sum of both directions) for both
// partitioning and modularity; the cut objective is weighted edge cut.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stancekit/graph.hpp"

namespace stancekit {

enum class Side { control, rights, unknown };

inline const char* side_name(Side s) {
    switch (s) {
        case Side::control: return "control";
        case Side::rights: return "rights";
        default: return "unknown";
    }
}

struct PartitionAssignment {
    std::map<std::string, int> side;  // node -> {0,1}; side 1 is the grown (target-ratio) side
    double balance_ratio = 1.0;       // target size ratio side1:side0
    double achieved_imbalance = 0.0;  // max side fraction of total
    double cut_weight = 0.0;
};

struct PolarityScores {
    std::map<std::string, double> p;  // node -> fraction of aligned runs on side 1
    int ensemble_size = 0;
    std::uint64_t base_seed = 0;
};

struct SideLabels {
    std::map<std::string, Side> label;
    std::vector<std::pair<std::string, Side>> anchors_used;
};

namespace detail {

// Undirected weighted graph on dense indices; vertex weights carry the
// number of original nodes a coarse vertex represents.
struct WorkGraph {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;  // no self entries
    std::vector<double> vwgt;

    double total_vwgt() const { return std::accumulate(vwgt.begin(), vwgt.end(), 0.0); }
};

inline WorkGraph make_work_graph(const EndorsementGraph& g) {
    WorkGraph wg;
    wg.n = static_cast<int>(g.node_count());
    auto sym = g.symmetrized();
    wg.adj.resize(static_cast<std::size_t>(wg.n));
    for (int u = 0; u < wg.n; ++u) wg.adj[static_cast<std::size_t>(u)] = std::move(sym[static_cast<std::size_t>(u)]);
    wg.vwgt.assign(static_cast<std::size_t>(wg.n), 1.0);
    return wg;
}

inline bool is_connected(const WorkGraph& g) {
    if (g.n == 0) return true;
    std::vector<char> seen(static_cast<std::size_t>(g.n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == g.n;
}

// Heavy-edge matching: unmatched nodes visited in shuffled order pair
// with their unmatched max-weight neighbor (ties -> smaller index).
// Returns fine->coarse map and the coarse graph.
inline std::pair<WorkGraph, std::vector<int>> coarsen_hem(const WorkGraph& g, std::mt19937& rng) {
    std::vector<int> order(static_cast<std::size_t>(g.n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<int> match(static_cast<std::size_t>(g.n), -1);
    for (int u : order) {
        if (match[static_cast<std::size_t>(u)] >= 0) continue;
        int best = -1;
        double best_w = -1.0;
        for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
            if (match[static_cast<std::size_t>(v)] >= 0) continue;
            if (w > best_w || (w == best_w && (best < 0 || v < best))) {
                best = v;
                best_w = w;
            }
        }
        if (best >= 0) {
            match[static_cast<std::size_t>(u)] = best;
            match[static_cast<std::size_t>(best)] = u;
        } else {
            match[static_cast<std::size_t>(u)] = u;
        }
    }

    std::vector<int> fine_to_coarse(static_cast<std::size_t>(g.n), -1);
    int cn = 0;
    for (int u = 0; u < g.n; ++u) {
        if (fine_to_coarse[static_cast<std::size_t>(u)] >= 0) continue;
        int v = match[static_cast<std::size_t>(u)];
        fine_to_coarse[static_cast<std::size_t>(u)] = cn;
        if (v != u) fine_to_coarse[static_cast<std::size_t>(v)] = cn;
        ++cn;
    }

    WorkGraph cg;
    cg.n = cn;
    cg.vwgt.assign(static_cast<std::size_t>(cn), 0.0);
    for (int u = 0; u < g.n; ++u) {
        cg.vwgt[static_cast<std::size_t>(fine_to_coarse[static_cast<std::size_t>(u)])] +=
            g.vwgt[static_cast<std::size_t>(u)];
    }
    std::vector<std::map<int, double>> acc(static_cast<std::size_t>(cn));
    for (int u = 0; u < g.n; ++u) {
        int cu = fine_to_coarse[static_cast<std::size_t>(u)];
        for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
            int cv = fine_to_coarse[static_cast<std::size_t>(v)];
            if (cu != cv) acc[static_cast<std::size_t>(cu)][cv] += w;
        }
    }
    cg.adj.resize(static_cast<std::size_t>(cn));
    for (int u = 0; u < cn; ++u) {
        for (auto& [v, w] : acc[static_cast<std::size_t>(u)]) {
            // symmetric accumulation counted each direction once already
            cg.adj[static_cast<std::size_t>(u)].push_back({v, w});
        }
    }
    return {std::move(cg), std::move(fine_to_coarse)};
}

inline double cut_weight(const WorkGraph& g, const std::vector<int>& part) {
    double cut = 0;
    for (int u = 0; u < g.n; ++u) {
        for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
            if (v > u && part[static_cast<std::size_t>(u)] != part[static_cast<std::size_t>(v)]) cut += w;
        }
    }
    return cut;
}

struct BalanceSpec {
    double target1;  // target vertex weight of side 1
    double lo1;      // allowed side-1 weight range
    double hi1;
};

// Greedy region growing: side 1 grows from a random seed along the
// strongest frontier connections until its weight is as close to the
// target as the granularity allows.
inline std::vector<int> grow_initial(const WorkGraph& g, const BalanceSpec& bal, std::mt19937& rng) {
    std::vector<int> part(static_cast<std::size_t>(g.n), 0);
    if (g.n == 0) return part;
    std::vector<double> conn(static_cast<std::size_t>(g.n), 0.0);
    std::vector<char> in1(static_cast<std::size_t>(g.n), 0);

    std::uniform_int_distribution<int> pick(0, g.n - 1);
    int start = pick(rng);
    double w1 = 0;
    auto add = [&](int u) {
        in1[static_cast<std::size_t>(u)] = 1;
        w1 += g.vwgt[static_cast<std::size_t>(u)];
        for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) conn[static_cast<std::size_t>(v)] += w;
    };
    add(start);
    while (w1 < bal.target1) {
        int best = -1;
        double best_c = -1.0;
        for (int v = 0; v < g.n; ++v) {
            if (in1[static_cast<std::size_t>(v)]) continue;
            if (conn[static_cast<std::size_t>(v)] > best_c ||
                (conn[static_cast<std::size_t>(v)] == best_c && (best < 0 || v < best))) {
                best = v;
                best_c = conn[static_cast<std::size_t>(v)];
            }
        }
        if (best < 0) break;
        double nw = g.vwgt[static_cast<std::size_t>(best)];
        // only step past the target if that lands closer to it
        if (std::abs(w1 + nw - bal.target1) >= std::abs(w1 - bal.target1) && w1 > 0) break;
        add(best);
    }
    for (int u = 0; u < g.n; ++u) part[static_cast<std::size_t>(u)] = in1[static_cast<std::size_t>(u)] ? 1 : 0;
    return part;
}

// One Fiduccia-Mattheyses pass: nodes move at most once, moves track a
// running cut, and the pass rolls back to the best balanced prefix, so
// a pass that starts balanced never increases the cut.
inline bool fm_pass(const WorkGraph& g, std::vector<int>& part, const BalanceSpec& bal) {
    const int n = g.n;
    std::vector<double> gain(static_cast<std::size_t>(n), 0.0);
    double w1 = 0;
    for (int u = 0; u < n; ++u) {
        if (part[static_cast<std::size_t>(u)] == 1) w1 += g.vwgt[static_cast<std::size_t>(u)];
        double ext = 0, in = 0;
        for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
            if (part[static_cast<std::size_t>(v)] == part[static_cast<std::size_t>(u)]) in += w;
            else ext += w;
        }
        gain[static_cast<std::size_t>(u)] = ext - in;
    }

    // lazy max-heap keyed by (gain, -index) with stale-entry skipping
    using Entry = std::pair<double, int>;
    auto cmp = [](const Entry& a, const Entry& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    std::vector<char> moved(static_cast<std::size_t>(n), 0);
    for (int u = 0; u < n; ++u) heap.push({gain[static_cast<std::size_t>(u)], u});

    auto balanced = [&](double w) { return w >= bal.lo1 && w <= bal.hi1; };
    const bool start_balanced = balanced(w1);

    double cur_delta = 0, best_delta = 0;
    double best_w1 = w1;
    std::vector<int> move_seq;
    int best_prefix = 0;
    int stall = 0;
    const int stall_limit = std::max(64, n / 8);
    bool have_best = start_balanced;

    while (!heap.empty() && stall < stall_limit) {
        auto [gval, u] = heap.top();
        heap.pop();
        if (moved[static_cast<std::size_t>(u)] || gval != gain[static_cast<std::size_t>(u)]) continue;
        int from = part[static_cast<std::size_t>(u)];
        double nw1 = w1 + (from == 1 ? -g.vwgt[static_cast<std::size_t>(u)] : g.vwgt[static_cast<std::size_t>(u)]);
        if (balanced(w1)) {
            if (!balanced(nw1)) continue;  // never leave the feasible band
        } else {
            if (std::abs(nw1 - bal.target1) >= std::abs(w1 - bal.target1)) continue;
        }

        moved[static_cast<std::size_t>(u)] = 1;
        part[static_cast<std::size_t>(u)] = 1 - from;
        w1 = nw1;
        cur_delta -= gain[static_cast<std::size_t>(u)];
        move_seq.push_back(u);
        for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
            if (moved[static_cast<std::size_t>(v)]) continue;
            // u changed sides: edge (u,v) flips between internal/external
            if (part[static_cast<std::size_t>(v)] == part[static_cast<std::size_t>(u)]) {
                gain[static_cast<std::size_t>(v)] -= 2 * w;
            } else {
                gain[static_cast<std::size_t>(v)] += 2 * w;
            }
            heap.push({gain[static_cast<std::size_t>(v)], v});
        }

        bool better = balanced(w1) &&
                      (!have_best || cur_delta < best_delta ||
                       (cur_delta == best_delta && std::abs(w1 - bal.target1) < std::abs(best_w1 - bal.target1)));
        if (better) {
            best_delta = cur_delta;
            best_w1 = w1;
            best_prefix = static_cast<int>(move_seq.size());
            have_best = true;
            stall = 0;
        } else {
            ++stall;
        }
    }

    // roll back moves past the best balanced prefix; if balance was never
    // reached, every executed move stepped toward the target, so keep all
    if (!have_best) best_prefix = static_cast<int>(move_seq.size());
    for (int i = static_cast<int>(move_seq.size()) - 1; i >= best_prefix; --i) {
        int u = move_seq[static_cast<std::size_t>(i)];
        part[static_cast<std::size_t>(u)] = 1 - part[static_cast<std::size_t>(u)];
    }
    return have_best && best_delta < 0;
}

inline void refine(const WorkGraph& g, std::vector<int>& part, const BalanceSpec& bal) {
    auto side1_weight = [&] {
        double w = 0;
        for (int u = 0; u < g.n; ++u) {
            if (part[static_cast<std::size_t>(u)] == 1) w += g.vwgt[static_cast<std::size_t>(u)];
        }
        return w;
    };
    for (int pass = 0; pass < 10; ++pass) {
        double before = std::abs(side1_weight() - bal.target1);
        bool cut_improved = fm_pass(g, part, bal);
        double after = std::abs(side1_weight() - bal.target1);
        if (!cut_improved && after >= before) break;
    }
}

}  // namespace detail

// Multilevel balanced bisection. Deterministic given (graph, ratio, seed).
// The graph must be weakly connected (pass the GCC).
inline PartitionAssignment bisect(const EndorsementGraph& g, double balance_ratio, std::uint64_t seed) {
    if (balance_ratio <= 0) throw std::invalid_argument("balance_ratio must be > 0");
    if (g.node_count() == 0) throw std::invalid_argument("empty graph");
    detail::WorkGraph base = detail::make_work_graph(g);
    if (!detail::is_connected(base)) {
        throw std::invalid_argument("bisect requires a connected graph; pass the giant component");
    }

    const double total = base.total_vwgt();
    const double target1 = total * balance_ratio / (1.0 + balance_ratio);
    if (target1 < 1.0 || total - target1 < 1.0) {
        throw std::invalid_argument("balance ratio leaves one side with < 1 node");
    }
    detail::BalanceSpec bal{target1, target1 * 0.97, target1 * 1.03};

    std::mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));

    // coarsen
    std::vector<detail::WorkGraph> levels;
    std::vector<std::vector<int>> maps;  // fine -> coarse per level
    levels.push_back(std::move(base));
    while (levels.back().n > 64) {
        auto [cg, f2c] = detail::coarsen_hem(levels.back(), rng);
        if (cg.n >= static_cast<int>(0.95 * levels.back().n)) break;  // no matching progress
        levels.push_back(std::move(cg));
        maps.push_back(std::move(f2c));
    }

    // initial bisection at the coarsest level: best of four grown cuts,
    // preferring feasible balance, then lower cut; then uncoarsen + refine
    std::vector<int> part;
    double best_cut = 0;
    bool best_ok = false;
    for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<int> cand = detail::grow_initial(levels.back(), bal, rng);
        detail::refine(levels.back(), cand, bal);
        double w1 = 0;
        for (int u = 0; u < levels.back().n; ++u) {
            if (cand[static_cast<std::size_t>(u)] == 1) w1 += levels.back().vwgt[static_cast<std::size_t>(u)];
        }
        bool ok = w1 >= bal.lo1 && w1 <= bal.hi1;
        double cut = detail::cut_weight(levels.back(), cand);
        if (part.empty() || (ok && !best_ok) || (ok == best_ok && cut < best_cut)) {
            part = std::move(cand);
            best_cut = cut;
            best_ok = ok;
        }
    }
    for (int lev = static_cast<int>(maps.size()) - 1; lev >= 0; --lev) {
        const auto& f2c = maps[static_cast<std::size_t>(lev)];
        std::vector<int> fine(f2c.size());
        for (std::size_t u = 0; u < f2c.size(); ++u) fine[u] = part[static_cast<std::size_t>(f2c[u])];
        part = std::move(fine);
        detail::refine(levels[static_cast<std::size_t>(lev)], part, bal);
    }

    const auto& g0 = levels.front();
    double w1 = 0;
    for (int u = 0; u < g0.n; ++u) {
        if (part[static_cast<std::size_t>(u)] == 1) w1 += g0.vwgt[static_cast<std::size_t>(u)];
    }
    if (w1 < bal.lo1 || w1 > bal.hi1) {
        throw std::runtime_error("bisect could not satisfy the +-3% balance tolerance");
    }

    PartitionAssignment out;
    out.balance_ratio = balance_ratio;
    out.cut_weight = detail::cut_weight(g0, part);
    out.achieved_imbalance = std::max(w1, total - w1) / total;
    for (int u = 0; u < g0.n; ++u) out.side[g.id_of(u)] = part[static_cast<std::size_t>(u)];
    return out;
}

// N bisect runs with seeds base_seed..base_seed+N-1, aligned to run 0 by
// overlap maximization; per-node mean side-1 membership.
inline PolarityScores ensemble_polarity(const EndorsementGraph& g, int ensemble_size,
                                        double balance_ratio, std::uint64_t base_seed) {
    if (ensemble_size < 1) throw std::invalid_argument("ensemble size must be >= 1");
    PolarityScores scores;
    scores.ensemble_size = ensemble_size;
    scores.base_seed = base_seed;

    std::map<std::string, int> counts;
    std::map<std::string, int> reference;
    for (int run = 0; run < ensemble_size; ++run) {
        PartitionAssignment a = bisect(g, balance_ratio, base_seed + static_cast<std::uint64_t>(run));
        if (run == 0) reference = a.side;
        std::size_t agree = 0;
        for (const auto& [id, s] : a.side) {
            if (reference.at(id) == s) ++agree;
        }
        const bool flip = 2 * agree < a.side.size();
        for (const auto& [id, s] : a.side) {
            counts[id] += flip ? (1 - s) : s;
        }
    }
    for (const auto& [id, c] : counts) {
        scores.p[id] = static_cast<double>(c) / static_cast<double>(ensemble_size);
    }
    return scores;
}

// Ratio search: maximize the number of nodes with p >= 0.95 or p <= 0.05;
// ties prefer the ratio closest to 1.0, then the smaller ratio.
inline std::pair<double, PolarityScores> optimize_balance(const EndorsementGraph& g,
                                                          const std::vector<double>& candidate_ratios,
                                                          int ensemble_size, std::uint64_t base_seed) {
    if (candidate_ratios.empty()) throw std::invalid_argument("no candidate ratios");
    double best_ratio = 0;
    std::size_t best_count = 0;
    PolarityScores best_scores;
    bool first = true;
    for (double ratio : candidate_ratios) {
        PolarityScores s = ensemble_polarity(g, ensemble_size, ratio, base_seed);
        std::size_t count = 0;
        for (const auto& [id, p] : s.p) {
            if (p >= 0.95 || p <= 0.05) ++count;
        }
        bool better = first || count > best_count;
        if (!better && count == best_count) {
            double da = std::abs(ratio - 1.0), db = std::abs(best_ratio - 1.0);
            better = da < db || (da == db && ratio < best_ratio);
        }
        if (better) {
            best_ratio = ratio;
            best_count = count;
            best_scores = std::move(s);
            first = false;
        }
    }
    return {best_ratio, std::move(best_scores)};
}

// Newman modularity on the symmetrized graph; groups may be arbitrary
// integers. All nodes must be assigned.
inline double modularity(const EndorsementGraph& g, const std::map<std::string, int>& assignment) {
    if (g.node_count() == 0) throw std::invalid_argument("modularity of empty graph");
    auto sym = g.symmetrized();
    const int n = static_cast<int>(g.node_count());
    std::vector<int> group(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u) {
        auto it = assignment.find(g.id_of(u));
        if (it == assignment.end()) throw std::invalid_argument("node not assigned: " + g.id_of(u));
        group[static_cast<std::size_t>(u)] = it->second;
    }
    double two_m = 0;
    std::map<int, double> intra, deg;
    for (int u = 0; u < n; ++u) {
        double du = 0;
        for (const auto& [v, w] : sym[static_cast<std::size_t>(u)]) {
            du += w;
            if (group[static_cast<std::size_t>(u)] == group[static_cast<std::size_t>(v)]) {
                intra[group[static_cast<std::size_t>(u)]] += w;
            }
        }
        deg[group[static_cast<std::size_t>(u)]] += du;
        two_m += du;
    }
    if (two_m == 0) return 0.0;
    double q = 0;
    for (const auto& [c, d] : deg) {
        double e = 0;
        if (auto it = intra.find(c); it != intra.end()) e = it->second;
        q += e / two_m - (d / two_m) * (d / two_m);
    }
    return q;
}

// Greedy modularity optimization with node-sweep + aggregation phases.
// Deterministic given the seed controlling node visit order.
inline std::pair<std::map<std::string, int>, double> louvain(const EndorsementGraph& g,
                                                             std::uint64_t seed = 1) {
    if (g.node_count() == 0) throw std::invalid_argument("louvain on empty graph");
    const int n0 = static_cast<int>(g.node_count());

    // internal representation allows self-loops (aggregated communities)
    struct LGraph {
        int n;
        std::vector<std::vector<std::pair<int, double>>> adj;
        std::vector<double> self;
    };
    LGraph cur;
    cur.n = n0;
    cur.adj = g.symmetrized();
    cur.self.assign(static_cast<std::size_t>(n0), 0.0);

    std::vector<int> node_to_final(static_cast<std::size_t>(n0));
    std::iota(node_to_final.begin(), node_to_final.end(), 0);
    std::mt19937 rng(static_cast<std::uint32_t>(seed));

    while (true) {
        double two_m = 0;
        std::vector<double> deg(static_cast<std::size_t>(cur.n), 0.0);
        for (int u = 0; u < cur.n; ++u) {
            double d = cur.self[static_cast<std::size_t>(u)] * 2;
            for (const auto& [v, w] : cur.adj[static_cast<std::size_t>(u)]) d += w;
            deg[static_cast<std::size_t>(u)] = d;
            two_m += d;
        }
        if (two_m == 0) break;

        std::vector<int> comm(static_cast<std::size_t>(cur.n));
        std::iota(comm.begin(), comm.end(), 0);
        std::vector<double> tot(deg);

        std::vector<int> order(static_cast<std::size_t>(cur.n));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);

        bool moved_any = false;
        bool improved = true;
        while (improved) {
            improved = false;
            for (int u : order) {
                int cu = comm[static_cast<std::size_t>(u)];
                std::map<int, double> links;
                for (const auto& [v, w] : cur.adj[static_cast<std::size_t>(u)]) {
                    links[comm[static_cast<std::size_t>(v)]] += w;
                }
                tot[static_cast<std::size_t>(cu)] -= deg[static_cast<std::size_t>(u)];
                double best_gain = 0;
                int best_c = cu;
                double base_link = links.count(cu) ? links[cu] : 0.0;
                for (const auto& [c, l] : links) {
                    double gain = (l - base_link) -
                                  deg[static_cast<std::size_t>(u)] *
                                      (tot[static_cast<std::size_t>(c)] - tot[static_cast<std::size_t>(cu)]) / two_m;
                    if (gain > best_gain + 1e-12 || (gain > best_gain - 1e-12 && c < best_c && gain > 1e-12)) {
                        best_gain = gain;
                        best_c = c;
                    }
                }
                tot[static_cast<std::size_t>(cu)] += deg[static_cast<std::size_t>(u)];
                if (best_c != cu) {
                    tot[static_cast<std::size_t>(cu)] -= deg[static_cast<std::size_t>(u)];
                    tot[static_cast<std::size_t>(best_c)] += deg[static_cast<std::size_t>(u)];
                    comm[static_cast<std::size_t>(u)] = best_c;
                    improved = true;
                    moved_any = true;
                }
            }
        }
        if (!moved_any) break;

        // renumber communities densely, in order of first appearance by index
        std::map<int, int> renum;
        for (int u = 0; u < cur.n; ++u) {
            if (!renum.count(comm[static_cast<std::size_t>(u)])) {
                int next = static_cast<int>(renum.size());
                renum[comm[static_cast<std::size_t>(u)]] = next;
            }
        }
        int cn = static_cast<int>(renum.size());
        for (auto& c : comm) c = renum[c];
        for (auto& f : node_to_final) f = comm[static_cast<std::size_t>(f)];
        if (cn == cur.n) break;

        // aggregate
        LGraph next;
        next.n = cn;
        next.self.assign(static_cast<std::size_t>(cn), 0.0);
        std::vector<std::map<int, double>> acc(static_cast<std::size_t>(cn));
        for (int u = 0; u < cur.n; ++u) {
            int cu = comm[static_cast<std::size_t>(u)];
            next.self[static_cast<std::size_t>(cu)] += cur.self[static_cast<std::size_t>(u)];
            for (const auto& [v, w] : cur.adj[static_cast<std::size_t>(u)]) {
                int cv = comm[static_cast<std::size_t>(v)];
                if (cu == cv) next.self[static_cast<std::size_t>(cu)] += w / 2.0;
                else acc[static_cast<std::size_t>(cu)][cv] += w;
            }
        }
        next.adj.resize(static_cast<std::size_t>(cn));
        for (int u = 0; u < cn; ++u) {
            next.adj[static_cast<std::size_t>(u)].assign(acc[static_cast<std::size_t>(u)].begin(),
                                                         acc[static_cast<std::size_t>(u)].end());
        }
        cur = std::move(next);
    }

    std::map<std::string, int> assignment;
    for (int u = 0; u < n0; ++u) assignment[g.id_of(u)] = node_to_final[static_cast<std::size_t>(u)];
    return {assignment, modularity(g, assignment)};
}

// The polarity pole holding the majority of "rights" anchors becomes the
// rights side; nodes exactly at p = 0.5 stay unknown.
inline SideLabels label_sides(const PolarityScores& scores,
                              const std::vector<std::pair<std::string, Side>>& anchors) {
    int rights_pole_votes[2] = {0, 0};
    int control_pole_votes[2] = {0, 0};
    SideLabels out;
    for (const auto& [id, side] : anchors) {
        auto it = scores.p.find(id);
        if (it == scores.p.end()) continue;
        int pole = it->second >= 0.5 ? 1 : 0;
        if (side == Side::rights) ++rights_pole_votes[pole];
        else if (side == Side::control) ++control_pole_votes[pole];
        out.anchors_used.push_back({id, side});
    }
    const int r_total = rights_pole_votes[0] + rights_pole_votes[1];
    const int c_total = control_pole_votes[0] + control_pole_votes[1];
    if (r_total + c_total == 0) throw std::invalid_argument("no usable anchors in the scored set");

    std::optional<int> rights_pole;
    if (r_total > 0) rights_pole = rights_pole_votes[1] > rights_pole_votes[0] ? 1 : 0;
    std::optional<int> control_pole;
    if (c_total > 0) control_pole = control_pole_votes[1] > control_pole_votes[0] ? 1 : 0;
    if (rights_pole && control_pole && *rights_pole == *control_pole) {
        throw std::invalid_argument("contradictory anchors: both sides map to the same polarity pole");
    }
    int rp = rights_pole ? *rights_pole : 1 - *control_pole;

    for (const auto& [id, p] : scores.p) {
        if (p == 0.5) out.label[id] = Side::unknown;
        else if ((p > 0.5 ? 1 : 0) == rp) out.label[id] = Side::rights;
        else out.label[id] = Side::control;
    }
    return out;
}

}  // namespace stancekit
