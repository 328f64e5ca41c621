#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "stancekit/partition.hpp"
#include "stancekit/synth.hpp"

using namespace stancekit;

namespace {

std::string nm(int i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "n%03d", i);
    return buf;
}

// two cliques of `size`, joined by a single bridge edge
EndorsementGraph two_cliques(int size, std::int64_t clique_w = 2, std::int64_t bridge_w = 1) {
    std::map<std::pair<std::string, std::string>, std::int64_t> edges;
    for (int block = 0; block < 2; ++block) {
        int base = block * size;
        for (int i = 0; i < size; ++i) {
            for (int j = i + 1; j < size; ++j) {
                edges[{nm(base + i), nm(base + j)}] = clique_w;
            }
        }
    }
    edges[{nm(size - 1), nm(size)}] = bridge_w;
    return EndorsementGraph::from_edges(edges);
}

// independent definition-level oracle: Q = (1/2m) sum_ij (A_ij - k_i k_j / 2m) delta(c_i, c_j)
double modularity_oracle(const EndorsementGraph& g, const std::map<std::string, int>& assignment) {
    const int n = static_cast<int>(g.node_count());
    std::vector<std::vector<double>> A(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int u = 0; u < n; ++u) {
        for (const auto& [v, w] : g.out_edges(u)) {
            A[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] += static_cast<double>(w);
            A[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] += static_cast<double>(w);
        }
    }
    std::vector<double> k(static_cast<std::size_t>(n), 0.0);
    double two_m = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) k[static_cast<std::size_t>(i)] += A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        two_m += k[static_cast<std::size_t>(i)];
    }
    double q = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (assignment.at(g.id_of(i)) != assignment.at(g.id_of(j))) continue;
            q += A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                 k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)] / two_m;
        }
    }
    return q / two_m;
}

double planted_agreement(const std::map<std::string, double>& p, const GroundTruth& truth,
                         const NodeSet& nodes, double lo, double hi) {
    // best of the two label alignments
    std::size_t agree = 0, total = 0;
    for (const auto& id : nodes) {
        auto it = p.find(id);
        if (it == p.end()) continue;
        ++total;
        int side = it->second >= 0.5 ? 1 : 0;
        if (side == truth.side.at(id)) ++agree;
    }
    (void)lo;
    (void)hi;
    double frac = static_cast<double>(agree) / static_cast<double>(total);
    return std::max(frac, 1.0 - frac);
}

}  // namespace

TEST_CASE("bisect separates two cliques at the bridge") {
    auto g = two_cliques(10);
    auto a = bisect(g, 1.0, 3);
    CHECK(a.cut_weight == 1.0);
    // cliques end up whole on opposite sides
    int side0 = a.side.at(nm(0));
    for (int i = 0; i < 10; ++i) CHECK(a.side.at(nm(i)) == side0);
    for (int i = 10; i < 20; ++i) CHECK(a.side.at(nm(i)) == 1 - side0);
    CHECK(a.achieved_imbalance == Catch::Approx(0.5));
}

TEST_CASE("bisect finds the unique optimum regardless of seed") {
    auto g = two_cliques(10);
    auto a = bisect(g, 1.0, 101);
    auto b = bisect(g, 1.0, 999);
    CHECK(a.cut_weight == 1.0);
    CHECK(b.cut_weight == 1.0);
}

TEST_CASE("bisect is deterministic for a fixed seed") {
    SynthConfig cfg;
    cfg.n_users = 150;
    cfg.p_in = 0.2;
    cfg.p_out = 0.02;
    auto [g, truth] = generate_network(cfg);
    auto gcc = giant_component(g);
    auto sub = induced_subgraph(g, gcc);
    auto a = bisect(sub, 1.5, 17);
    auto b = bisect(sub, 1.5, 17);
    CHECK(a.side == b.side);
    CHECK(a.cut_weight == b.cut_weight);
}

TEST_CASE("bisect rejects disconnected graphs and degenerate ratios") {
    std::map<std::pair<std::string, std::string>, std::int64_t> edges{{{"a", "b"}, 2}, {{"x", "y"}, 2}};
    auto g = EndorsementGraph::from_edges(edges);
    CHECK_THROWS_AS(bisect(g, 1.0, 1), std::invalid_argument);

    auto g2 = two_cliques(3);
    CHECK_THROWS_AS(bisect(g2, 0.01, 1), std::invalid_argument);
    CHECK_THROWS_AS(bisect(g2, -1.0, 1), std::invalid_argument);
}

TEST_CASE("bisect recovers planted blocks on an SBM") {
    SynthConfig cfg;
    cfg.n_users = 100;
    cfg.block_ratio = 1.5;  // 60/40
    cfg.p_in = 0.3;
    cfg.p_out = 0.01;
    cfg.seed = 5;
    auto [g, truth] = generate_network(cfg);
    auto gcc = giant_component(g);
    auto sub = induced_subgraph(g, gcc);
    auto a = bisect(sub, 1.5, 99);
    std::map<std::string, double> as_p;
    for (const auto& [id, s] : a.side) as_p[id] = s;
    CHECK(planted_agreement(as_p, truth, gcc, 0, 1) >= 0.95);
}

TEST_CASE("every bisect output satisfies the imbalance tolerance") {
    SynthConfig cfg;
    cfg.n_users = 120;
    cfg.p_in = 0.15;
    cfg.p_out = 0.03;
    auto [g, truth] = generate_network(cfg);
    auto sub = induced_subgraph(g, giant_component(g));
    const double n = static_cast<double>(sub.node_count());
    for (double ratio : {1.0, 1.5, 2.0}) {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            auto a = bisect(sub, ratio, seed);
            double target1 = n * ratio / (1.0 + ratio);
            double w1 = 0;
            for (const auto& [id, s] : a.side) w1 += s;
            CHECK(w1 >= target1 * 0.97 - 1e-9);
            CHECK(w1 <= target1 * 1.03 + 1e-9);
        }
    }
}

TEST_CASE("ensemble_polarity is unanimous on the two-clique graph") {
    auto g = two_cliques(10);
    auto scores = ensemble_polarity(g, 10, 1.0, 42);
    for (const auto& [id, p] : scores.p) {
        CHECK((p == 0.0 || p == 1.0));
    }
    // the two cliques sit at opposite poles
    CHECK(scores.p.at(nm(0)) != scores.p.at(nm(15)));
}

TEST_CASE("ensemble_polarity recovers planted sides") {
    SynthConfig cfg;
    cfg.n_users = 200;
    cfg.p_in = 0.15;
    cfg.p_out = 0.005;
    cfg.seed = 3;
    auto [g, truth] = generate_network(cfg);
    auto gcc = giant_component(g);
    auto sub = induced_subgraph(g, gcc);
    auto scores = ensemble_polarity(sub, 8, 1.5, 1000);
    CHECK(planted_agreement(scores.p, truth, gcc, 0, 1) >= 0.95);

    std::size_t extreme = 0;
    for (const auto& [id, p] : scores.p) {
        if (p >= 0.95 || p <= 0.05) ++extreme;
    }
    CHECK(static_cast<double>(extreme) / static_cast<double>(scores.p.size()) >= 0.9);
}

TEST_CASE("ensemble determinism: identical inputs give identical scores") {
    SynthConfig cfg;
    cfg.n_users = 80;
    cfg.p_in = 0.2;
    cfg.p_out = 0.02;
    auto [g, truth] = generate_network(cfg);
    auto sub = induced_subgraph(g, giant_component(g));
    auto s1 = ensemble_polarity(sub, 4, 1.0, 7);
    auto s2 = ensemble_polarity(sub, 4, 1.0, 7);
    CHECK(s1.p == s2.p);
}

TEST_CASE("optimize_balance prefers 1.0 on a symmetric graph") {
    auto g = two_cliques(10);
    auto [ratio, scores] = optimize_balance(g, {1.0, 1.5}, 6, 11);
    CHECK(ratio == 1.0);
}

TEST_CASE("optimize_balance returns a single candidate unchanged") {
    auto g = two_cliques(10);
    auto [ratio, scores] = optimize_balance(g, {1.5}, 2, 1);
    CHECK(ratio == 1.5);
}

TEST_CASE("modularity is zero for the all-one-group assignment") {
    auto g = two_cliques(5);
    std::map<std::string, int> all;
    for (const auto& id : g.node_ids()) all[id] = 0;
    CHECK(modularity(g, all) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("modularity matches the hand value on two bridged triangles") {
    std::map<std::pair<std::string, std::string>, std::int64_t> edges{
        {{"a", "b"}, 1}, {{"b", "c"}, 1}, {{"c", "a"}, 1},
        {{"d", "e"}, 1}, {{"e", "f"}, 1}, {{"f", "d"}, 1},
        {{"c", "d"}, 1}};
    auto g = EndorsementGraph::from_edges(edges);
    std::map<std::string, int> split{{"a", 0}, {"b", 0}, {"c", 0}, {"d", 1}, {"e", 1}, {"f", 1}};
    // 2 * (3/7 - 1/4) = 5/14
    CHECK(modularity(g, split) == Catch::Approx(5.0 / 14.0).epsilon(1e-12));
}

TEST_CASE("modularity matches the brute-force double-sum oracle") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> npick(5, 25);
        const int n = npick(rng);
        std::map<std::pair<std::string, std::string>, std::int64_t> edges;
        std::uniform_int_distribution<int> vpick(0, n - 1), wpick(1, 5);
        for (int e = 0; e < 3 * n; ++e) {
            int a = vpick(rng), b = vpick(rng);
            if (a == b) continue;
            edges[{nm(a), nm(b)}] = wpick(rng);
        }
        if (edges.empty()) continue;
        auto g = EndorsementGraph::from_edges(edges);
        std::uniform_int_distribution<int> gpick(0, 2);
        std::map<std::string, int> assign;
        for (const auto& id : g.node_ids()) assign[id] = gpick(rng);
        CHECK(modularity(g, assign) == Catch::Approx(modularity_oracle(g, assign)).margin(1e-12));
        CHECK(modularity(g, assign) >= -0.5 - 1e-12);
        CHECK(modularity(g, assign) <= 1.0 + 1e-12);
    }
}

TEST_CASE("louvain separates disconnected cliques") {
    std::map<std::pair<std::string, std::string>, std::int64_t> edges;
    for (int block = 0; block < 2; ++block) {
        int base = block * 4;
        for (int i = 0; i < 4; ++i) {
            for (int j = i + 1; j < 4; ++j) edges[{nm(base + i), nm(base + j)}] = 1;
        }
    }
    auto g = EndorsementGraph::from_edges(edges);
    auto [assign, q] = louvain(g);
    std::set<int> comms;
    for (const auto& [id, c] : assign) comms.insert(c);
    CHECK(comms.size() == 2);
    CHECK(assign.at(nm(0)) == assign.at(nm(3)));
    CHECK(assign.at(nm(0)) != assign.at(nm(4)));
}

TEST_CASE("louvain finds the four communities of a clique ring") {
    std::map<std::pair<std::string, std::string>, std::int64_t> edges;
    const int k = 5;
    for (int block = 0; block < 4; ++block) {
        int base = block * k;
        for (int i = 0; i < k; ++i) {
            for (int j = i + 1; j < k; ++j) edges[{nm(base + i), nm(base + j)}] = 1;
        }
    }
    for (int block = 0; block < 4; ++block) {
        edges[{nm(block * k), nm(((block + 1) % 4) * k + 1)}] = 1;
    }
    auto g = EndorsementGraph::from_edges(edges);
    auto [assign, q] = louvain(g);
    std::set<int> comms;
    for (const auto& [id, c] : assign) comms.insert(c);
    CHECK(comms.size() == 4);
    CHECK(q == Catch::Approx(modularity(g, assign)).margin(1e-12));
}

TEST_CASE("louvain modularity dominates the bisection on multi-community graphs") {
    SynthConfig cfg;
    cfg.n_users = 120;
    cfg.p_in = 0.25;
    cfg.p_out = 0.01;
    cfg.seed = 21;
    auto [g, truth] = generate_network(cfg);
    auto sub = induced_subgraph(g, giant_component(g));
    auto a = bisect(sub, 1.5, 4);
    auto [lassign, lq] = louvain(sub);
    CHECK(lq >= modularity(sub, a.side) - 1e-9);
}

TEST_CASE("label_sides propagates anchor leanings to poles") {
    PolarityScores scores;
    scores.p = {{"u1", 0.98}, {"u2", 0.9}, {"u3", 0.1}, {"u4", 0.5}};
    scores.ensemble_size = 10;

    SECTION("single rights anchor") {
        auto labels = label_sides(scores, {{"u1", Side::rights}});
        CHECK(labels.label.at("u1") == Side::rights);
        CHECK(labels.label.at("u2") == Side::rights);
        CHECK(labels.label.at("u3") == Side::control);
        CHECK(labels.label.at("u4") == Side::unknown);
    }
    SECTION("anchors on both sides") {
        auto labels = label_sides(scores, {{"u1", Side::control}, {"u3", Side::rights}});
        CHECK(labels.label.at("u2") == Side::control);
        CHECK(labels.label.at("u3") == Side::rights);
    }
    SECTION("contradictory anchors error") {
        CHECK_THROWS_AS(label_sides(scores, {{"u1", Side::rights}, {"u2", Side::control}}),
                        std::invalid_argument);
    }
    SECTION("no usable anchors error") {
        CHECK_THROWS_AS(label_sides(scores, {{"zz", Side::rights}}), std::invalid_argument);
        CHECK_THROWS_AS(label_sides(scores, {}), std::invalid_argument);
    }
}
