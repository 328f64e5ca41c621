#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "stancekit/stats.hpp"
#include "stancekit/synth.hpp"

using namespace stancekit;

namespace {

std::string edges_csv(const EndorsementGraph& g) {
    std::ostringstream out;
    g.export_csv(out);
    return out.str();
}

}  // namespace

TEST_CASE("generate_network is a pure function of the config") {
    SynthConfig cfg;
    cfg.n_users = 150;
    cfg.seed = 11;
    auto [g1, t1] = generate_network(cfg);
    auto [g2, t2] = generate_network(cfg);
    CHECK(edges_csv(g1) == edges_csv(g2));
    CHECK(t1.side == t2.side);

    SECTION("a different seed moves the edges") {
        SynthConfig other = cfg;
        other.seed = 12;
        auto [g3, t3] = generate_network(other);
        CHECK(edges_csv(g3) != edges_csv(g1));
    }
}

TEST_CASE("block sizes follow the configured ratio") {
    SynthConfig cfg;
    cfg.n_users = 200;
    cfg.block_ratio = 1.5;
    auto [g, truth] = generate_network(cfg);
    int n1 = 0;
    for (const auto& [id, s] : truth.side) n1 += s;
    CHECK(n1 == 120);
    CHECK(static_cast<int>(truth.side.size()) == 200);
}

TEST_CASE("p_out = 0 yields no cross-block edges") {
    SynthConfig cfg;
    cfg.n_users = 120;
    cfg.p_in = 0.1;
    cfg.p_out = 0.0;
    auto [g, truth] = generate_network(cfg);
    for (const std::string& id : g.node_ids()) {
        int u = g.index_of(id);
        for (const auto& [v, w] : g.out_edges(u)) {
            CHECK(truth.side.at(id) == truth.side.at(g.id_of(v)));
        }
    }
}

TEST_CASE("edge count sits within four sigma of its expectation") {
    SynthConfig cfg;
    cfg.n_users = 200;
    cfg.block_ratio = 1.5;
    cfg.p_in = 0.05;
    cfg.p_out = 0.01;
    cfg.seed = 4;
    auto [g, truth] = generate_network(cfg);
    const double within_pairs = 120.0 * 119.0 + 80.0 * 79.0;
    const double cross_pairs = 2.0 * 120.0 * 80.0;
    const double mean = cfg.p_in * within_pairs + cfg.p_out * cross_pairs;
    const double var = within_pairs * cfg.p_in * (1 - cfg.p_in) + cross_pairs * cfg.p_out * (1 - cfg.p_out);
    CHECK(std::abs(static_cast<double>(g.edge_count()) - mean) <= 4.0 * std::sqrt(var));

    SECTION("edge weights stay inside the configured band") {
        for (const std::string& id : g.node_ids()) {
            int u = g.index_of(id);
            for (const auto& [v, w] : g.out_edges(u)) {
                CHECK(w >= cfg.weight_min);
                CHECK(w <= cfg.weight_max);
            }
        }
    }
}

TEST_CASE("corpus generation is deterministic and mirrors the network") {
    SynthConfig cfg;
    cfg.n_users = 60;
    cfg.tweets_per_user = 10;
    cfg.seed = 21;
    auto [g, truth] = generate_network(cfg);
    GroundTruth t1 = truth, t2 = truth;
    SynthCorpus c1 = generate_corpus(cfg, g, t1);
    SynthCorpus c2 = generate_corpus(cfg, g, t2);
    REQUIRE(c1.posts.size() == c2.posts.size());
    for (std::size_t i = 0; i < c1.posts.size(); ++i) {
        CHECK(c1.posts[i].post_id == c2.posts[i].post_id);
        CHECK(c1.posts[i].text == c2.posts[i].text);
    }
    CHECK(t1.state == t2.state);
    CHECK(t1.attendees == t2.attendees);

    SECTION("retweet posts reproduce the graph's weighted edges") {
        std::map<std::pair<std::string, std::string>, std::int64_t> seen;
        for (const Post& p : c1.posts) {
            if (p.is_retweet()) ++seen[{p.user_id, *p.retweeted_user_id}];
        }
        auto g2 = build_endorsement_graph(c1.posts, [&] {
            std::set<std::string> all;
            for (const auto& [id, s] : truth.side) all.insert(id);
            return all;
        }(), 1);
        CHECK(edges_csv(g2) == edges_csv(g));
        (void)seen;
    }
}

TEST_CASE("class vocabularies stay on their planted sides") {
    SynthConfig cfg;
    cfg.n_users = 50;
    cfg.tweets_per_user = 8;
    cfg.seed = 2;
    auto [g, truth] = generate_network(cfg);
    SynthCorpus corpus = generate_corpus(cfg, g, truth);
    for (const Post& p : corpus.posts) {
        if (p.is_retweet()) continue;
        std::istringstream toks(p.text);
        std::string tok;
        while (toks >> tok) {
            if (tok.rfind("ctrl", 0) == 0) CHECK(truth.side.at(p.user_id) == 1);
            if (tok.rfind("rights", 0) == 0) CHECK(truth.side.at(p.user_id) == 0);
        }
    }

    SECTION("attendees are control-side users with march tokens") {
        for (const auto& id : truth.attendees) {
            CHECK(truth.side.at(id) == 1);
        }
        std::set<std::string> march_users;
        for (const Post& p : corpus.posts) {
            if (p.text.find("march0") != std::string::npos) march_users.insert(p.user_id);
        }
        CHECK(march_users == truth.attendees);
    }

    SECTION("anchors carry the planted side labels") {
        int control = 0, rights = 0;
        for (const auto& [id, side] : corpus.anchors) {
            if (side == Side::control) {
                CHECK(truth.side.at(id) == 1);
                ++control;
            } else {
                CHECK(truth.side.at(id) == 0);
                ++rights;
            }
        }
        CHECK(control == 3);
        CHECK(rights == 3);
    }
}

TEST_CASE("a clean corpus passes the ingest filters end to end") {
    SynthConfig cfg;
    cfg.n_users = 80;
    cfg.tweets_per_user = 10;
    cfg.filter_violation_frac = 0.0;
    cfg.seed = 6;
    auto [g, truth] = generate_network(cfg);
    SynthCorpus corpus = generate_corpus(cfg, g, truth);

    auto users = aggregate_users(corpus.posts, corpus.profiles);
    for (auto& [id, u] : users) resolve_state(u, corpus.posts, corpus.gazetteer);
    FilterOptions opts;
    opts.window_end = cfg.window_end;
    opts.frozen_rule2 = std::set<std::string>{};  // isolate rules 1 and 3-8
    auto [kept, report] = apply_filters(users, opts);
    CHECK(report.kept_count == 80);
    CHECK(kept.size() == 80);
}

TEST_CASE("violations knock users out of the filtered set") {
    SynthConfig cfg;
    cfg.n_users = 100;
    cfg.tweets_per_user = 10;
    cfg.filter_violation_frac = 0.3;
    cfg.seed = 8;
    auto [g, truth] = generate_network(cfg);
    SynthCorpus corpus = generate_corpus(cfg, g, truth);

    auto users = aggregate_users(corpus.posts, corpus.profiles);
    for (auto& [id, u] : users) resolve_state(u, corpus.posts, corpus.gazetteer);
    FilterOptions opts;
    opts.window_end = cfg.window_end;
    opts.frozen_rule2 = std::set<std::string>{};
    auto [kept, report] = apply_filters(users, opts);
    CHECK(report.kept_count < 100);
    std::int64_t excluded = 0;
    for (auto c : report.excluded_by_rule) excluded += c;
    CHECK(excluded + report.kept_count == 100);
    CHECK(excluded >= 15);

    SECTION("anchor users always survive the filters") {
        for (const auto& [id, side] : corpus.anchors) CHECK(kept.count(id) == 1);
    }
}

TEST_CASE("state panel recovers the planted coefficients exactly without noise") {
    SynthConfig cfg;
    cfg.panel_noise_sd = 0.0;
    cfg.panel_pre_round = true;
    cfg.panel_coeffs = {1.2, -0.8, 0.5};
    StatePanel panel = generate_state_panel(cfg);
    REQUIRE(panel.target.size() == 51);

    std::vector<std::string> states;
    for (const auto& [st, v] : panel.target) states.push_back(st);
    Rows X;
    std::vector<double> y;
    for (const auto& st : states) {
        X.push_back(panel.features.rows.at(st));
        y.push_back(panel.target.at(st));
    }
    OLSFit fit = ols(X, y);
    CHECK(fit.r_squared == Catch::Approx(1.0).margin(1e-10));
    CHECK(fit.intercept == Catch::Approx(3.0).margin(1e-8));
    for (std::size_t j = 0; j < cfg.panel_coeffs.size(); ++j) {
        CHECK(fit.coefficients[j] == Catch::Approx(cfg.panel_coeffs[j]).margin(1e-8));
    }
}

TEST_CASE("rounded panel targets are integral ratings in 1..5") {
    SynthConfig cfg;
    StatePanel panel = generate_state_panel(cfg);
    for (const auto& [st, v] : panel.target) {
        CHECK(v >= 1.0);
        CHECK(v <= 5.0);
        CHECK(v == std::floor(v));
    }

    SECTION("panel generation is deterministic") {
        StatePanel p2 = generate_state_panel(cfg);
        CHECK(p2.target == panel.target);
        CHECK(p2.features.rows == panel.features.rows);
    }
}
