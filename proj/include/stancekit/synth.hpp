#pragma once

// Synthetic corpora, networks, and panels with planted ground truth so
// the full pipeline can be verified at desk scale. Everything is a pure
// function of (config, seed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "stancekit/graph.hpp"
#include "stancekit/ingest.hpp"
#include "stancekit/matrix.hpp"
#include "stancekit/partition.hpp"

namespace stancekit {

struct SynthConfig {
    std::uint64_t seed = 7;
    int n_users = 2000;
    double block_ratio = 1.5;  // control (side 1) : rights (side 0)
    double p_in = 0.02;
    double p_out = 0.001;
    int weight_min = 2, weight_max = 5;

    int tweets_per_user = 40;
    int tokens_per_tweet = 8;
    int class_vocab_size = 200;
    double vocab_overlap = 0.2;    // probability a token comes from the shared pool
    double filter_violation_frac = 0.05;
    double attend_rate = 0.35;     // attendance rate among control users
    int attend_extra_tokens = 12;  // planted content signal for attendees

    std::int64_t window_start = 1500000000;
    std::int64_t window_end = 1500000000 + 180LL * 86400LL;

    int n_states = 51;
    std::vector<double> panel_coeffs = {1.2, -0.8, 0.5, 0.0, 0.0};
    double panel_noise_sd = 0.25;
    bool panel_pre_round = false;  // emit the continuous target instead of the 1..5 rating
};

struct GroundTruth {
    std::map<std::string, int> side;  // 1 = control (larger block), 0 = rights
    std::map<std::string, std::string> state;
    std::set<std::string> attendees;
    std::vector<double> panel_coefficients;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["side"] = nlohmann::json::object();
        for (const auto& [id, s] : side) j["side"][id] = s;
        j["state"] = nlohmann::json::object();
        for (const auto& [id, st] : state) j["state"][id] = st;
        j["attendees"] = nlohmann::json::array();
        for (const auto& id : attendees) j["attendees"].push_back(id);
        j["panel_coefficients"] = panel_coefficients;
        return j;
    }
};

namespace synth_detail {

inline std::string user_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%06d", i);
    return buf;
}

inline std::string post_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%08d", i);
    return buf;
}

}  // namespace synth_detail

// Two-block SBM: each ordered cross-node pair carries a directed edge
// with the block-pair probability; weights uniform on [weight_min,
// weight_max] so the min-weight filter downstream stays non-trivial.
inline std::pair<EndorsementGraph, GroundTruth> generate_network(const SynthConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    GroundTruth truth;
    truth.panel_coefficients = cfg.panel_coeffs;

    const int n = cfg.n_users;
    const int n_control = static_cast<int>(std::lround(n * cfg.block_ratio / (1.0 + cfg.block_ratio)));
    std::vector<int> block(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        block[static_cast<std::size_t>(i)] = i < n_control ? 1 : 0;
        truth.side[synth_detail::user_id(i)] = block[static_cast<std::size_t>(i)];
    }

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> wdist(cfg.weight_min, cfg.weight_max);
    std::map<std::pair<std::string, std::string>, std::int64_t> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double p = block[static_cast<std::size_t>(i)] == block[static_cast<std::size_t>(j)] ? cfg.p_in
                                                                                                : cfg.p_out;
            if (unif(rng) < p) {
                edges[{synth_detail::user_id(i), synth_detail::user_id(j)}] = wdist(rng);
            }
        }
    }
    return {EndorsementGraph::from_edges(edges), std::move(truth)};
}

struct SynthCorpus {
    std::vector<Post> posts;
    std::vector<Profile> profiles;
    Gazetteer gazetteer;
    std::string gazetteer_csv;
    std::vector<std::pair<std::string, Side>> anchors;
    std::set<std::string> attendees;
};

// Emits posts + profiles consistent with the planted network: class-
// conditional token draws, per-state allocation, retweet events mirroring
// the graph's edges, and a configurable fraction of filter violations.
inline SynthCorpus generate_corpus(const SynthConfig& cfg, const EndorsementGraph& network,
                                   GroundTruth& truth) {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    SynthCorpus out;

    // gazetteer: one name entry and one synthetic bounding box per state
    {
        std::string csv = "kind,state,key_or_minlat,minlon,maxlat,maxlon\n";
        const auto& codes = state_codes();
        for (int s = 0; s < cfg.n_states && s < static_cast<int>(codes.size()); ++s) {
            std::string code = codes[static_cast<std::size_t>(s)];
            csv += "name," + code + "," + to_lower(code) + " city,,,\n";
            double lat = 25.0 + 0.5 * s, lon = -120.0 + 0.5 * s;
            csv += "box," + code + "," + fmt_num(lat) + "," + fmt_num(lon) + "," + fmt_num(lat + 0.4) +
                   "," + fmt_num(lon + 0.4) + "\n";
        }
        out.gazetteer_csv = csv;
        std::istringstream in(csv);
        out.gazetteer = Gazetteer::from_csv(in);
    }

    const int n = cfg.n_users;
    const auto& codes = state_codes();
    std::uniform_int_distribution<int> state_pick(0, std::min(cfg.n_states, static_cast<int>(codes.size())) - 1);
    std::uniform_int_distribution<int> tok_pick(0, cfg.class_vocab_size - 1);
    std::uniform_int_distribution<std::int64_t> ts_pick(cfg.window_start, cfg.window_end - 1);

    enum Violation { none, single_tweet, low_followers, high_ratio, young_account, no_english, bad_location };
    int violation_cycle = 0;
    int post_counter = 0;
    std::set<std::string> violated;

    // retweet events from the planted network
    std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>> retweets_by_user;
    for (const std::string& id : network.node_ids()) {
        int u = network.index_of(id);
        for (const auto& [v, w] : network.out_edges(u)) {
            retweets_by_user[id].push_back({network.id_of(v), w});
        }
    }

    for (int i = 0; i < n; ++i) {
        const std::string uid = synth_detail::user_id(i);
        const int side = truth.side.at(uid);
        const std::string state = codes[static_cast<std::size_t>(state_pick(rng))];
        truth.state[uid] = state;

        Violation viol = none;
        if (unif(rng) < cfg.filter_violation_frac) {
            static const Violation cycle[] = {single_tweet, low_followers, high_ratio,
                                              young_account, no_english, bad_location};
            viol = cycle[violation_cycle++ % 6];
            violated.insert(uid);
        }

        const bool attends = side == 1 && viol == none && unif(rng) < cfg.attend_rate;
        if (attends) {
            truth.attendees.insert(uid);
            out.attendees.insert(uid);
        }

        Profile prof;
        prof.user_id = uid;
        prof.followers = 50 + static_cast<std::int64_t>(unif(rng) * 500);
        prof.friends = 20 + static_cast<std::int64_t>(unif(rng) * 200);
        prof.created_ts = cfg.window_start - (400 + static_cast<std::int64_t>(unif(rng) * 2000)) * 86400LL;
        prof.location = to_lower(state) + " city";
        if (viol == low_followers) prof.followers = 2;
        if (viol == high_ratio) {
            prof.followers = 10;
            prof.friends = 120;
        }
        if (viol == young_account) prof.created_ts = cfg.window_end - 30LL * 86400LL;
        if (viol == bad_location) prof.location = "the moon";
        out.profiles.push_back(prof);

        int n_tweets = viol == single_tweet ? 1 : cfg.tweets_per_user;
        for (int t = 0; t < n_tweets; ++t) {
            Post p;
            p.post_id = synth_detail::post_id(post_counter++);
            p.user_id = uid;
            p.timestamp = ts_pick(rng);
            p.is_english = viol != no_english;
            std::string text;
            for (int w = 0; w < cfg.tokens_per_tweet; ++w) {
                std::string tok;
                double r = unif(rng);
                if (r < cfg.vocab_overlap) {
                    tok = (unif(rng) < 0.15 ? "gun" : "common" + std::to_string(tok_pick(rng)));
                } else {
                    tok = (side == 1 ? "ctrl" : "rights") + std::to_string(tok_pick(rng));
                }
                if (!text.empty()) text += ' ';
                text += tok;
            }
            if (attends && t < cfg.attend_extra_tokens) {
                text += " march" + std::to_string(t);
            }
            p.text = text;
            if (unif(rng) < 0.2) {
                p.hashtags.push_back(side == 1 ? "neveragain" : "secondamendment");
            }
            out.posts.push_back(std::move(p));
        }
        for (const auto& [target, w] : retweets_by_user[uid]) {
            for (std::int64_t r = 0; r < w; ++r) {
                Post p;
                p.post_id = synth_detail::post_id(post_counter++);
                p.user_id = uid;
                p.timestamp = ts_pick(rng);
                p.is_english = viol != no_english;
                p.retweeted_user_id = target;
                p.text = "rt";
                out.posts.push_back(std::move(p));
            }
        }
    }

    // anchors: the three lowest-indexed filter-clean users of each block
    int got0 = 0, got1 = 0;
    for (int i = 0; i < n && (got0 < 3 || got1 < 3); ++i) {
        const std::string uid = synth_detail::user_id(i);
        if (violated.count(uid)) continue;
        int side = truth.side.at(uid);
        if (side == 1 && got1 < 3) {
            out.anchors.push_back({uid, Side::control});
            ++got1;
        } else if (side == 0 && got0 < 3) {
            out.anchors.push_back({uid, Side::rights});
            ++got0;
        }
    }
    return out;
}

struct StatePanel {
    ExternalTable features;           // state -> planted feature columns
    std::map<std::string, double> target;  // state -> law rating (or raw target)
};

// 51-row panel: target = 3 + coeffs . x + noise, clipped/rounded to 1..5
// unless pre-round mode is on.
inline StatePanel generate_state_panel(const SynthConfig& cfg) {
    std::mt19937_64 rng(cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    StatePanel panel;
    const auto& codes = state_codes();
    const std::size_t m = cfg.panel_coeffs.size();
    for (std::size_t j = 0; j < m; ++j) panel.features.columns.push_back("ext_" + std::to_string(j + 1));
    const int n_states = std::min(cfg.n_states, static_cast<int>(codes.size()));
    for (int s = 0; s < n_states; ++s) {
        std::string code = codes[static_cast<std::size_t>(s)];
        std::vector<double> x(m);
        for (std::size_t j = 0; j < m; ++j) x[j] = gauss(rng);
        double raw = 3.0;
        for (std::size_t j = 0; j < m; ++j) raw += cfg.panel_coeffs[j] * x[j];
        if (cfg.panel_noise_sd > 0) raw += cfg.panel_noise_sd * gauss(rng);
        panel.features.rows[code] = std::move(x);
        panel.target[code] = cfg.panel_pre_round
                                 ? raw
                                 : std::clamp(static_cast<double>(std::lround(raw)), 1.0, 5.0);
    }
    return panel;
}

}  // namespace stancekit
