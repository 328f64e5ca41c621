// stancekit command line: orchestrates synth -> ingest -> stance ->
// state_model -> predict -> top_terms. Every subcommand is a pure
// function of (config file, input files); re-runs are byte-identical.
//
// Usage: stancekit <command> <config> [--seed N]
// Exit codes: 0 success, 2 configuration/input error, 3 degenerate data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stancekit/features.hpp"
#include "stancekit/graph.hpp"
#include "stancekit/ingest.hpp"
#include "stancekit/matrix.hpp"
#include "stancekit/models.hpp"
#include "stancekit/partition.hpp"
#include "stancekit/stats.hpp"
#include "stancekit/synth.hpp"
#include "stancekit/text.hpp"

namespace fs = std::filesystem;
using namespace stancekit;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key-value config; keys are "<section>.<name>", values are plain
// strings. Paths resolve relative to the config file's directory.
struct Config {
    std::map<std::string, std::string> kv;
    fs::path base;

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }

    std::string require(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("missing config key: " + key);
        return it->second;
    }

    double num(const std::string& key, double fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        auto v = parse_double(it->second);
        if (!v) throw ConfigError("non-numeric config value for " + key + ": " + it->second);
        return *v;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        return static_cast<std::int64_t>(num(key, static_cast<double>(fallback)));
    }

    bool flag(const std::string& key, bool fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        std::string v = to_lower(trim(it->second));
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("non-boolean config value for " + key + ": " + it->second);
    }

    fs::path path(const std::string& key) const {
        fs::path p(require(key));
        return p.is_absolute() ? p : base / p;
    }

    std::optional<fs::path> optional_path(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        fs::path p(kv.at(key));
        return p.is_absolute() ? p : base / p;
    }
};

Config load_config(const std::string& file) {
    Config cfg;
    cfg.base = fs::absolute(fs::path(file)).parent_path();
    std::istringstream in(read_file(file));
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("config line without '=': " + t);
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line with empty key: " + t);
        cfg.kv[key] = val;
    }
    return cfg;
}

std::uint64_t resolve_seed(const Config& cfg, const std::string& section,
                           std::optional<std::uint64_t> override_seed) {
    if (override_seed) return *override_seed;
    return static_cast<std::uint64_t>(cfg.integer(section + ".seed", cfg.integer("seed", 7)));
}

fs::path make_outdir(const Config& cfg, const std::string& command) {
    fs::path out = cfg.base / fs::path(cfg.get("outdir", "out")) / command;
    fs::path configured(cfg.get("outdir", "out"));
    if (configured.is_absolute()) out = configured / command;
    fs::create_directories(out);
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    for (const std::string& part : split(text, ',')) {
        std::string t = trim(part);
        if (t.empty()) continue;
        auto v = parse_double(t);
        if (!v) throw ConfigError("non-numeric list entry for " + key + ": " + t);
        out.push_back(*v);
    }
    return out;
}

// ---- shared serialization -------------------------------------------------

nlohmann::json post_to_json(const Post& p) {
    nlohmann::json j;
    j["id"] = p.post_id;
    j["user_id"] = p.user_id;
    j["ts"] = p.timestamp;
    j["text"] = p.text;
    j["lang"] = p.is_english ? "en" : "und";
    if (p.retweeted_user_id) j["rt_user_id"] = *p.retweeted_user_id;
    if (!p.hashtags.empty()) j["hashtags"] = p.hashtags;
    if (p.has_gps()) {
        j["lat"] = *p.lat;
        j["lon"] = *p.lon;
    }
    return j;
}

std::string posts_to_jsonl(const std::vector<Post>& posts) {
    std::string out;
    for (const Post& p : posts) out += post_to_json(p).dump() + "\n";
    return out;
}

std::vector<Post> load_posts_file(const fs::path& path) {
    std::istringstream in(read_file(path.string()));
    return parse_posts(in);
}

// users.csv written by cmd_ingest and consumed downstream.
struct UserStoreRow {
    bool kept = false;
    std::int64_t tweet_count = 0, english_tweet_count = 0;
    std::int64_t followers = 0, friends = 0, created_ts = 0;
    bool has_profile = false;
    std::string state;
};

std::map<std::string, UserStoreRow> load_user_store(const fs::path& path) {
    std::map<std::string, UserStoreRow> out;
    std::istringstream in(read_file(path.string()));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (first) {
            first = false;
            if (!f.empty() && f[0] == "user_id") continue;
        }
        if (f.size() != 9) throw ConfigError("user store: bad row: " + line);
        UserStoreRow r;
        r.kept = f[1] == "1";
        r.tweet_count = std::stoll(f[2]);
        r.english_tweet_count = std::stoll(f[3]);
        r.followers = std::stoll(f[4]);
        r.friends = std::stoll(f[5]);
        r.created_ts = std::stoll(f[6]);
        r.has_profile = f[7] == "1";
        r.state = f[8];
        out[f[0]] = r;
    }
    return out;
}

struct PolarityRow {
    double polarity = 0.5;
    Side side = Side::unknown;
};

std::map<std::string, PolarityRow> load_polarity(const fs::path& path) {
    std::map<std::string, PolarityRow> out;
    std::istringstream in(read_file(path.string()));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (first) {
            first = false;
            if (!f.empty() && f[0] == "user_id") continue;
        }
        if (f.size() != 3) throw ConfigError("polarity file: bad row: " + line);
        PolarityRow r;
        if (auto v = parse_double(f[1])) r.polarity = *v;
        if (f[2] == "control") r.side = Side::control;
        else if (f[2] == "rights") r.side = Side::rights;
        out[f[0]] = r;
    }
    return out;
}

std::vector<std::pair<std::string, Side>> load_anchors(const fs::path& path) {
    std::vector<std::pair<std::string, Side>> out;
    std::istringstream in(read_file(path.string()));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (first) {
            first = false;
            if (!f.empty() && f[0] == "user_id") continue;
        }
        if (f.size() != 2) throw ConfigError("anchor file: bad row: " + line);
        if (f[1] == "control") out.push_back({f[0], Side::control});
        else if (f[1] == "rights") out.push_back({f[0], Side::rights});
        else throw ConfigError("anchor file: unknown side: " + f[1]);
    }
    return out;
}

std::set<std::string> load_stopwords_opt(const Config& cfg, const std::string& key) {
    auto p = cfg.optional_path(key);
    if (!p) return {};
    std::istringstream in(read_file(p->string()));
    return load_stopwords(in);
}

// One TokenDoc per user: the user's original (non-retweet) tweets.
std::map<std::string, TokenDoc> build_token_docs(const std::vector<Post>& posts,
                                                 const std::set<std::string>& users,
                                                 const std::set<std::string>& stopwords) {
    std::map<std::string, TokenDoc> docs;
    for (const std::string& id : users) docs[id].user_id = id;
    for (const Post& p : posts) {
        if (p.is_retweet() || !users.count(p.user_id)) continue;
        TokenDoc& d = docs[p.user_id];
        for (const std::string& tok : tokenize(p.text, stopwords)) d.add(tok);
    }
    return docs;
}

// ---- cmd_synth --------------------------------------------------------------

int cmd_synth(const Config& cfg, std::optional<std::uint64_t> seed_override) {
    SynthConfig sc;
    sc.seed = resolve_seed(cfg, "synth", seed_override);
    sc.n_users = static_cast<int>(cfg.integer("synth.n_users", sc.n_users));
    sc.block_ratio = cfg.num("synth.block_ratio", sc.block_ratio);
    sc.p_in = cfg.num("synth.p_in", sc.p_in);
    sc.p_out = cfg.num("synth.p_out", sc.p_out);
    sc.weight_min = static_cast<int>(cfg.integer("synth.weight_min", sc.weight_min));
    sc.weight_max = static_cast<int>(cfg.integer("synth.weight_max", sc.weight_max));
    sc.tweets_per_user = static_cast<int>(cfg.integer("synth.tweets_per_user", sc.tweets_per_user));
    sc.tokens_per_tweet = static_cast<int>(cfg.integer("synth.tokens_per_tweet", sc.tokens_per_tweet));
    sc.class_vocab_size = static_cast<int>(cfg.integer("synth.class_vocab_size", sc.class_vocab_size));
    sc.vocab_overlap = cfg.num("synth.vocab_overlap", sc.vocab_overlap);
    sc.filter_violation_frac = cfg.num("synth.filter_violation_frac", sc.filter_violation_frac);
    sc.attend_rate = cfg.num("synth.attend_rate", sc.attend_rate);
    sc.attend_extra_tokens = static_cast<int>(cfg.integer("synth.attend_extra_tokens", sc.attend_extra_tokens));
    sc.window_start = cfg.integer("synth.window_start", sc.window_start);
    sc.window_end = cfg.integer("synth.window_end", sc.window_end);
    sc.n_states = static_cast<int>(cfg.integer("synth.n_states", sc.n_states));
    if (cfg.has("synth.panel_coeffs")) {
        sc.panel_coeffs = parse_double_list(cfg.require("synth.panel_coeffs"), "synth.panel_coeffs");
    }
    sc.panel_noise_sd = cfg.num("synth.panel_noise_sd", sc.panel_noise_sd);
    sc.panel_pre_round = cfg.flag("synth.panel_pre_round", sc.panel_pre_round);
    if (sc.n_users < 2) throw ConfigError("synth.n_users must be >= 2");

    auto [network, truth] = generate_network(sc);
    SynthCorpus corpus = generate_corpus(sc, network, truth);
    StatePanel panel = generate_state_panel(sc);

    fs::path out = make_outdir(cfg, "synth");
    write_file((out / "posts.jsonl").string(), posts_to_jsonl(corpus.posts));

    std::string profiles;
    for (const Profile& p : corpus.profiles) {
        nlohmann::json j;
        j["user_id"] = p.user_id;
        j["followers"] = p.followers;
        j["friends"] = p.friends;
        j["created_ts"] = p.created_ts;
        j["location"] = p.location;
        profiles += j.dump() + "\n";
    }
    write_file((out / "profiles.jsonl").string(), profiles);
    write_file((out / "gazetteer.csv").string(), corpus.gazetteer_csv);

    std::string anchors = "user_id,side\n";
    for (const auto& [id, side] : corpus.anchors) {
        anchors += csv_escape(id) + "," + side_name(side) + "\n";
    }
    write_file((out / "anchors.csv").string(), anchors);
    write_file((out / "ground_truth.json").string(), truth.to_json().dump(2) + "\n");

    std::string attendees = "user_id\n";
    for (const auto& id : corpus.attendees) attendees += csv_escape(id) + "\n";
    write_file((out / "attendees.csv").string(), attendees);

    std::string panel_csv = "state";
    for (const auto& c : panel.features.columns) panel_csv += "," + csv_escape(c);
    panel_csv += ",law_rating\n";
    for (const auto& [state, target] : panel.target) {
        panel_csv += state;
        for (double v : panel.features.rows.at(state)) panel_csv += "," + fmt_num(v);
        panel_csv += "," + fmt_num(target) + "\n";
    }
    write_file((out / "state_panel.csv").string(), panel_csv);
    return 0;
}

// ---- cmd_ingest -------------------------------------------------------------

int cmd_ingest(const Config& cfg, std::optional<std::uint64_t>) {
    ParseStats post_stats, profile_stats;
    std::vector<Post> posts;
    {
        std::istringstream in(read_file(cfg.path("ingest.posts").string()));
        posts = parse_posts(in, &post_stats);
    }
    std::vector<Profile> profiles;
    {
        std::istringstream in(read_file(cfg.path("ingest.profiles").string()));
        profiles = parse_profiles(in, &profile_stats);
    }
    Gazetteer gaz;
    {
        std::istringstream in(read_file(cfg.path("ingest.gazetteer").string()));
        gaz = Gazetteer::from_csv(in);
    }

    auto users = aggregate_users(posts, profiles);
    for (auto& [id, u] : users) resolve_state(u, posts, gaz);
    FilterOptions opts;
    opts.window_end = cfg.integer("ingest.window_end", 1500000000LL + 180LL * 86400LL);
    auto [kept, report] = apply_filters(users, opts);

    fs::path out = make_outdir(cfg, "ingest");
    std::string users_csv =
        "user_id,kept,tweet_count,english_tweet_count,followers,friends,created_ts,has_profile,state\n";
    for (const auto& [id, u] : users) {
        users_csv += csv_escape(id);
        users_csv += kept.count(id) ? ",1," : ",0,";
        users_csv += std::to_string(u.tweet_count) + "," + std::to_string(u.english_tweet_count) + ",";
        users_csv += std::to_string(u.followers_count) + "," + std::to_string(u.friends_count) + ",";
        users_csv += std::to_string(u.account_created) + ",";
        users_csv += u.has_profile ? "1," : "0,";
        users_csv += u.resolved_state ? csv_escape(*u.resolved_state) : std::string();
        users_csv += "\n";
    }
    write_file((out / "users.csv").string(), users_csv);

    std::vector<Post> kept_posts;
    for (const Post& p : posts) {
        if (kept.count(p.user_id)) kept_posts.push_back(p);
    }
    write_file((out / "kept_posts.jsonl").string(), posts_to_jsonl(kept_posts));

    nlohmann::json j = report.to_json();
    j["posts_parsed"] = post_stats.parsed;
    j["posts_skipped"] = post_stats.skipped;
    j["profiles_parsed"] = profile_stats.parsed;
    j["profiles_skipped"] = profile_stats.skipped;
    write_file((out / "filter_report.json").string(), j.dump(2) + "\n");
    return 0;
}

// ---- cmd_stance -------------------------------------------------------------

std::set<std::string> kept_users(const std::map<std::string, UserStoreRow>& store) {
    std::set<std::string> out;
    for (const auto& [id, r] : store) {
        if (r.kept) out.insert(id);
    }
    return out;
}

int cmd_stance(const Config& cfg, std::optional<std::uint64_t> seed_override) {
    const std::uint64_t seed = resolve_seed(cfg, "stance", seed_override);
    auto posts = load_posts_file(cfg.path("stance.posts"));
    auto store = load_user_store(cfg.path("stance.users"));
    auto anchors = load_anchors(cfg.path("stance.anchors"));
    if (anchors.empty()) throw ConfigError("stance.anchors names no usable anchors");
    auto stopwords = load_stopwords_opt(cfg, "stance.stopwords");

    const std::int64_t min_weight = cfg.integer("stance.min_weight", 2);
    const int ensemble = static_cast<int>(cfg.integer("stance.ensemble_size", 20));
    const double alpha = cfg.num("stance.nb_alpha", 1.0);
    const double threshold = cfg.num("stance.nb_threshold", 0.99);
    std::vector<double> candidates =
        parse_double_list(cfg.get("stance.balance_candidates", "1.0,1.5,2.0"), "stance.balance_candidates");
    if (candidates.empty()) throw ConfigError("stance.balance_candidates is empty");

    std::set<std::string> kept = kept_users(store);
    EndorsementGraph g = build_endorsement_graph(posts, kept, min_weight);
    if (g.node_count() == 0) throw DegenerateError("no endorsement edges survive the weight threshold");
    NodeSet gcc = giant_component(g);
    EndorsementGraph sub = induced_subgraph(g, gcc);
    if (sub.node_count() < 4) throw DegenerateError("giant component too small to bisect");

    double ratio;
    PolarityScores scores;
    try {
        std::tie(ratio, scores) = optimize_balance(sub, candidates, ensemble, seed);
    } catch (const std::exception& e) {
        throw DegenerateError(std::string("balance search failed: ") + e.what());
    }

    SideLabels sides;
    try {
        sides = label_sides(scores, anchors);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("anchor labeling failed: ") + e.what());
    }

    auto docs = build_token_docs(posts, kept, stopwords);
    std::map<std::string, Side> train_labels;
    for (const auto& [id, side] : sides.label) {
        if (side != Side::unknown) train_labels[id] = side;
    }
    NBModel nb;
    try {
        nb = train_nb(docs, train_labels, alpha, seed);
    } catch (const std::invalid_argument& e) {
        throw DegenerateError(std::string("stance classifier training failed: ") + e.what());
    }

    std::map<Side, std::int64_t> side_counts;
    std::int64_t nb_labeled = 0;
    std::string csv = "user_id,polarity,side\n";
    for (const std::string& id : kept) {
        double polarity;
        Side side;
        auto it = sides.label.find(id);
        if (it != sides.label.end()) {
            polarity = scores.p.at(id);
            side = it->second;
        } else {
            NBDecision d = classify_nb(nb, docs.at(id), threshold);
            polarity = d.prob_rights;
            side = d.label;
            if (side != Side::unknown) ++nb_labeled;
        }
        ++side_counts[side];
        csv += csv_escape(id) + "," + fmt_num(polarity) + "," + side_name(side) + "\n";
    }

    // two-group modularity of the selected bisection vs Louvain
    std::map<std::string, int> bisect_groups;
    for (const auto& [id, p] : scores.p) bisect_groups[id] = p >= 0.5 ? 1 : 0;
    double q_bisect = modularity(sub, bisect_groups);
    auto [louvain_groups, q_louvain] = louvain(sub, seed);
    std::set<int> communities;
    for (const auto& [id, c] : louvain_groups) communities.insert(c);

    std::size_t extremes = 0;
    for (const auto& [id, p] : scores.p) {
        if (p >= 0.95 || p <= 0.05) ++extremes;
    }

    nlohmann::json rep;
    rep["graph_nodes"] = g.node_count();
    rep["graph_edges"] = g.edge_count();
    rep["gcc_nodes"] = gcc.size();
    rep["chosen_ratio"] = ratio;
    rep["ensemble_size"] = ensemble;
    rep["extreme_polarity_nodes"] = extremes;
    rep["bisection_modularity"] = q_bisect;
    rep["louvain_modularity"] = q_louvain;
    rep["louvain_communities"] = communities.size();
    rep["nb_labeled_users"] = nb_labeled;
    rep["side_control"] = side_counts[Side::control];
    rep["side_rights"] = side_counts[Side::rights];
    rep["side_unknown"] = side_counts[Side::unknown];

    fs::path out = make_outdir(cfg, "stance");
    write_file((out / "polarity.csv").string(), csv);
    write_file((out / "modularity.json").string(), rep.dump(2) + "\n");
    return 0;
}

// ---- cmd_state_model ----------------------------------------------------------

SideLabels sides_from_polarity(const std::map<std::string, PolarityRow>& pol) {
    SideLabels sides;
    for (const auto& [id, r] : pol) sides.label[id] = r.side;
    return sides;
}

int cmd_state_model(const Config& cfg, std::optional<std::uint64_t>) {
    auto posts = load_posts_file(cfg.path("state_model.posts"));
    auto store = load_user_store(cfg.path("state_model.users"));
    auto pol = load_polarity(cfg.path("state_model.polarity"));
    const std::int64_t min_weight = cfg.integer("state_model.min_weight", 2);
    const double min_abs = cfg.num("state_model.min_abs_corr", 0.3);
    const double max_vif = cfg.num("state_model.max_vif", 6.0);
    const std::string target_name = cfg.get("state_model.target_column", "law_rating");

    // panel: key column + external features + the target column
    ExternalTable panel;
    {
        std::istringstream in(read_file(cfg.path("state_model.panel").string()));
        panel = ExternalTable::from_csv(in);
    }
    auto tpos = std::find(panel.columns.begin(), panel.columns.end(), target_name);
    if (tpos == panel.columns.end()) {
        throw ConfigError("state_model.panel has no target column '" + target_name + "'");
    }
    const std::size_t tidx = static_cast<std::size_t>(tpos - panel.columns.begin());
    ExternalTable ext;
    std::map<std::string, double> target_of;
    for (std::size_t c = 0; c < panel.columns.size(); ++c) {
        if (c != tidx) ext.columns.push_back(panel.columns[c]);
    }
    for (const auto& [key, vals] : panel.rows) {
        std::vector<double> rest;
        for (std::size_t c = 0; c < vals.size(); ++c) {
            if (c != tidx) rest.push_back(vals[c]);
        }
        ext.rows[key] = std::move(rest);
        target_of[key] = vals[tidx];
    }

    std::set<std::string> kept = kept_users(store);
    std::map<std::string, std::string> state_of;
    for (const auto& [id, r] : store) {
        if (r.kept && !r.state.empty()) state_of[id] = r.state;
    }
    EndorsementGraph g = build_endorsement_graph(posts, kept, min_weight);
    SideLabels sides = sides_from_polarity(pol);

    std::vector<std::pair<std::string, std::string>> log;  // column -> stage: detail
    FeatureMatrix m = state_network_features(g, state_of, sides);
    m = join_external(m, ext, [](const std::string& k) { return k; }, "external");

    // rows without an observed target cannot enter the regression
    std::vector<std::size_t> with_target;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        auto it = target_of.find(m.row_keys()[r]);
        if (it != target_of.end() && !is_missing(it->second)) with_target.push_back(r);
    }
    m = m.select_rows(with_target);
    if (m.n_rows() == 0) throw DegenerateError("no states carry both features and a target value");

    std::vector<std::string> dropped_missing;
    FeatureMatrix complete = missing_policy(m, cfg.num("state_model.missing_col_threshold", 0.5),
                                            &dropped_missing);
    for (const auto& c : dropped_missing) log.push_back({c, "missing: over half the rows are missing"});

    std::vector<double> target;
    for (const auto& key : complete.row_keys()) target.push_back(target_of.at(key));

    std::vector<std::string> warnings;
    FeatureMatrix standardized = standardize_and_transform(complete, &warnings);
    for (const auto& w : warnings) log.push_back({w, "standardize: constant column zeroed"});

    std::vector<std::string> selected = select_by_correlation(standardized, target, min_abs);
    {
        std::set<std::string> keep(selected.begin(), selected.end());
        for (const auto& name : standardized.column_names()) {
            if (!keep.count(name)) log.push_back({name, "correlation: |r| below threshold"});
        }
    }
    if (selected.size() < 2) {
        throw DegenerateError("fewer than 2 columns survive the correlation screen ("
                              + std::to_string(selected.size()) + ")");
    }

    FeatureMatrix screened = standardized.select_columns(selected);
    std::vector<std::pair<std::string, double>> vif_removed;
    std::vector<std::string> survivors = vif_prune(screened, max_vif, &vif_removed);
    for (const auto& [c, v] : vif_removed) {
        log.push_back({c, "vif: " + (std::isinf(v) ? std::string("inf") : fmt_num(v))});
    }
    if (survivors.size() < 2) {
        throw DegenerateError("fewer than 2 columns survive the VIF prune ("
                              + std::to_string(survivors.size()) + ")");
    }
    FeatureMatrix final_m = screened.select_columns(survivors);

    std::map<std::string, std::vector<std::string>> groups;
    for (std::size_t c = 0; c < final_m.n_cols(); ++c) {
        groups[final_m.provenance(c)].push_back(final_m.column_names()[c]);
    }

    std::vector<OLSAblationRow> table;
    OLSFit full;
    try {
        table = ablation_ols(groups, final_m, target);
        Rows X(final_m.n_rows(), std::vector<double>(final_m.n_cols()));
        for (std::size_t c = 0; c < final_m.n_cols(); ++c) {
            for (std::size_t r = 0; r < final_m.n_rows(); ++r) X[r][c] = final_m.cell(r, c);
        }
        std::vector<std::string> names = final_m.column_names();
        full = ols(X, target, &names);
    } catch (const std::invalid_argument& e) {
        throw DegenerateError(std::string("state regression failed: ") + e.what());
    }

    fs::path out = make_outdir(cfg, "state_model");
    {
        std::string csv = "model,r_squared,f_pvalue\n";
        for (const auto& row : table) {
            csv += csv_escape(row.name) + "," + fmt_num(row.r_squared) + "," + fmt_num(row.f_pvalue) + "\n";
        }
        write_file((out / "ols_report.csv").string(), csv);
    }
    {
        std::string csv = "column,coefficient\n";
        csv += "intercept," + fmt_num(full.intercept) + "\n";
        for (std::size_t c = 0; c < final_m.n_cols(); ++c) {
            csv += csv_escape(final_m.column_names()[c]) + "," + fmt_num(full.coefficients[c]) + "\n";
        }
        write_file((out / "coefficients.csv").string(), csv);
    }
    {
        Rows corr = correlation_matrix(final_m);
        std::string csv = "column";
        for (const auto& n : final_m.column_names()) csv += "," + csv_escape(n);
        csv += "\n";
        for (std::size_t i = 0; i < final_m.n_cols(); ++i) {
            csv += csv_escape(final_m.column_names()[i]);
            for (std::size_t j = 0; j < final_m.n_cols(); ++j) csv += "," + fmt_num(corr[i][j]);
            csv += "\n";
        }
        write_file((out / "correlation_matrix.csv").string(), csv);
    }
    {
        std::string csv = "column,reason\n";
        for (const auto& [c, why] : log) csv += csv_escape(c) + "," + csv_escape(why) + "\n";
        write_file((out / "selection_log.csv").string(), csv);
    }
    {
        std::ostringstream fm;
        final_m.export_csv(fm, "state");
        write_file((out / "features.csv").string(), fm.str());
    }
    return 0;
}

// ---- cmd_predict --------------------------------------------------------------

std::set<std::string> load_id_list(const fs::path& path) {
    std::set<std::string> out;
    std::istringstream in(read_file(path.string()));
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t == "user_id") continue;
        out.insert(split_csv_line(t)[0]);
    }
    return out;
}

// State-stratified control sample: largest-remainder quotas over the
// per-state pools, seeded shuffle inside each state.
std::set<std::string> stratified_controls(const std::map<std::string, std::vector<std::string>>& pools,
                                          std::size_t total, std::uint64_t seed) {
    std::size_t avail = 0;
    for (const auto& [st, ids] : pools) avail += ids.size();
    total = std::min(total, avail);

    std::map<std::string, std::size_t> quota;
    std::vector<std::pair<double, std::string>> remainders;
    std::size_t assigned = 0;
    for (const auto& [st, ids] : pools) {
        double exact = avail == 0 ? 0.0
                                  : static_cast<double>(total) * static_cast<double>(ids.size()) /
                                        static_cast<double>(avail);
        std::size_t base = std::min(ids.size(), static_cast<std::size_t>(std::floor(exact)));
        quota[st] = base;
        assigned += base;
        remainders.push_back({exact - static_cast<double>(base), st});
    }
    // larger remainder first; state code breaks ties
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    while (assigned < total) {
        bool progress = false;
        for (const auto& [rem, st] : remainders) {
            if (assigned >= total) break;
            if (quota[st] < pools.at(st).size()) {
                ++quota[st];
                ++assigned;
                progress = true;
            }
        }
        if (!progress) break;
    }

    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    std::set<std::string> picked;
    for (const auto& [st, ids] : pools) {
        std::vector<std::string> pool(ids);
        std::shuffle(pool.begin(), pool.end(), rng);
        for (std::size_t i = 0; i < quota[st]; ++i) picked.insert(pool[i]);
    }
    return picked;
}

int cmd_predict(const Config& cfg, std::optional<std::uint64_t> seed_override) {
    const std::uint64_t seed = resolve_seed(cfg, "predict", seed_override);
    auto posts = load_posts_file(cfg.path("predict.posts"));
    auto store = load_user_store(cfg.path("predict.users"));
    auto pol = load_polarity(cfg.path("predict.polarity"));
    auto attendees_all = load_id_list(cfg.path("predict.attendees"));
    auto stopwords = load_stopwords_opt(cfg, "predict.stopwords");

    const std::int64_t min_weight = cfg.integer("predict.min_weight", 2);
    const double control_ratio = cfg.num("predict.control_ratio", 1.5);
    const int k = static_cast<int>(cfg.integer("predict.k_folds", 5));
    const std::int64_t window_start = cfg.integer("predict.window_start", 1500000000LL);
    const std::int64_t window_end = cfg.integer("predict.window_end", 1500000000LL + 180LL * 86400LL);
    if (k < 2) throw ConfigError("predict.k_folds must be >= 2");
    if (control_ratio <= 0) throw ConfigError("predict.control_ratio must be > 0");

    Lexicon hate, sentiment;
    bool have_hate = false, have_sentiment = false;
    if (auto p = cfg.optional_path("predict.hate_lexicon")) {
        std::istringstream in(read_file(p->string()));
        hate = Lexicon::from_csv(in);
        have_hate = true;
    }
    if (auto p = cfg.optional_path("predict.sentiment_lexicon")) {
        std::istringstream in(read_file(p->string()));
        sentiment = Lexicon::from_csv(in);
        have_sentiment = true;
    }
    CategoryDictionary categories;
    bool have_categories = false;
    if (auto p = cfg.optional_path("predict.category_dict")) {
        std::istringstream in(read_file(p->string()));
        categories = CategoryDictionary::from_stream(in);
        have_categories = true;
    }
    ExternalTable demo;
    bool have_demo = false;
    if (auto p = cfg.optional_path("predict.external")) {
        std::istringstream in(read_file(p->string()));
        demo = ExternalTable::from_csv(in);
        have_demo = true;
    }

    std::set<std::string> kept = kept_users(store);
    std::set<std::string> attendees;
    for (const auto& id : attendees_all) {
        if (kept.count(id)) attendees.insert(id);
    }
    if (attendees.empty()) throw DegenerateError("no kept user is a labeled attendee");

    std::map<std::string, std::vector<std::string>> pools;  // state -> non-attendees
    for (const auto& [id, r] : store) {
        if (r.kept && !attendees.count(id)) pools[r.state.empty() ? "??" : r.state].push_back(id);
    }
    const std::size_t n_controls =
        static_cast<std::size_t>(std::llround(control_ratio * static_cast<double>(attendees.size())));
    std::set<std::string> controls = stratified_controls(pools, n_controls, seed);
    if (controls.empty()) throw DegenerateError("control cohort is empty");

    std::vector<std::string> cohort(attendees.begin(), attendees.end());
    cohort.insert(cohort.end(), controls.begin(), controls.end());
    std::sort(cohort.begin(), cohort.end());

    // rebuild per-user post indices, then overlay the profile fields the
    // ingest store preserved
    auto users = aggregate_users(posts, {});
    for (auto& [id, u] : users) {
        auto it = store.find(id);
        if (it != store.end()) {
            u.has_profile = it->second.has_profile;
            u.followers_count = it->second.followers;
            u.friends_count = it->second.friends;
            u.account_created = it->second.created_ts;
        }
    }

    std::set<std::string> cohort_set(cohort.begin(), cohort.end());
    auto docs = build_token_docs(posts, cohort_set, stopwords);

    EndorsementGraph g = build_endorsement_graph(posts, kept, min_weight);
    GraphFeatureContext ctx(g);

    ContentBehaviorInputs cbi;
    if (have_hate) cbi.hate = &hate;
    if (have_sentiment) cbi.sentiment = &sentiment;
    if (have_categories) cbi.categories = &categories;
    cbi.window_start = window_start;
    cbi.window_end = window_end;
    cbi.stopwords = &stopwords;
    for (const std::string& kw : split(cfg.get("predict.gun_keywords", "gun"), ',')) {
        std::string t = to_lower(trim(kw));
        if (!t.empty()) cbi.gun_keywords.insert(t);
    }

    FeatureMatrix m(cohort);
    {
        std::vector<std::vector<double>> net(9, std::vector<double>());
        for (const auto& id : cohort) {
            UserNetworkFeatures f = user_network_features(ctx, id);
            double vals[9] = {f.in_gcc,       f.in_degree,     f.out_degree,
                              f.max_in_weight, f.max_out_weight, f.pagerank,
                              f.clustering,   f.avg_in_nbr_in_degree, f.avg_out_nbr_in_degree};
            for (int j = 0; j < 9; ++j) net[static_cast<std::size_t>(j)].push_back(vals[j]);
        }
        const char* names[9] = {"net_in_gcc",        "net_in_degree",     "net_out_degree",
                                "net_max_in_weight", "net_max_out_weight", "net_pagerank",
                                "net_clustering",    "net_avg_in_nbr_indegree",
                                "net_avg_out_nbr_indegree"};
        for (int j = 0; j < 9; ++j) {
            m.add_column(names[j], "network", std::move(net[static_cast<std::size_t>(j)]));
        }
    }
    {
        static const UserRecord kEmpty;
        std::vector<std::string> col_names, col_tags;
        std::vector<std::vector<double>> cols;
        bool first = true;
        for (const auto& id : cohort) {
            auto it = users.find(id);
            const UserRecord& u = it == users.end() ? kEmpty : it->second;
            auto row = user_content_behavior_features(u, posts, docs.at(id), cbi);
            if (first) {
                for (const auto& [name, tv] : row) {
                    col_names.push_back(name);
                    col_tags.push_back(tv.first);
                    cols.emplace_back();
                }
                first = false;
            }
            for (std::size_t j = 0; j < row.size(); ++j) cols[j].push_back(row[j].second.second);
        }
        for (std::size_t j = 0; j < col_names.size(); ++j) {
            m.add_column(col_names[j], col_tags[j], std::move(cols[j]));
        }
    }
    {
        std::vector<double> stance_p;
        for (const auto& id : cohort) {
            auto it = pol.find(id);
            stance_p.push_back(it == pol.end() ? kMissing : it->second.polarity);
        }
        m.add_column("stance_polarity", "stance", std::move(stance_p));
    }
    if (have_demo) {
        m = join_external(m, demo, [](const std::string& u) { return u; }, "demographic");
    }

    std::vector<std::string> dropped_cols;
    FeatureMatrix complete = missing_policy(m, cfg.num("predict.missing_col_threshold", 0.5), &dropped_cols);
    if (complete.n_rows() < static_cast<std::size_t>(k)) {
        throw DegenerateError("cohort smaller than k after the missing-value policy ("
                              + std::to_string(complete.n_rows()) + " rows)");
    }
    std::vector<std::string> warnings;
    FeatureMatrix standardized = standardize_and_transform(complete, &warnings);

    std::vector<int> y;
    std::int64_t positives = 0;
    for (const auto& id : standardized.row_keys()) {
        int label = attendees.count(id) ? 1 : 0;
        positives += label;
        y.push_back(label);
    }
    if (positives == 0 || positives == static_cast<std::int64_t>(y.size())) {
        throw DegenerateError("cohort collapsed to a single class");
    }

    // ablation groups: letter -> columns sharing the prefix convention
    std::map<std::string, std::vector<std::string>> groups;
    for (std::size_t c = 0; c < standardized.n_cols(); ++c) {
        const std::string& name = standardized.column_names()[c];
        const std::string& tag = standardized.provenance(c);
        std::string letter;
        if (name == "con_hate_rate") letter = "H";
        else if (name == "con_sentiment") letter = "S";
        else if (tag == "network") letter = "N";
        else if (tag == "content") letter = "C";
        else if (tag == "behavior") letter = "B";
        else if (tag == "liwc") letter = "L";
        else if (tag == "stance") letter = "P";
        else if (tag == "demographic") letter = "D";
        if (!letter.empty()) groups[letter].push_back(name);
    }

    std::vector<std::vector<std::string>> cumulative;
    for (const std::string& token : split(cfg.get("predict.cumulative", ""), ',')) {
        std::string t = trim(token);
        if (t.empty()) continue;
        std::vector<std::string> seq;
        for (char c : t) {
            std::string letter(1, c);
            if (!groups.count(letter)) {
                throw ConfigError("predict.cumulative names group '" + letter + "' with no columns");
            }
            seq.push_back(letter);
        }
        cumulative.push_back(std::move(seq));
    }

    Rows X(standardized.n_rows(), std::vector<double>(standardized.n_cols()));
    for (std::size_t c = 0; c < standardized.n_cols(); ++c) {
        for (std::size_t r = 0; r < standardized.n_rows(); ++r) X[r][c] = standardized.cell(r, c);
    }

    fs::path out = make_outdir(cfg, "predict");
    {
        std::string csv =
            "classifier,accuracy_mean,accuracy_sd,precision_mean,precision_sd,recall_mean,recall_sd,"
            "f1_mean,f1_sd\n";
        const std::pair<const char*, ClassifierKind> kinds[] = {
            {"logreg", ClassifierKind::logreg},
            {"linear_svm", ClassifierKind::linear_svm},
            {"random_forest", ClassifierKind::random_forest},
        };
        for (const auto& [name, kind] : kinds) {
            ClassifierSpec spec;
            spec.kind = kind;
            spec.seed = seed;
            CVResult cv = kfold_cv(spec, X, y, k, seed);
            csv += std::string(name) + "," + fmt_num(cv.mean.accuracy) + "," + fmt_num(cv.stddev.accuracy) +
                   "," + fmt_num(cv.mean.precision) + "," + fmt_num(cv.stddev.precision) + "," +
                   fmt_num(cv.mean.recall) + "," + fmt_num(cv.stddev.recall) + "," + fmt_num(cv.mean.f1) +
                   "," + fmt_num(cv.stddev.f1) + "\n";
        }
        write_file((out / "cv_report.csv").string(), csv);
    }
    {
        ClassifierSpec spec;
        spec.kind = ClassifierKind::logreg;
        spec.seed = seed;
        AblationReport rep = ablation(groups, spec, standardized, y, k, seed, cumulative);
        std::string csv = "model,n_columns,accuracy_mean,accuracy_sd,f1_mean,f1_sd\n";
        for (const auto& row : rep.rows) {
            csv += csv_escape(row.name) + "," + std::to_string(row.columns.size()) + "," +
                   fmt_num(row.cv.mean.accuracy) + "," + fmt_num(row.cv.stddev.accuracy) + "," +
                   fmt_num(row.cv.mean.f1) + "," + fmt_num(row.cv.stddev.f1) + "\n";
        }
        write_file((out / "ablation_report.csv").string(), csv);
    }
    {
        ClassifierSpec spec;
        spec.kind = ClassifierKind::logreg;
        spec.seed = seed;
        LinearModel lm = train_logreg(X, y, spec);
        std::vector<std::pair<double, std::string>> coefs;
        for (std::size_t c = 0; c < standardized.n_cols(); ++c) {
            coefs.push_back({lm.coefficients[c], standardized.column_names()[c]});
        }
        auto by_value_desc = [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        };
        std::sort(coefs.begin(), coefs.end(), by_value_desc);
        std::string csv = "direction,rank,column,coefficient\n";
        int rank = 0;
        for (const auto& [v, name] : coefs) {
            if (v <= 0 || rank >= 20) break;
            csv += "positive," + std::to_string(++rank) + "," + csv_escape(name) + "," + fmt_num(v) + "\n";
        }
        rank = 0;
        for (auto it = coefs.rbegin(); it != coefs.rend(); ++it) {
            if (it->first >= 0 || rank >= 20) break;
            csv += "negative," + std::to_string(++rank) + "," + csv_escape(it->second) + "," +
                   fmt_num(it->first) + "\n";
        }
        write_file((out / "top_coefficients.csv").string(), csv);
    }
    {
        nlohmann::json rep;
        rep["attendees"] = attendees.size();
        rep["controls"] = controls.size();
        rep["rows_after_missing_policy"] = standardized.n_rows();
        rep["columns"] = standardized.n_cols();
        rep["dropped_columns"] = dropped_cols;
        rep["constant_columns"] = warnings;
        nlohmann::json gj = nlohmann::json::object();
        for (const auto& [letter, cols] : groups) gj[letter] = cols.size();
        rep["group_sizes"] = gj;
        write_file((out / "cohort_report.json").string(), rep.dump(2) + "\n");
    }
    {
        std::ostringstream fm;
        standardized.export_csv(fm, "user_id");
        write_file((out / "features.csv").string(), fm.str());
    }
    return 0;
}

// ---- cmd_top_terms --------------------------------------------------------------

int cmd_top_terms(const Config& cfg, std::optional<std::uint64_t>) {
    auto posts = load_posts_file(cfg.path("top_terms.posts"));
    auto pol = load_polarity(cfg.path("top_terms.polarity"));
    auto stopwords = load_stopwords_opt(cfg, "top_terms.stopwords");
    const std::int64_t min_count = cfg.integer("top_terms.min_count", 5);
    const std::size_t top_z = static_cast<std::size_t>(cfg.integer("top_terms.top_z", 50));
    const double prior_scale = cfg.num("top_terms.prior_scale", 0.01);
    const double z_cut = cfg.num("top_terms.z_threshold", 1.96);

    std::map<std::string, std::int64_t> rights, control, background;
    for (const Post& p : posts) {
        if (p.is_retweet()) continue;
        auto it = pol.find(p.user_id);
        if (it == pol.end() || it->second.side == Side::unknown) continue;
        auto& side_counts = it->second.side == Side::rights ? rights : control;
        for (const std::string& tok : tokenize(p.text, stopwords)) {
            ++side_counts[tok];
            ++background[tok];
        }
    }
    // frequency floor: rare tokens never reach the comparison
    for (auto it = background.begin(); it != background.end();) {
        if (it->second < min_count) {
            rights.erase(it->first);
            control.erase(it->first);
            it = background.erase(it);
        } else {
            ++it;
        }
    }
    auto total_of = [](const std::map<std::string, std::int64_t>& m) {
        std::int64_t t = 0;
        for (const auto& [tok, c] : m) t += c;
        return t;
    };
    if (total_of(rights) == 0 || total_of(control) == 0) {
        throw DegenerateError("a side corpus is empty after the frequency floor");
    }

    LogOddsResult res = log_odds_dirichlet(rights, control, background, prior_scale);

    auto count_of = [](const std::map<std::string, std::int64_t>& m, const std::string& tok) {
        auto it = m.find(tok);
        return it == m.end() ? std::int64_t(0) : it->second;
    };
    std::vector<std::pair<double, std::string>> pos, neg;
    for (const auto& [tok, e] : res) {
        if (e.z >= z_cut) pos.push_back({e.z, tok});
        else if (e.z <= -z_cut) neg.push_back({e.z, tok});
    }
    std::sort(pos.begin(), pos.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::sort(neg.begin(), neg.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    if (pos.size() > top_z) pos.resize(top_z);
    if (neg.size() > top_z) neg.resize(top_z);

    std::string csv = "side,rank,term,delta,z,count_rights,count_control\n";
    auto emit = [&](const char* side, const std::vector<std::pair<double, std::string>>& list) {
        int rank = 0;
        for (const auto& [z, tok] : list) {
            const LogOddsEntry& e = res.at(tok);
            csv += std::string(side) + "," + std::to_string(++rank) + "," + csv_escape(tok) + "," +
                   fmt_num(e.delta) + "," + fmt_num(e.z) + "," + std::to_string(count_of(rights, tok)) +
                   "," + std::to_string(count_of(control, tok)) + "\n";
        }
    };
    emit("rights", pos);
    emit("control", neg);

    fs::path out = make_outdir(cfg, "top_terms");
    write_file((out / "top_terms.csv").string(), csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::optional<std::uint64_t> seed_override;
    std::vector<std::string> positional;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--seed") {
            if (i + 1 >= args.size()) {
                std::cerr << "error: --seed needs a value\n";
                return 2;
            }
            auto v = parse_double(args[++i]);
            if (!v) {
                std::cerr << "error: non-numeric --seed value\n";
                return 2;
            }
            seed_override = static_cast<std::uint64_t>(*v);
        } else {
            positional.push_back(args[i]);
        }
    }
    if (positional.size() != 2) {
        std::cerr << "usage: stancekit <synth|ingest|stance|state_model|predict|top_terms> <config> "
                     "[--seed N]\n";
        return 2;
    }
    const std::string& command = positional[0];

    try {
        Config cfg = load_config(positional[1]);
        if (command == "synth") return cmd_synth(cfg, seed_override);
        if (command == "ingest") return cmd_ingest(cfg, seed_override);
        if (command == "stance") return cmd_stance(cfg, seed_override);
        if (command == "state_model") return cmd_state_model(cfg, seed_override);
        if (command == "predict") return cmd_predict(cfg, seed_override);
        if (command == "top_terms") return cmd_top_terms(cfg, seed_override);
        std::cerr << "error: unknown command: " << command << "\n";
        return 2;
    } catch (const DegenerateError& e) {
        std::cerr << "error (degenerate data): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
