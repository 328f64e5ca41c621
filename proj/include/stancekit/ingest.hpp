#pragma once

// Post/profile ingestion: JSONL parsing, per-user aggregation, state
// resolution against an offline gazetteer, and the eight exclusion
// filters applied in their documented order.

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stancekit/common.hpp"

namespace stancekit {

inline const std::array<const char*, 51>& state_codes() {
    static const std::array<const char*, 51> codes = {
        "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA",
        "HI", "IA", "ID", "IL", "IN", "KS", "KY", "LA", "MA", "MD", "ME",
        "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ", "NM",
        "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX",
        "UT", "VA", "VT", "WA", "WI", "WV", "WY"};
    return codes;
}

inline bool is_valid_state(const std::string& code) {
    const auto& codes = state_codes();
    return std::binary_search(codes.begin(), codes.end(), code,
                              [](const auto& a, const auto& b) { return std::string_view(a) < std::string_view(b); });
}

struct Post {
    std::string post_id;
    std::string user_id;
    std::int64_t timestamp = 0;
    std::string text;
    std::optional<std::string> retweeted_user_id;
    std::vector<std::string> hashtags;  // lowercase, no '#'
    std::optional<double> lat;
    std::optional<double> lon;
    bool is_english = false;

    bool has_gps() const { return lat.has_value() && lon.has_value(); }
    bool is_retweet() const { return retweeted_user_id.has_value(); }
};

struct Profile {
    std::string user_id;
    std::int64_t followers = 0;
    std::int64_t friends = 0;
    std::int64_t created_ts = 0;
    std::string location;
};

struct UserRecord {
    std::string user_id;
    std::int64_t tweet_count = 0;
    std::int64_t english_tweet_count = 0;
    std::int64_t followers_count = 0;
    std::int64_t friends_count = 0;
    std::int64_t account_created = 0;
    bool has_profile = false;
    std::string location_string;
    std::optional<std::string> resolved_state;
    std::map<std::string, std::int64_t> per_state_tweet_counts;
    std::vector<std::size_t> post_indices;  // into the owning corpus
};

struct ParseStats {
    std::size_t parsed = 0;
    std::size_t skipped = 0;
};

// One line = one post. Malformed lines are counted and skipped; the
// stream never aborts on bad content.
inline std::vector<Post> parse_posts(std::istream& in, ParseStats* stats = nullptr) {
    std::vector<Post> posts;
    ParseStats local;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++local.skipped;
            continue;
        }
        try {
            Post p;
            p.post_id = j.at("id").get<std::string>();
            p.user_id = j.at("user_id").get<std::string>();
            p.timestamp = j.at("ts").get<std::int64_t>();
            p.text = j.value("text", std::string());
            if (j.contains("rt_user_id") && !j["rt_user_id"].is_null()) {
                p.retweeted_user_id = j["rt_user_id"].get<std::string>();
            }
            if (j.contains("hashtags") && j["hashtags"].is_array()) {
                for (const auto& h : j["hashtags"]) {
                    std::string tag = to_lower(h.get<std::string>());
                    if (!tag.empty() && tag.front() == '#') tag.erase(0, 1);
                    if (!tag.empty()) p.hashtags.push_back(tag);
                }
            }
            if (j.contains("lat") && j["lat"].is_number() && j.contains("lon") && j["lon"].is_number()) {
                p.lat = j["lat"].get<double>();
                p.lon = j["lon"].get<double>();
            }
            p.is_english = j.value("lang", std::string()) == "en";
            posts.push_back(std::move(p));
            ++local.parsed;
        } catch (const nlohmann::json::exception&) {
            ++local.skipped;
        }
    }
    if (in.bad()) throw std::runtime_error("I/O error while reading post stream");
    if (stats) *stats = local;
    return posts;
}

inline std::vector<Profile> parse_profiles(std::istream& in, ParseStats* stats = nullptr) {
    std::vector<Profile> out;
    ParseStats local;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++local.skipped;
            continue;
        }
        try {
            Profile p;
            p.user_id = j.at("user_id").get<std::string>();
            p.followers = j.value("followers", std::int64_t(0));
            p.friends = j.value("friends", std::int64_t(0));
            p.created_ts = j.value("created_ts", std::int64_t(0));
            p.location = j.value("location", std::string());
            out.push_back(std::move(p));
            ++local.parsed;
        } catch (const nlohmann::json::exception&) {
            ++local.skipped;
        }
    }
    if (in.bad()) throw std::runtime_error("I/O error while reading profile stream");
    if (stats) *stats = local;
    return out;
}

// Users with posts but no profile are retained with profile fields
// missing; duplicate profiles resolve last-write-wins.
inline std::map<std::string, UserRecord> aggregate_users(const std::vector<Post>& posts,
                                                         const std::vector<Profile>& profiles) {
    std::map<std::string, UserRecord> users;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const Post& p = posts[i];
        UserRecord& u = users[p.user_id];
        u.user_id = p.user_id;
        ++u.tweet_count;
        if (p.is_english) ++u.english_tweet_count;
        u.post_indices.push_back(i);
    }
    for (const Profile& p : profiles) {
        UserRecord& u = users[p.user_id];
        u.user_id = p.user_id;
        u.has_profile = true;
        u.followers_count = p.followers;
        u.friends_count = p.friends;
        u.account_created = p.created_ts;
        u.location_string = p.location;
    }
    return users;
}

struct Gazetteer {
    struct Box {
        std::string state;
        double min_lat, min_lon, max_lat, max_lon;
    };
    std::vector<Box> boxes;  // sorted by state code; first match wins
    std::map<std::string, std::string> names;  // normalized location -> state

    std::optional<std::string> match_gps(double lat, double lon) const {
        for (const Box& b : boxes) {
            if (lat >= b.min_lat && lat <= b.max_lat && lon >= b.min_lon && lon <= b.max_lon) {
                return b.state;
            }
        }
        return std::nullopt;
    }

    std::optional<std::string> match_name(const std::string& location) const {
        auto it = names.find(normalize_key(location));
        if (it == names.end()) return std::nullopt;
        return it->second;
    }

    static Gazetteer from_csv(std::istream& in) {
        Gazetteer g;
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto f = split_csv_line(line);
            if (first && !f.empty() && f[0] == "kind") {
                first = false;
                continue;
            }
            first = false;
            if (f.size() < 3) throw std::runtime_error("gazetteer: bad row: " + line);
            const std::string& kind = f[0];
            std::string state = f[1];
            if (!is_valid_state(state)) throw std::runtime_error("gazetteer: bad state code: " + state);
            if (kind == "box") {
                if (f.size() < 6) throw std::runtime_error("gazetteer: box row needs 6 fields");
                auto minlat = parse_double(f[2]), minlon = parse_double(f[3]);
                auto maxlat = parse_double(f[4]), maxlon = parse_double(f[5]);
                if (!minlat || !minlon || !maxlat || !maxlon) {
                    throw std::runtime_error("gazetteer: non-numeric box bounds: " + line);
                }
                g.boxes.push_back({state, *minlat, *minlon, *maxlat, *maxlon});
            } else if (kind == "name") {
                g.names[normalize_key(f[2])] = state;
            } else {
                throw std::runtime_error("gazetteer: unknown kind: " + kind);
            }
        }
        std::stable_sort(g.boxes.begin(), g.boxes.end(),
                         [](const Box& a, const Box& b) { return a.state < b.state; });
        return g;
    }
};

// GPS evidence takes precedence over profile text. GPS-resolved tweets
// attribute to states individually; a profile-resolved user attributes
// all tweets to the resolved state.
inline std::optional<std::string> resolve_state(UserRecord& user, const std::vector<Post>& posts,
                                                const Gazetteer& gaz) {
    user.per_state_tweet_counts.clear();
    std::map<std::string, std::int64_t> gps_hits;
    for (std::size_t idx : user.post_indices) {
        const Post& p = posts[idx];
        if (!p.has_gps()) continue;
        if (auto st = gaz.match_gps(*p.lat, *p.lon)) ++gps_hits[*st];
    }
    if (!gps_hits.empty()) {
        // modal GPS state; std::map order breaks ties by smaller code
        auto best = gps_hits.begin();
        for (auto it = gps_hits.begin(); it != gps_hits.end(); ++it) {
            if (it->second > best->second) best = it;
        }
        user.resolved_state = best->first;
        user.per_state_tweet_counts = std::move(gps_hits);
        return user.resolved_state;
    }
    if (auto st = gaz.match_name(user.location_string)) {
        user.resolved_state = st;
        user.per_state_tweet_counts[*st] = user.tweet_count;
        return user.resolved_state;
    }
    user.resolved_state.reset();
    return std::nullopt;
}

struct FilterReport {
    // Index 0..7 = rules 1..8, first-triggering attribution.
    std::array<std::int64_t, 8> excluded_by_rule{};
    std::int64_t kept_count = 0;
    std::int64_t input_count = 0;
    std::set<std::string> rule2_excluded_ids;  // frozen cutoff for re-runs

    nlohmann::json to_json() const {
        nlohmann::json j;
        for (int i = 0; i < 8; ++i) j["rule" + std::to_string(i + 1)] = excluded_by_rule[i];
        j["kept"] = kept_count;
        j["input"] = input_count;
        return j;
    }
};

struct FilterOptions {
    std::int64_t window_end = 0;
    // When set, rule 2 uses this frozen exclusion set instead of
    // re-ranking (makes filtering idempotent on its own output).
    std::optional<std::set<std::string>> frozen_rule2;
};

inline std::pair<std::set<std::string>, FilterReport> apply_filters(
    const std::map<std::string, UserRecord>& users, const FilterOptions& opts) {
    FilterReport report;
    report.input_count = static_cast<std::int64_t>(users.size());

    std::set<std::string> rule2;
    if (opts.frozen_rule2) {
        rule2 = *opts.frozen_rule2;
    } else if (!users.empty()) {
        // top 0.1% by tweet_count, ties by ascending user_id
        std::size_t cutoff = static_cast<std::size_t>(
            std::ceil(0.001 * static_cast<double>(users.size())));
        std::vector<const UserRecord*> ranked;
        ranked.reserve(users.size());
        for (const auto& [id, u] : users) ranked.push_back(&u);
        std::sort(ranked.begin(), ranked.end(), [](const UserRecord* a, const UserRecord* b) {
            if (a->tweet_count != b->tweet_count) return a->tweet_count > b->tweet_count;
            return a->user_id < b->user_id;
        });
        for (std::size_t i = 0; i < cutoff && i < ranked.size(); ++i) {
            rule2.insert(ranked[i]->user_id);
        }
    }
    report.rule2_excluded_ids = rule2;

    constexpr std::int64_t kYearSeconds = 365LL * 86400LL;
    std::set<std::string> kept;
    for (const auto& [id, u] : users) {
        int failed = 0;
        if (u.tweet_count < 2) failed = 1;
        else if (rule2.count(id)) failed = 2;
        else if (u.followers_count < 5 || u.friends_count < 5) failed = 3;
        else if (u.followers_count > 0 &&
                 static_cast<double>(u.friends_count) / static_cast<double>(u.followers_count) > 10.0)
            failed = 4;
        else if (opts.window_end - u.account_created < kYearSeconds) failed = 5;
        else if (u.english_tweet_count < 1) failed = 6;
        else if (!u.resolved_state) failed = 7;
        else {
            auto it = u.per_state_tweet_counts.find(*u.resolved_state);
            std::int64_t in_state = it == u.per_state_tweet_counts.end() ? 0 : it->second;
            if (in_state < 2) failed = 8;
        }
        if (failed == 0) kept.insert(id);
        else ++report.excluded_by_rule[failed - 1];
    }
    report.kept_count = static_cast<std::int64_t>(kept.size());
    return {std::move(kept), std::move(report)};
}

}  // namespace stancekit
