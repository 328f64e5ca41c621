#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "stancekit/ingest.hpp"

using namespace stancekit;

namespace {

std::string post_line(const std::string& id, const std::string& uid, const std::string& extra = "") {
    return R"({"id":")" + id + R"(","user_id":")" + uid +
           R"(","ts":1520000000,"text":"hello world","lang":"en")" + extra + "}";
}

UserRecord base_user(const std::string& id) {
    UserRecord u;
    u.user_id = id;
    u.tweet_count = 5;
    u.english_tweet_count = 2;
    u.followers_count = 50;
    u.friends_count = 50;
    u.account_created = 0;  // ancient
    u.has_profile = true;
    u.resolved_state = "NY";
    u.per_state_tweet_counts["NY"] = 5;
    return u;
}

}  // namespace

TEST_CASE("parse_posts maps all fields") {
    std::istringstream in(
        R"({"id":"p1","user_id":"u1","ts":1520000100,"text":"Guns #NeverAgain","rt_user_id":"u9",)"
        R"("hashtags":["#NeverAgain","GunControl"],"lat":40.7,"lon":-74.0,"lang":"en"})");
    auto posts = parse_posts(in);
    REQUIRE(posts.size() == 1);
    const Post& p = posts[0];
    CHECK(p.post_id == "p1");
    CHECK(p.user_id == "u1");
    CHECK(p.timestamp == 1520000100);
    CHECK(p.retweeted_user_id == "u9");
    CHECK(p.hashtags == std::vector<std::string>{"neveragain", "guncontrol"});
    CHECK(p.has_gps());
    CHECK(p.is_english);
}

TEST_CASE("parse_posts treats lat/lon as optional") {
    std::istringstream in(post_line("p1", "u1"));
    auto posts = parse_posts(in);
    REQUIRE(posts.size() == 1);
    CHECK_FALSE(posts[0].has_gps());
}

TEST_CASE("parse_posts skips a corrupted line without aborting") {
    std::string data;
    for (int i = 0; i < 5; ++i) data += post_line("a" + std::to_string(i), "u1") + "\n";
    data += R"({"id":"broken","user_id":)" "\n";  // truncated JSON
    for (int i = 0; i < 5; ++i) data += post_line("b" + std::to_string(i), "u2") + "\n";
    std::istringstream in(data);
    ParseStats stats;
    auto posts = parse_posts(in, &stats);
    CHECK(posts.size() == 10);
    CHECK(stats.parsed == 10);
    CHECK(stats.skipped == 1);
}

TEST_CASE("aggregate_users counts tweets per user") {
    std::string data;
    for (int i = 0; i < 3; ++i) data += post_line("p" + std::to_string(i), "u1") + "\n";
    data += post_line("p9", "u2") + "\n";
    std::istringstream in(data);
    auto posts = parse_posts(in);
    auto users = aggregate_users(posts, {});
    REQUIRE(users.size() == 2);
    CHECK(users.at("u1").tweet_count == 3);
    CHECK(users.at("u2").tweet_count == 1);
    CHECK_FALSE(users.at("u1").has_profile);
}

TEST_CASE("aggregate_users counts english tweets") {
    std::istringstream in(
        post_line("p1", "u1") + "\n" + post_line("p2", "u1") + "\n" +
        R"({"id":"p3","user_id":"u1","ts":1520000000,"text":"hola","lang":"es"})" "\n");
    auto posts = parse_posts(in);
    auto users = aggregate_users(posts, {});
    CHECK(users.at("u1").tweet_count == 3);
    CHECK(users.at("u1").english_tweet_count == 2);
}

TEST_CASE("aggregate_users per-state counts recount from fixture") {
    // posts geolocated to NY twice, CA once
    std::istringstream gaz_in(
        "kind,state,key_or_minlat,minlon,maxlat,maxlon\n"
        "box,CA,32,-125,42,-114\n"
        "box,NY,40,-80,45,-71\n");
    Gazetteer gaz = Gazetteer::from_csv(gaz_in);
    std::istringstream in(
        R"({"id":"p1","user_id":"u1","ts":1520000000,"text":"a","lat":41.0,"lon":-74.0,"lang":"en"})" "\n"
        R"({"id":"p2","user_id":"u1","ts":1520000001,"text":"b","lat":41.5,"lon":-75.0,"lang":"en"})" "\n"
        R"({"id":"p3","user_id":"u1","ts":1520000002,"text":"c","lat":36.0,"lon":-120.0,"lang":"en"})" "\n");
    auto posts = parse_posts(in);
    auto users = aggregate_users(posts, {});
    UserRecord& u = users.at("u1");
    resolve_state(u, posts, gaz);
    CHECK(u.per_state_tweet_counts == std::map<std::string, std::int64_t>{{"NY", 2}, {"CA", 1}});
    CHECK(u.resolved_state == "NY");
}

TEST_CASE("resolve_state hits a GPS box, then falls back to location text") {
    std::istringstream gaz_in(
        "kind,state,key_or_minlat,minlon,maxlat,maxlon\n"
        "box,NY,40,-80,45,-71\n"
        "name,TX,austin texas,,,\n");
    Gazetteer gaz = Gazetteer::from_csv(gaz_in);

    SECTION("GPS inside NY box") {
        std::istringstream in(
            R"({"id":"p1","user_id":"u1","ts":1520000000,"text":"a","lat":41.0,"lon":-74.0,"lang":"en"})");
        auto posts = parse_posts(in);
        auto users = aggregate_users(posts, {});
        CHECK(resolve_state(users.at("u1"), posts, gaz) == "NY");
    }
    SECTION("location string lookup") {
        std::istringstream in(post_line("p1", "u1"));
        auto posts = parse_posts(in);
        Profile prof{"u1", 10, 10, 0, "Austin,  Texas"};
        auto users = aggregate_users(posts, {prof});
        // normalization must collapse whitespace; gazetteer key has one space
        users.at("u1").location_string = "Austin  Texas";
        CHECK(resolve_state(users.at("u1"), posts, gaz) == "TX");
    }
    SECTION("unresolvable location") {
        std::istringstream in(post_line("p1", "u1"));
        auto posts = parse_posts(in);
        Profile prof{"u1", 10, 10, 0, "the moon"};
        auto users = aggregate_users(posts, {prof});
        CHECK_FALSE(resolve_state(users.at("u1"), posts, gaz).has_value());
    }
}

TEST_CASE("resolve_state is deterministic") {
    std::istringstream gaz_in(
        "kind,state,key_or_minlat,minlon,maxlat,maxlon\n"
        "name,TX,somewhere,,,\n");
    Gazetteer gaz = Gazetteer::from_csv(gaz_in);
    std::istringstream in(post_line("p1", "u1"));
    auto posts = parse_posts(in);
    auto users = aggregate_users(posts, {});
    users.at("u1").location_string = "Somewhere";
    auto a = resolve_state(users.at("u1"), posts, gaz);
    auto b = resolve_state(users.at("u1"), posts, gaz);
    CHECK(a == b);
    CHECK(a == "TX");
}

TEST_CASE("duplicate profiles resolve last-write-wins") {
    std::istringstream in(post_line("p1", "u1") + "\n" + post_line("p2", "u1"));
    auto posts = parse_posts(in);
    auto users = aggregate_users(posts, {{"u1", 10, 10, 0, "first"}, {"u1", 99, 10, 0, "second"}});
    CHECK(users.at("u1").followers_count == 99);
    CHECK(users.at("u1").location_string == "second");
}

TEST_CASE("filter fixture: each rule fires exactly once, four users survive") {
    std::map<std::string, UserRecord> users;
    auto put = [&](UserRecord u) { users[u.user_id] = std::move(u); };

    {  // rule 1: single tweet
        UserRecord u = base_user("uA");
        u.tweet_count = 1;
        put(u);
    }
    {  // rule 2: top 0.1% (ceil(0.012) = 1 user, the highest count)
        UserRecord u = base_user("uB");
        u.tweet_count = 100;
        put(u);
    }
    {  // rule 3: fewer than 5 followers
        UserRecord u = base_user("uC");
        u.followers_count = 3;
        put(u);
    }
    {  // rule 4: friends/followers ratio > 10
        UserRecord u = base_user("uD");
        u.followers_count = 10;
        u.friends_count = 120;
        put(u);
    }
    {  // rule 5: account younger than a year
        UserRecord u = base_user("uE");
        u.account_created = 1520000000 - 100 * 86400;
        put(u);
    }
    {  // rule 6: no English tweet
        UserRecord u = base_user("uF");
        u.english_tweet_count = 0;
        put(u);
    }
    {  // rule 7: no resolved state
        UserRecord u = base_user("uG");
        u.resolved_state.reset();
        u.per_state_tweet_counts.clear();
        put(u);
    }
    {  // rule 8: only one tweet attributable to the resolved state
        UserRecord u = base_user("uH");
        u.per_state_tweet_counts["NY"] = 1;
        put(u);
    }
    put(base_user("uI"));
    put(base_user("uJ"));
    put(base_user("uK"));
    put(base_user("uL"));

    FilterOptions opts;
    opts.window_end = 1520000000;
    auto [kept, report] = apply_filters(users, opts);

    CHECK(kept == std::set<std::string>{"uI", "uJ", "uK", "uL"});
    for (int r = 0; r < 8; ++r) {
        INFO("rule " << r + 1);
        CHECK(report.excluded_by_rule[static_cast<std::size_t>(r)] == 1);
    }
    CHECK(report.kept_count == 4);

    SECTION("exclusion counts plus kept always sum to the input size") {
        std::int64_t total = report.kept_count;
        for (auto c : report.excluded_by_rule) total += c;
        CHECK(total == static_cast<std::int64_t>(users.size()));
    }

    SECTION("filtering is idempotent with a frozen rule-2 cutoff") {
        std::map<std::string, UserRecord> survivors;
        for (const auto& id : kept) survivors[id] = users.at(id);
        FilterOptions again = opts;
        again.frozen_rule2 = std::set<std::string>{};  // cutoff frozen from first pass
        auto [kept2, report2] = apply_filters(survivors, again);
        CHECK(kept2 == kept);
        for (auto c : report2.excluded_by_rule) CHECK(c == 0);
    }
}

TEST_CASE("boundary pins: exactly 5 followers kept, ratio exactly 10 kept") {
    std::map<std::string, UserRecord> users;
    UserRecord u = base_user("u1");
    u.followers_count = 5;
    u.friends_count = 50;  // ratio exactly 10
    users["u1"] = u;
    FilterOptions opts;
    opts.window_end = 1520000000;
    opts.frozen_rule2 = std::set<std::string>{};  // isolate the boundary rules
    auto [kept, report] = apply_filters(users, opts);
    CHECK(kept.count("u1") == 1);
}

TEST_CASE("empty input yields an empty kept set and a zeroed report") {
    FilterOptions opts;
    opts.window_end = 1520000000;
    auto [kept, report] = apply_filters({}, opts);
    CHECK(kept.empty());
    CHECK(report.kept_count == 0);
    for (auto c : report.excluded_by_rule) CHECK(c == 0);
}
