#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "stancekit/models.hpp"

using namespace stancekit;

namespace {

double train_accuracy(const TrainedClassifier& m, const Rows& X, const std::vector<int>& y) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (m.predict(X[i]) == y[i]) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(X.size());
}

// two gaussian blobs separated along x
std::pair<Rows, std::vector<int>> separable_blobs(int per_class, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    Rows X;
    std::vector<int> y;
    for (int i = 0; i < per_class; ++i) {
        X.push_back({-2.0 + g(rng), g(rng)});
        y.push_back(0);
        X.push_back({2.0 + g(rng), g(rng)});
        y.push_back(1);
    }
    return {X, y};
}

std::pair<Rows, std::vector<int>> xor_blobs(int per_corner, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, 0.2);
    Rows X;
    std::vector<int> y;
    const double c[4][2] = {{-1, -1}, {1, 1}, {-1, 1}, {1, -1}};
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < per_corner; ++i) {
            X.push_back({c[k][0] + g(rng), c[k][1] + g(rng)});
            y.push_back(k < 2 ? 0 : 1);
        }
    }
    return {X, y};
}

}  // namespace

TEST_CASE("class_weights follows n / (k n_j)") {
    std::vector<int> labels;
    for (int i = 0; i < 631; ++i) labels.push_back(1);
    for (int i = 0; i < 575; ++i) labels.push_back(0);
    auto w = class_weights(labels);
    CHECK(w.at(1) == Catch::Approx(0.9556).margin(5e-5));
    CHECK(w.at(0) == Catch::Approx(1.0487).margin(5e-5));

    SECTION("weighted counts recover n") {
        double total = w.at(1) * 631.0 + w.at(0) * 575.0;
        CHECK(total == Catch::Approx(1206.0).epsilon(1e-12));
    }
    SECTION("9:1 imbalance") {
        std::vector<int> l(9, 0);
        l.push_back(1);
        auto w2 = class_weights(l);
        CHECK(w2.at(0) == Catch::Approx(10.0 / 18.0).epsilon(1e-12));
        CHECK(w2.at(1) == Catch::Approx(5.0).epsilon(1e-12));
    }
    SECTION("empty labels rejected") {
        CHECK_THROWS_AS(class_weights({}), std::invalid_argument);
    }
}

TEST_CASE("logistic gradient matches central finite differences") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    Rows X(8, std::vector<double>(3));
    std::vector<int> y(8);
    for (std::size_t i = 0; i < 8; ++i) {
        for (double& v : X[i]) v = g(rng);
        y[i] = i % 2 == 0 ? 1 : 0;
    }
    std::vector<double> sw(8, 1.0);
    sw[2] = 2.5;  // exercise the weighting path
    std::vector<double> beta{0.3, -0.7, 1.1, 0.2};
    const double C = 2.0;

    auto grad = logistic_grad(X, y, sw, beta, C);
    const double h = 1e-6;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        std::vector<double> bp(beta), bm(beta);
        bp[j] += h;
        bm[j] -= h;
        double numeric = (logistic_loss(X, y, sw, bp, C) - logistic_loss(X, y, sw, bm, C)) / (2.0 * h);
        CHECK(grad[j] == Catch::Approx(numeric).margin(1e-5));
    }
}

TEST_CASE("logreg and svm separate linearly separable blobs") {
    auto [X, y] = separable_blobs(20, 1);
    for (ClassifierKind kind : {ClassifierKind::logreg, ClassifierKind::linear_svm}) {
        ClassifierSpec spec;
        spec.kind = kind;
        TrainedClassifier m = train_classifier(X, y, spec);
        CHECK(train_accuracy(m, X, y) == 1.0);
        CHECK(m.linear.coefficients[0] > 0.0);  // positive class lives at x > 0
    }
}

TEST_CASE("flipping the labels flips every prediction") {
    auto [X, y] = separable_blobs(15, 3);
    std::vector<int> flipped(y);
    for (int& v : flipped) v = 1 - v;
    ClassifierSpec spec;
    TrainedClassifier a = train_classifier(X, y, spec);
    TrainedClassifier b = train_classifier(X, flipped, spec);
    for (const auto& x : X) CHECK(a.predict(x) == 1 - b.predict(x));
}

TEST_CASE("logreg recovers the direction of a planted model") {
    std::mt19937 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Rows X;
    std::vector<int> y;
    for (int i = 0; i < 2000; ++i) {
        double x1 = g(rng), x2 = g(rng);
        double eta = 2.0 * x1 - 1.0 * x2;
        double p = 1.0 / (1.0 + std::exp(-eta));
        X.push_back({x1, x2});
        y.push_back(u(rng) < p ? 1 : 0);
    }
    ClassifierSpec spec;
    spec.C = 1000.0;
    LinearModel m = train_logreg(X, y, spec);
    CHECK(m.coefficients[0] > 0.0);
    CHECK(m.coefficients[1] < 0.0);
    CHECK(m.coefficients[0] / -m.coefficients[1] == Catch::Approx(2.0).margin(0.6));

    TrainedClassifier tc{ClassifierKind::logreg, m, {}};
    CHECK(train_accuracy(tc, X, y) > 0.8);
}

TEST_CASE("random forest solves xor where the linear models cannot") {
    auto [X, y] = xor_blobs(15, 7);
    ClassifierSpec rf;
    rf.kind = ClassifierKind::random_forest;
    rf.seed = 2;
    ClassifierSpec lr;
    lr.kind = ClassifierKind::logreg;
    double rf_acc = train_accuracy(train_classifier(X, y, rf), X, y);
    double lr_acc = train_accuracy(train_classifier(X, y, lr), X, y);
    CHECK(rf_acc >= 0.95);
    CHECK(lr_acc <= 0.7);
}

TEST_CASE("random forest is deterministic in its seed") {
    auto [X, y] = xor_blobs(10, 9);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::random_forest;
    spec.seed = 42;
    TrainedClassifier a = train_classifier(X, y, spec);
    TrainedClassifier b = train_classifier(X, y, spec);
    for (const auto& x : X) CHECK(a.predict(x) == b.predict(x));
}

TEST_CASE("summarize_folds uses the population standard deviation") {
    Metrics f1, f2;
    f1.accuracy = 0.6;
    f2.accuracy = 0.8;
    CVResult r = summarize_folds({f1, f2});
    CHECK(r.mean.accuracy == Catch::Approx(0.7).epsilon(1e-12));
    CHECK(r.stddev.accuracy == Catch::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("kfold_cv accounts for every row exactly once") {
    auto [X, y] = separable_blobs(25, 13);
    ClassifierSpec spec;
    CVResult r = kfold_cv(spec, X, y, 5, 99);
    REQUIRE(r.folds.size() == 5);
    CHECK(r.mean.accuracy > 0.95);

    SECTION("identical seeds reproduce the folds") {
        CVResult r2 = kfold_cv(spec, X, y, 5, 99);
        for (std::size_t f = 0; f < 5; ++f) {
            CHECK(r2.folds[f].accuracy == r.folds[f].accuracy);
            CHECK(r2.folds[f].f1 == r.folds[f].f1);
        }
    }
    SECTION("n < k is rejected") {
        Rows tiny(X.begin(), X.begin() + 3);
        std::vector<int> ty(y.begin(), y.begin() + 3);
        CHECK_THROWS_AS(kfold_cv(spec, tiny, ty, 5, 1), std::invalid_argument);
    }
}

TEST_CASE("ablation emits full, only, excluded and cumulative rows") {
    auto [X, y] = separable_blobs(25, 21);
    FeatureMatrix m([&] {
        std::vector<std::string> keys;
        for (std::size_t i = 0; i < X.size(); ++i) keys.push_back("u" + std::to_string(i));
        return keys;
    }());
    std::vector<double> c0, c1, noise;
    std::mt19937 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (const auto& row : X) {
        c0.push_back(row[0]);
        c1.push_back(row[1]);
        noise.push_back(g(rng));
    }
    m.add_column("sig_x", "t", c0);
    m.add_column("sig_y", "t", c1);
    m.add_column("noise_z", "t", noise);

    std::map<std::string, std::vector<std::string>> groups{
        {"A", {"sig_x", "sig_y"}},
        {"B", {"noise_z"}},
    };
    ClassifierSpec spec;
    AblationReport rep = ablation(groups, spec, m, y, 5, 7, {{"A"}, {"A", "B"}});

    std::vector<std::string> names;
    for (const auto& row : rep.rows) names.push_back(row.name);
    CHECK(names == std::vector<std::string>{"full", "A_only", "A_excluded", "B_only", "B_excluded",
                                            "cum_A", "cum_AB"});

    auto row_of = [&](const std::string& n) {
        for (const auto& row : rep.rows) {
            if (row.name == n) return row;
        }
        FAIL("missing row " << n);
        return rep.rows[0];
    };
    CHECK(row_of("A_excluded").columns == std::vector<std::string>{"noise_z"});
    CHECK(row_of("full").columns.size() == 3);
    // identical column lists and seeds give identical results
    CHECK(row_of("cum_AB").cv.mean.accuracy == row_of("full").cv.mean.accuracy);
    // the informative group alone beats the noise group alone
    CHECK(row_of("A_only").cv.mean.accuracy > row_of("B_only").cv.mean.accuracy);

    SECTION("unknown cumulative group is rejected") {
        CHECK_THROWS_AS(ablation(groups, spec, m, y, 5, 7, {{"Z"}}), std::invalid_argument);
    }
}

TEST_CASE("ols ablation r-squared grows with nested feature sets") {
    std::mt19937 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 30;
    std::vector<std::string> keys;
    std::vector<double> a(n), b(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        keys.push_back("s" + std::to_string(i));
        a[i] = g(rng);
        b[i] = g(rng);
        y[i] = 1.5 * a[i] - 0.5 * b[i] + 0.3 * g(rng);
    }
    FeatureMatrix m(keys);
    m.add_column("a", "t", a);
    m.add_column("b", "t", b);
    std::map<std::string, std::vector<std::string>> groups{{"A", {"a"}}, {"B", {"b"}}};
    auto rows = ablation_ols(groups, m, y);

    std::map<std::string, OLSAblationRow> by_name;
    for (const auto& r : rows) by_name[r.name] = r;
    REQUIRE(by_name.count("full") == 1);
    CHECK(by_name.at("full").r_squared >= by_name.at("A_only").r_squared - 1e-12);
    CHECK(by_name.at("full").r_squared >= by_name.at("B_only").r_squared - 1e-12);
    CHECK(by_name.at("A_only").r_squared > by_name.at("B_only").r_squared);
    CHECK(by_name.at("full").f_pvalue < 0.001);
}
